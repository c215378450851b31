//! Deterministic per-node randomness, simplex sampling, and the marginal
//! checks used to validate it.
//!
//! Every tree node owns its own stream of 64-bit words, derived purely from
//! `(master_seed, path)`. Querying nodes in any order, from any thread, or
//! not at all never changes what another node sees, which is what makes the
//! streaming statistics embarrassingly parallel and bit-reproducible.
//!
//! The derivation is frozen so that files and experiment reports can be
//! reproduced independently:
//!
//! * path encoding: the level as 8 big-endian bytes, then one byte per digit
//!   (root encodes as eight zero bytes);
//! * key = splitmix64-finalizer of an FNV-1a fold of those bytes, seeded
//!   with the finalized master seed;
//! * stream word i = splitmix64 step i+1 from that key (state += golden
//!   ratio constant, then the finalizer);
//! * unit draws map a word w to ((w >> 12) + 0.5) * 2^-52, which lies
//!   strictly inside (0, 1) so logs of draws are always finite. Keeping 52
//!   bits (not 53) matters: (k + 0.5) is exact for k < 2^52, while the
//!   53-bit top value 2^53 - 0.5 would round to 2^53 and the draw to 1.0.
//!
//! Trial streams for Monte Carlo experiments reuse the same fold but start
//! the encoding with a 0xFF tag byte. A node encoding always starts with the
//! top byte of its level, which is zero for any representable level, so
//! trial streams can never collide with node streams.

use crate::error::{Error, Result};
use crate::tree::NodePath;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;
const TRIAL_TAG: u8 = 0xFF;
const UNIT_SCALE: f64 = 1.0 / (1u64 << 52) as f64;

/// splitmix64 finalizer: a fixed 64-bit avalanche permutation.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fold_byte(h: u64, b: u8) -> u64 {
    (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
}

fn fold_level_prefix(master_seed: u64, level: u64) -> u64 {
    let mut h = mix64(master_seed);
    for b in level.to_be_bytes() {
        h = fold_byte(h, b);
    }
    h
}

/// The stream key for `path` under `master_seed`.
pub fn node_key(master_seed: u64, path: &NodePath) -> u64 {
    let mut h = fold_level_prefix(master_seed, path.level() as u64);
    for &digit in path.digits() {
        h = fold_byte(h, digit);
    }
    mix64(h)
}

/// The master seed of trial `trial` in a Monte Carlo run, disjoint from
/// every node stream by the tag byte.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    let mut h = mix64(master_seed);
    h = fold_byte(h, TRIAL_TAG);
    for b in trial.to_be_bytes() {
        h = fold_byte(h, b);
    }
    mix64(h)
}

/// Counter-based generator: word i is a pure function of (key, i), so any
/// position of the stream is reachable in O(1) and streams never share state.
#[derive(Debug, Clone)]
pub struct NodeRng {
    state: u64,
}

impl NodeRng {
    pub fn from_key(key: u64) -> Self {
        NodeRng { state: key }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw strictly inside (0, 1).
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        // (k + 0.5) * 2^-52 is exactly representable for every k < 2^52, so
        // the draw never rounds onto an endpoint.
        ((self.next_u64() >> 12) as f64 + 0.5) * UNIT_SCALE
    }

    /// Standard exponential via inversion; strictly positive and finite.
    #[inline]
    pub fn next_exp(&mut self) -> f64 {
        -self.next_unit().ln()
    }
}

/// The generator owned by `path` under `master_seed`.
pub fn derive_generator(master_seed: u64, path: &NodePath) -> NodeRng {
    NodeRng::from_key(node_key(master_seed, path))
}

/// Normalizes explicit exponential draws to a simplex point.
///
/// Split out from the sampler so tests can drive it with known inputs.
pub fn simplex_from_exponentials(exps: &[f64]) -> Result<Vec<f64>> {
    if exps.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sum = 0.0;
    for (i, &e) in exps.iter().enumerate() {
        if !e.is_finite() || e < 0.0 {
            return Err(Error::domain(format!(
                "exponential draw {e} at index {i} is not a finite nonnegative number"
            )));
        }
        sum += e;
    }
    if sum <= 0.0 {
        return Err(Error::domain("exponential draws sum to zero"));
    }
    Ok(exps.iter().map(|&e| e / sum).collect())
}

/// Samples a uniform point of the standard (n-1)-simplex: n exponential
/// spacings normalized by their sum. Consumes exactly n words of `rng`,
/// including the degenerate n = 1 case which returns [1.0].
pub fn sample_uniform_simplex(rng: &mut NodeRng, n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    sample_uniform_simplex_into(rng, &mut out)?;
    Ok(out)
}

/// Buffer-reusing form of `sample_uniform_simplex` for traversal loops.
pub fn sample_uniform_simplex_into(rng: &mut NodeRng, out: &mut [f64]) -> Result<()> {
    let n = out.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if n == 1 {
        rng.next_u64(); // keep the consumption contract uniform in n
        out[0] = 1.0;
        return Ok(());
    }
    let mut sum = 0.0;
    for slot in out.iter_mut() {
        let e = rng.next_exp();
        *slot = e;
        sum += e;
    }
    let inv = 1.0 / sum;
    for slot in out.iter_mut() {
        *slot *= inv;
    }
    Ok(())
}

/// CDF of the first coordinate of a uniform simplex point: Beta(1, n-1),
/// i.e. F(c) = 1 - (1-c)^{n-1}, evaluated in log1p form for small c.
pub fn beta_cdf(c: f64, n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!(
            "Beta(1, n-1) marginal needs n >= 2 components, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::domain(format!("marginal CDF argument {c} outside [0, 1]")));
    }
    if n == 2 {
        return Ok(c); // identity; skip the expm1/ln1p round trip error
    }
    Ok(-((n - 1) as f64 * (-c).ln_1p()).exp_m1())
}

/// Two-sided Kolmogorov-Smirnov distance between sorted samples and `cdf`:
/// sup over the sample of max(|F(x) - i/n|, |F(x) - (i+1)/n|).
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for (i, &x) in sorted.iter().enumerate() {
        if x.is_nan() || x < prev {
            return Err(Error::UnsortedSample { index: i });
        }
        prev = x;
        let f = cdf(x);
        let lo = (f - i as f64 / n).abs();
        let hi = (f - (i as f64 + 1.0) / n).abs();
        sup = sup.max(lo).max(hi);
    }
    Ok(sup)
}

/// Asymptotic two-sided KS critical value at significance 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}
