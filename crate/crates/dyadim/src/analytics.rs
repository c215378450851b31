//! Closed-form probability bounds for the ratio statistics on uniformly
//! random trees.
//!
//! All bounds share the shape (1 - p)^count with a per-node probability p
//! and count = 2^{dim * level} level nodes (the subtrees below distinct
//! level nodes are disjoint, so the per-node events are independent).
//! Everything is evaluated in the log domain: count is often astronomically
//! large and p astronomically small, and the interesting regime is exactly
//! where naive arithmetic under- or overflows.
//!
//! Returned bounds are probabilities in [0, 1]. A bound whose log falls
//! below about -745 underflows to exactly 0.0; callers comparing empirical
//! frequencies against it should treat that as "far smaller than anything
//! observable", not as an error.

use std::f64::consts::LN_2;

use crate::dimension::DeltaParam;
use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::tree::{NodePath, MAX_AMBIENT_DIM};

fn check_dim(dim: u8) -> Result<u32> {
    if dim == 0 || dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    Ok(dim as u32)
}

fn check_threshold(threshold: u32) -> Result<()> {
    if threshold == 0 {
        return Err(Error::domain("event slope threshold must be >= 1"));
    }
    Ok(())
}

/// ln(1 - e^x) for x <= 0, switching series at x = -ln 2 to keep full
/// precision on both sides.
fn log1mexp(x: f64) -> f64 {
    debug_assert!(x <= 0.0);
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// (1 - e^x)^{2^count_log2} for x <= 0, in the log domain.
///
/// Below x = -700, ln(1 - e^x) = -e^x to full double precision but e^x is
/// about to denormalize, so the count is folded into the exponent instead;
/// this keeps count * e^x meaningful even when e^x alone underflows.
fn power_one_minus_exp(x: f64, count_log2: u32) -> f64 {
    debug_assert!(x <= 0.0);
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    let ln_bound = if x < -700.0 {
        -(count_log2 as f64 * LN_2 + x).exp()
    } else {
        (count_log2 as f64).exp2() * log1mexp(x)
    };
    ln_bound.exp()
}

/// ln of the Beta(1, fanout - 1) marginal CDF at c = 2^{-nm}, i.e. the
/// probability that one simplex coordinate is at most 2^{-nm}.
///
/// For fanout 2 the CDF is the identity, and below 2^{-900} the linear term
/// dominates every correction at double precision; both cases reduce to
/// ln(fanout - 1) - nm ln 2, which also keeps the formula finite when
/// 2^{-nm} itself would underflow.
fn ln_marginal_cdf_pow2(nm: u64, fanout: u32) -> f64 {
    if fanout == 2 || nm > 900 {
        ((fanout - 1) as f64).ln() - nm as f64 * LN_2
    } else {
        let c = -(nm as f64);
        let u = (fanout - 1) as f64 * (-c.exp2()).ln_1p();
        log1mexp(u)
    }
}

/// Upper bound for the probability that the level-L upper statistic stays
/// at or below threshold * m on a uniformly random tree:
///
/// ```text
///     (1 - F^{2^d})^{2^{dL}},   F = P{ simplex coordinate <= 2^{-Nm} }.
/// ```
///
/// Needs m >= 2; the single-edge case has no interior tail for the argument
/// behind the bound to bite on.
pub fn upper_tail_bound(dim: u8, threshold: u32, m: u32, level: u32) -> Result<f64> {
    let d = check_dim(dim)?;
    check_threshold(threshold)?;
    if m < 2 {
        return Err(Error::domain("upper tail bound needs tail length m >= 2"));
    }
    let fanout = 1u32 << d;
    let ln_f = ln_marginal_cdf_pow2(threshold as u64 * m as u64, fanout);
    Ok(power_one_minus_exp(fanout as f64 * ln_f, d * level))
}

/// Coarser variant of [`upper_tail_bound`] that replaces the marginal CDF by
/// its power lower bound 2^{-Nm (2^d - 1)} and counts only 2^L nodes. Never
/// smaller than the main bound, and identical to it when dim = 1.
pub fn upper_tail_bound_coarse(dim: u8, threshold: u32, m: u32, level: u32) -> Result<f64> {
    let d = check_dim(dim)?;
    check_threshold(threshold)?;
    if m < 2 {
        return Err(Error::domain("upper tail bound needs tail length m >= 2"));
    }
    let fanout = 1u32 << d;
    let nm = threshold as u64 * m as u64 * (fanout as u64 - 1);
    let ln_g = -(nm as f64) * LN_2;
    Ok(power_one_minus_exp(fanout as f64 * ln_g, level))
}

/// Upper bound for the probability that the level-L lower statistic reaches
/// m / threshold on a uniformly random tree:
///
/// ```text
///     (1 - (1 - 2^{-1/N})^{(2^d - 1) m})^{2^{dL}}.
/// ```
pub fn lower_tail_bound(dim: u8, threshold: u32, m: u32, level: u32) -> Result<f64> {
    let d = check_dim(dim)?;
    check_threshold(threshold)?;
    if m == 0 {
        return Err(Error::domain("tail length m must be >= 1"));
    }
    let fanout = 1u64 << d;
    // 1 - 2^{-1/N} via expm1: for large N the difference is ln2/N and the
    // direct subtraction would lose most of its digits.
    let base = -(-LN_2 / threshold as f64).exp_m1();
    let k = (fanout - 1) * m as u64;
    let ln_inner = k as f64 * base.ln();
    Ok(power_one_minus_exp(ln_inner, d * level))
}

/// Whether delta is small enough for the upper-tail regime at this dimension
/// and slope: delta < 1 / (N 2^d (2^d - 1)), checked in exact integers.
pub fn upper_delta_admissible(dim: u8, threshold: u32, delta: DeltaParam) -> Result<bool> {
    let d = check_dim(dim)?;
    check_threshold(threshold)?;
    let fanout = 1u128 << d;
    let k = threshold as u128 * fanout * (fanout - 1);
    Ok((delta.num() as u128) * k < delta.den() as u128)
}

/// Whether (N, delta) sit in the lower-tail regime at this dimension:
/// (1 - 2^{-1/N})^{2^d - 1} > 2^{-1/delta}. The inequality is strict and
/// never boundary-critical for rational delta, so floating evaluation of the
/// two log2 sides is enough.
pub fn lower_params_admissible(dim: u8, threshold: u32, delta: DeltaParam) -> Result<bool> {
    let d = check_dim(dim)?;
    check_threshold(threshold)?;
    let fanout = 1u64 << d;
    let base = -(-LN_2 / threshold as f64).exp_m1();
    let lhs_log2 = (fanout - 1) as f64 * base.log2();
    let rhs_log2 = -(delta.den() as f64) / delta.num() as f64;
    Ok(lhs_log2 > rhs_log2)
}

/// Expected mass of the cube at `path` on a uniformly random tree: each edge
/// weight has mean 2^{-d}, independently along the path, so the product has
/// mean 2^{-d * level} exactly.
pub fn predicted_cube_mass(path: &NodePath) -> LogMass {
    LogMass::from_log2(-((path.level() as f64) * path.ambient_dim() as f64))
}

/// P{ U_1 ... U_m >= t } for independent uniform draws on (0,1), which is
/// the probability that a sum of m standard exponentials stays below
/// ln(1/t).
///
/// Evaluated as a Poisson tail: with x = ln(1/t),
///
/// ```text
///     P = e^{-x} sum_{k >= m} x^k / k!        (x < m)
///     P = 1 - e^{-x} sum_{k < m} x^k / k!     (x >= m)
/// ```
///
/// The split keeps every term positive on the side where the sum is the
/// small part, so there is no cancellation in either branch.
pub fn product_uniform_tail(m: u32, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("product of zero uniforms is undefined; need m >= 1"));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("threshold t = {t} outside (0, 1]")));
    }
    let x = -t.ln();
    if x < m as f64 {
        // Ascending remainder: term k = e^{-x} x^k / k!, starting at k = m.
        let mut term = (-x).exp();
        for k in 1..=m as u64 {
            term *= x / k as f64;
        }
        let mut sum = term;
        let mut k = m as u64;
        loop {
            k += 1;
            term *= x / k as f64;
            sum += term;
            if term <= sum * 1e-18 {
                return Ok(sum);
            }
        }
    } else {
        // Complementary finite sum; e^{-x} may underflow, which only means
        // the answer is 1 to double precision.
        let mut term = (-x).exp();
        let mut sum = term;
        for k in 1..m as u64 {
            term *= x / k as f64;
            sum += term;
        }
        Ok(1.0 - sum)
    }
}

#[cfg(test)]
// Frozen reference values keep every digit of the 50-digit computation that
// produced them; the compiler rounds to the nearest f64.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::random::NodeRng;
    use crate::tree::NodePath;

    fn assert_rel(got: f64, want: f64, tol: f64, what: &str) {
        let rel = ((got - want) / want).abs();
        assert!(rel < tol, "{what}: got {got:.17e}, want {want:.17e}, rel {rel:.3e}");
    }

    #[test]
    fn upper_bound_reference_values() {
        // d = 1, slope 1, level = floor(5m/2).
        assert_eq!(upper_tail_bound(1, 1, 2, 1).unwrap(), 0.87890625);
        assert_rel(
            upper_tail_bound(1, 1, 2, 5).unwrap(),
            0.12678878637700035679,
            1e-12,
            "d1 m2 L5",
        );
        assert_rel(
            upper_tail_bound(1, 1, 4, 10).unwrap(),
            0.018172734640507619924,
            1e-12,
            "d1 m4 L10",
        );
        assert_rel(
            upper_tail_bound(1, 1, 6, 15).unwrap(),
            0.00033513513431088414544,
            1e-12,
            "d1 m6 L15",
        );
        assert_rel(
            upper_tail_bound(1, 1, 8, 20).unwrap(),
            1.125214382140055595e-7,
            1e-12,
            "d1 m8 L20",
        );
        assert_rel(
            upper_tail_bound(1, 1, 12, 30).unwrap(),
            1.603807832e-28,
            1e-9,
            "d1 m12 L30",
        );
        assert_rel(
            upper_tail_bound(2, 1, 2, 2).unwrap(),
            0.15027492942149217962,
            1e-12,
            "d2 m2 L2",
        );
        assert_rel(
            upper_tail_bound(2, 1, 3, 4).unwrap(),
            0.047027915406499228123,
            1e-12,
            "d2 m3 L4",
        );
    }

    #[test]
    fn coarse_bound_reference_and_dominance() {
        assert_rel(
            upper_tail_bound_coarse(2, 1, 2, 2).unwrap(),
            0.99999976158144221472,
            1e-12,
            "coarse d2 m2 L2",
        );
        assert_rel(
            upper_tail_bound(1, 1, 3, 5).unwrap(),
            0.6041411459616928098,
            1e-12,
            "d1 m3 L5",
        );
        for dim in 1..=3u8 {
            for threshold in 1..=2u32 {
                for m in 2..=6u32 {
                    for level in 1..=12u32 {
                        let main = upper_tail_bound(dim, threshold, m, level).unwrap();
                        let coarse = upper_tail_bound_coarse(dim, threshold, m, level).unwrap();
                        assert!(
                            main <= coarse,
                            "main {main} > coarse {coarse} at d={dim} N={threshold} m={m} L={level}"
                        );
                        if dim == 1 {
                            assert_eq!(main, coarse, "d=1 forms must coincide");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn lower_bound_reference_values() {
        assert_rel(lower_tail_bound(1, 1, 1, 1).unwrap(), 0.25, 1e-14, "d1 N1 m1 L1");
        assert_rel(
            lower_tail_bound(1, 2, 2, 4).unwrap(),
            0.2381017329359147584,
            1e-12,
            "d1 N2 m2 L4",
        );
        assert_rel(
            lower_tail_bound(1, 2, 4, 8).unwrap(),
            0.1509282512475838854,
            1e-12,
            "d1 N2 m4 L8",
        );
        assert_rel(
            lower_tail_bound(1, 2, 6, 12).unwrap(),
            0.075264915912972694553,
            1e-12,
            "d1 N2 m6 L12",
        );
        assert_rel(
            lower_tail_bound(1, 2, 8, 16).unwrap(),
            0.028739229739047073662,
            1e-12,
            "d1 N2 m8 L16",
        );
        assert_rel(
            lower_tail_bound(2, 2, 3, 6).unwrap(),
            0.93709075634310903512,
            1e-12,
            "d2 N2 m3 L6",
        );
    }

    #[test]
    fn lower_bound_decreases_along_the_doubling_schedule() {
        let mut prev = 1.0;
        for m in 1..=8u32 {
            let bound = lower_tail_bound(1, 2, m, 2 * m).unwrap();
            assert!(bound < prev, "m={m}: {bound} !< {prev}");
            prev = bound;
        }
    }

    #[test]
    fn extreme_parameters_underflow_to_zero() {
        assert_eq!(upper_tail_bound(3, 1, 4, 10).unwrap(), 0.0);
        // Sanity on the other end: a huge per-node exponent with few nodes
        // keeps the bound at 1 instead of producing NaN.
        let near_one = lower_tail_bound(1, 64, 1, 0).unwrap();
        assert!(near_one > 0.98 && near_one <= 1.0);
    }

    #[test]
    fn bound_domain_errors() {
        assert!(upper_tail_bound(0, 1, 2, 1).is_err());
        assert!(upper_tail_bound(9, 1, 2, 1).is_err());
        assert!(upper_tail_bound(1, 0, 2, 1).is_err());
        assert!(upper_tail_bound(1, 1, 1, 1).is_err());
        assert!(lower_tail_bound(1, 1, 0, 1).is_err());
        assert!(product_uniform_tail(0, 0.5).is_err());
        assert!(product_uniform_tail(2, 0.0).is_err());
        assert!(product_uniform_tail(2, 1.5).is_err());
    }

    #[test]
    fn admissibility_thresholds() {
        let half: DeltaParam = "1/2".parse().unwrap();
        let two_fifths: DeltaParam = "2/5".parse().unwrap();
        let third: DeltaParam = "1/3".parse().unwrap();
        let one: DeltaParam = "1/1".parse().unwrap();

        assert!(upper_delta_admissible(1, 1, two_fifths).unwrap());
        assert!(!upper_delta_admissible(1, 1, half).unwrap()); // boundary is excluded
        assert!(!upper_delta_admissible(2, 1, two_fifths).unwrap()); // needs < 1/12
        assert!(upper_delta_admissible(2, 1, "1/13".parse().unwrap()).unwrap());

        assert!(lower_params_admissible(1, 2, half).unwrap());
        assert!(lower_params_admissible(1, 1, half).unwrap());
        assert!(lower_params_admissible(1, 2, third).unwrap());
        assert!(!lower_params_admissible(1, 2, one).unwrap());
        assert!(!lower_params_admissible(2, 2, half).unwrap()); // cubed base is too small
    }

    #[test]
    fn product_tail_reference_values() {
        assert_eq!(product_uniform_tail(1, 0.5).unwrap(), 0.5);
        assert_rel(
            product_uniform_tail(2, (-1.0f64).exp()).unwrap(),
            0.26424111765711535681,
            1e-14,
            "m2 t=1/e",
        );
        let cases = [
            (2u32, 0.1, 0.6697414907005954316),
            (2, 0.5, 0.15342640972002734529),
            (2, 0.9, 0.0051755359079563288952),
            (3, 0.1, 0.40464658517667553107),
            (3, 0.2, 0.21908337811515643056),
            (3, 0.5, 0.033313156240476989125),
            (3, 0.9, 0.00018015869109895136043),
            (5, 0.1, 0.084053211056101215069),
            (5, 0.5, 0.00075203735425196056705),
            (5, 0.9, 9.9111730264572909269e-8),
            (4, 0.25, 0.052191685431283473052),
        ];
        for (m, t, want) in cases {
            assert_rel(product_uniform_tail(m, t).unwrap(), want, 1e-13, "product tail");
        }
        assert_eq!(product_uniform_tail(3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn product_tail_at_the_geometric_mean_decreases_toward_a_half() {
        // P{ prod U >= e^{-m} }: largest at m = 1 where it is 1 - 1/e, and
        // decreasing toward 1/2 as the exponential sums concentrate.
        let first = product_uniform_tail(1, (-1.0f64).exp()).unwrap();
        assert!((first - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for m in 1..=12u32 {
            let p = product_uniform_tail(m, (-(m as f64)).exp()).unwrap();
            assert!(p < prev, "m={m}: {p} !< {prev}");
            assert!(p > 0.5);
            prev = p;
        }
    }

    #[test]
    fn product_tail_dominates_the_per_factor_bound() {
        // {every U_i >= 2^{-1/N}} forces the product above 2^{-m/N}, so the
        // tail is at least (1 - 2^{-1/N})^m by independence.
        for threshold in 1..=3u32 {
            let per = -(-LN_2 / threshold as f64).exp_m1();
            for m in 1..=10u32 {
                let t = (-(m as f64) / threshold as f64).exp2();
                let tail = product_uniform_tail(m, t).unwrap();
                let floor = per.powi(m as i32);
                // Equality at m = 1, so allow an ulp of slack there.
                assert!(
                    tail >= floor * (1.0 - 1e-12),
                    "N={threshold} m={m}: tail {tail} < floor {floor}"
                );
            }
        }
    }

    #[test]
    fn product_tail_matches_monte_carlo() {
        let mut rng = NodeRng::from_key(0x9D1A_2F4B);
        let trials = 200_000usize;
        for m in [2u32, 3, 5] {
            for t in [0.1f64, 0.5, 0.9] {
                let mut hits = 0usize;
                for _ in 0..trials {
                    let mut prod = 1.0;
                    for _ in 0..m {
                        prod *= rng.next_unit();
                    }
                    if prod >= t {
                        hits += 1;
                    }
                }
                let freq = hits as f64 / trials as f64;
                let p = product_uniform_tail(m, t).unwrap();
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * sigma,
                    "m={m} t={t}: freq {freq} vs p {p} (3 sigma = {:.3e})",
                    3.0 * sigma
                );
            }
        }
    }

    #[test]
    fn expected_cube_mass_is_dyadic() {
        let root = NodePath::root(2).unwrap();
        assert_eq!(predicted_cube_mass(&root).log2(), 0.0);
        let node = NodePath::from_digits(2, &[0, 3, 1]).unwrap();
        assert_eq!(predicted_cube_mass(&node).log2(), -6.0);
        let deep = NodePath::from_digits(1, &[0, 1, 0, 1]).unwrap();
        assert_eq!(predicted_cube_mass(&deep).log2(), -4.0);
    }
}
