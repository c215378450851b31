//! Probability measures on [0,1]^d presented as weighted 2^d-ary trees.
//!
//! A measure assigns every node a weight vector over its 2^d children that
//! sums to one; the mass of a node is the product of the edge weights along
//! its path. Three families are provided: seeded random measures (fresh
//! uniform simplex weights at every node), product measures (one weight
//! vector reused everywhere), and explicit measures loaded from JSON files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::random::{derive_generator, sample_uniform_simplex_into};
use crate::tree::{NodePath, MAX_AMBIENT_DIM};

/// Loader tolerance: per-node weight sums may deviate from 1 by this much
/// before the file is rejected; accepted vectors are renormalized.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A weighted 2^d-ary tree seen through its edge-weight vectors.
///
/// Implementations must be pure: the same node always yields the same
/// weights, regardless of query order or thread. Everything downstream
/// (streaming statistics, parallel experiments, file snapshots) leans on
/// that.
pub trait Measure: Sync {
    fn ambient_dim(&self) -> u8;

    /// Writes the weights of `node`'s 2^d child edges into `out`
    /// (`out.len()` must equal the fanout).
    fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> Result<()>;

    fn fanout(&self) -> usize {
        1usize << self.ambient_dim()
    }

    fn edge_weights(&self, node: &NodePath) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.fanout()];
        self.edge_weights_into(node, &mut out)?;
        Ok(out)
    }

    /// True when every node carries the same weight vector. Statistics may
    /// then use closed-form evaluation; results must be identical either way.
    fn is_node_homogeneous(&self) -> bool {
        false
    }

    /// log2-domain mass of `path`: the product of edge weights from the root.
    fn mass(&self, path: &NodePath) -> Result<LogMass> {
        check_node_dim(self, path)?;
        let mut buf = [0.0f64; 1 << MAX_AMBIENT_DIM];
        let fanout = self.fanout();
        let mut prefix = NodePath::root(self.ambient_dim())?;
        let mut acc = 0.0f64;
        for &digit in path.digits() {
            self.edge_weights_into(&prefix, &mut buf[..fanout])?;
            acc += buf[digit as usize].log2();
            prefix.push(digit);
        }
        Ok(LogMass::from_log2(acc))
    }
}

pub(crate) fn check_node_dim<M: Measure + ?Sized>(measure: &M, node: &NodePath) -> Result<()> {
    if node.ambient_dim() != measure.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: measure.ambient_dim(),
            got: node.ambient_dim(),
        });
    }
    Ok(())
}

fn validate_weights(dim: u8, weights: &[f64]) -> Result<f64> {
    let fanout = 1usize << dim;
    if weights.len() != fanout {
        return Err(Error::WeightCount { expected: fanout, got: weights.len() });
    }
    let mut sum = 0.0;
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::WeightOutOfRange { index, value: w });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightSumOffUnit { sum });
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Random measures
// ---------------------------------------------------------------------------

/// The seeded random measure: every node draws an independent uniform
/// simplex weight vector from its own derived stream.
#[derive(Debug, Clone)]
pub struct RandomMeasure {
    dim: u8,
    seed: u64,
}

/// Builds the random measure of dimension `dim` under `seed`.
pub fn make_random_measure(dim: u8, seed: u64) -> Result<RandomMeasure> {
    if dim == 0 || dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    Ok(RandomMeasure { dim, seed })
}

impl RandomMeasure {
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Measure for RandomMeasure {
    fn ambient_dim(&self) -> u8 {
        self.dim
    }

    fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> Result<()> {
        check_node_dim(self, node)?;
        if out.len() != self.fanout() {
            return Err(Error::WeightCount { expected: self.fanout(), got: out.len() });
        }
        let mut rng = derive_generator(self.seed, node);
        sample_uniform_simplex_into(&mut rng, out)
    }
}

// ---------------------------------------------------------------------------
// Product measures
// ---------------------------------------------------------------------------

/// One fixed weight vector reused at every node.
#[derive(Debug, Clone)]
pub struct ProductMeasure {
    dim: u8,
    weights: Vec<f64>,
}

/// Builds a product measure from a single weight vector of length 2^d.
/// The vector must sum to 1 within 1e-9 and is renormalized exactly.
pub fn make_product_measure(dim: u8, weights: &[f64]) -> Result<ProductMeasure> {
    if dim == 0 || dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    let sum = validate_weights(dim, weights)?;
    let weights = weights.iter().map(|&w| w / sum).collect();
    Ok(ProductMeasure { dim, weights })
}

/// Lebesgue measure on [0,1]^d: uniform weights 2^-d.
pub fn lebesgue(dim: u8) -> Result<ProductMeasure> {
    if dim == 0 || dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(dim));
    }
    let fanout = 1usize << dim;
    Ok(ProductMeasure { dim, weights: vec![1.0 / fanout as f64; fanout] })
}

/// The biased-coin measure on [0,1]: weights (p, 1-p).
pub fn bernoulli(p: f64) -> Result<ProductMeasure> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("Bernoulli parameter {p} outside [0, 1]")));
    }
    Ok(ProductMeasure { dim: 1, weights: vec![p, 1.0 - p] })
}

impl ProductMeasure {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Measure for ProductMeasure {
    fn ambient_dim(&self) -> u8 {
        self.dim
    }

    fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> Result<()> {
        check_node_dim(self, node)?;
        if out.len() != self.fanout() {
            return Err(Error::WeightCount { expected: self.fanout(), got: out.len() });
        }
        out.copy_from_slice(&self.weights);
        Ok(())
    }

    fn is_node_homogeneous(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Explicit measures and their file format
// ---------------------------------------------------------------------------

/// What an explicit measure does below its stored nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuation {
    /// Unstored nodes get uniform weights 2^-d.
    Uniform,
    /// Querying an unstored node is an error.
    Error,
}

impl Continuation {
    pub fn as_str(self) -> &'static str {
        match self {
            Continuation::Uniform => "uniform",
            Continuation::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Continuation::Uniform),
            "error" => Ok(Continuation::Error),
            other => Err(Error::Parse(format!(
                "unknown continuation policy `{other}` (expected `uniform` or `error`)"
            ))),
        }
    }
}

/// A measure given by explicit per-node weight vectors plus a continuation
/// policy for everything else.
#[derive(Debug, Clone)]
pub struct ExplicitMeasure {
    dim: u8,
    nodes: BTreeMap<NodePath, Vec<f64>>,
    continuation: Continuation,
}

impl ExplicitMeasure {
    pub fn new(dim: u8, continuation: Continuation) -> Result<Self> {
        if dim == 0 || dim > MAX_AMBIENT_DIM {
            return Err(Error::DimensionOutOfRange(dim));
        }
        Ok(ExplicitMeasure { dim, nodes: BTreeMap::new(), continuation })
    }

    /// Stores (validated, renormalized) weights for one node.
    pub fn insert(&mut self, node: NodePath, weights: &[f64]) -> Result<()> {
        check_node_dim(self, &node)?;
        let sum = validate_weights(self.dim, weights)?;
        self.nodes.insert(node, weights.iter().map(|&w| w / sum).collect());
        Ok(())
    }

    pub fn continuation(&self) -> Continuation {
        self.continuation
    }

    pub fn stored_nodes(&self) -> impl Iterator<Item = (&NodePath, &[f64])> {
        self.nodes.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn stored_len(&self) -> usize {
        self.nodes.len()
    }
}

impl Measure for ExplicitMeasure {
    fn ambient_dim(&self) -> u8 {
        self.dim
    }

    fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> Result<()> {
        check_node_dim(self, node)?;
        if out.len() != self.fanout() {
            return Err(Error::WeightCount { expected: self.fanout(), got: out.len() });
        }
        match self.nodes.get(node) {
            Some(w) => out.copy_from_slice(w),
            None => match self.continuation {
                Continuation::Uniform => out.fill(1.0 / self.fanout() as f64),
                Continuation::Error => {
                    return Err(Error::BeyondStoredDepth { path: node.to_string() })
                }
            },
        }
        Ok(())
    }
}

/// On-disk form: `d`, a map from digit strings (root = "") to weight
/// vectors, and the continuation policy.
#[derive(Serialize, Deserialize)]
struct ExplicitMeasureFile {
    d: u8,
    nodes: BTreeMap<String, Vec<f64>>,
    continuation: String,
}

impl ExplicitMeasure {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ExplicitMeasureFile = serde_json::from_str(text)?;
        if file.d > 5 {
            return Err(Error::Parse(format!(
                "explicit measure files support d <= 5 (one character per digit), got d = {}",
                file.d
            )));
        }
        let mut measure = ExplicitMeasure::new(file.d, Continuation::parse(&file.continuation)?)?;
        for (key, weights) in &file.nodes {
            let node = NodePath::parse(file.d, key)?;
            measure.insert(node, weights)?;
        }
        Ok(measure)
    }

    pub fn to_json_string(&self) -> Result<String> {
        if self.dim > 5 {
            return Err(Error::Parse(format!(
                "explicit measure files support d <= 5, this measure has d = {}",
                self.dim
            )));
        }
        let file = ExplicitMeasureFile {
            d: self.dim,
            nodes: self
                .nodes
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            continuation: self.continuation.as_str().to_string(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json_string()?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Loads an explicit measure from a JSON file.
pub fn load_explicit_measure(path: &Path) -> Result<ExplicitMeasure> {
    let text = fs::read_to_string(path)?;
    ExplicitMeasure::from_json_str(&text)
}

/// Snapshots `measure` into an explicit measure holding every node of level
/// strictly below `depth`, with uniform continuation. The snapshot
/// reproduces the original masses bit for bit down to `depth`.
pub fn snapshot_measure<M: Measure + ?Sized>(measure: &M, depth: u32) -> Result<ExplicitMeasure> {
    let dim = measure.ambient_dim();
    let fanout = measure.fanout();
    let nodes_to_store: u64 = {
        // sum of fanout^l for l < depth, guarded against absurd sizes
        let mut total: u64 = 0;
        let mut level_count: u64 = 1;
        for _ in 0..depth {
            total = total
                .checked_add(level_count)
                .ok_or_else(|| Error::domain("snapshot depth overflows the node count"))?;
            level_count = level_count
                .checked_mul(fanout as u64)
                .ok_or_else(|| Error::domain("snapshot depth overflows the node count"))?;
        }
        total
    };
    if nodes_to_store > (1 << 22) {
        return Err(Error::domain(format!(
            "snapshot would store {nodes_to_store} nodes, above the 2^22 cap"
        )));
    }
    let mut out = ExplicitMeasure::new(dim, Continuation::Uniform)?;
    if depth == 0 {
        return Ok(out);
    }
    let mut buf = vec![0.0f64; fanout];
    let mut stack = vec![NodePath::root(dim)?];
    while let Some(node) = stack.pop() {
        measure.edge_weights_into(&node, &mut buf)?;
        if node.level() + 1 < depth {
            for c in 0..fanout as u8 {
                stack.push(node.child(c)?);
            }
        }
        out.nodes.insert(node, buf.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(dim: u8, digits: &[u8]) -> NodePath {
        NodePath::from_digits(dim, digits).unwrap()
    }

    #[test]
    fn random_measure_rejects_bad_dimensions() {
        assert!(make_random_measure(0, 1).is_err());
        assert!(make_random_measure(9, 1).is_err());
        assert!(make_random_measure(8, 1).is_ok());
    }

    #[test]
    fn random_weights_are_a_simplex_point_and_repeatable() {
        let mu = make_random_measure(2, 7).unwrap();
        let node = path(2, &[1, 3]);
        let w1 = mu.edge_weights(&node).unwrap();
        let w2 = mu.edge_weights(&node).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(w1.len(), 4);
        assert!((w1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w1.iter().all(|&w| w > 0.0 && w < 1.0));
    }

    #[test]
    fn random_mass_of_root_is_one() {
        let mu = make_random_measure(3, 11).unwrap();
        let root = NodePath::root(3).unwrap();
        assert_eq!(mu.mass(&root).unwrap().log2(), 0.0);
    }

    #[test]
    fn mass_is_the_product_of_edge_weights() {
        let mu = make_random_measure(1, 5).unwrap();
        let target = path(1, &[0, 1, 1]);
        let mut expected = 0.0;
        let mut prefix = NodePath::root(1).unwrap();
        for &d in target.digits() {
            let w = mu.edge_weights(&prefix).unwrap();
            expected += w[d as usize].log2();
            prefix = prefix.child(d).unwrap();
        }
        assert_eq!(mu.mass(&target).unwrap().log2(), expected);
    }

    #[test]
    fn mass_checks_dimensions() {
        let mu = make_random_measure(2, 5).unwrap();
        let wrong = path(1, &[0]);
        assert!(matches!(
            mu.mass(&wrong),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn lebesgue_mass_is_dyadic() {
        let mu = lebesgue(2).unwrap();
        let node = path(2, &[0, 3, 1]);
        assert_eq!(mu.mass(&node).unwrap().log2(), -6.0); // 3 levels * 2 bits
    }

    #[test]
    fn product_measure_renormalizes_and_validates() {
        let mu = make_product_measure(1, &[0.5, 0.5000000001]).unwrap();
        let sum: f64 = mu.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);

        assert!(matches!(
            make_product_measure(1, &[0.5, 0.6]),
            Err(Error::WeightSumOffUnit { .. })
        ));
        assert!(matches!(
            make_product_measure(1, &[0.5]),
            Err(Error::WeightCount { .. })
        ));
        assert!(make_product_measure(1, &[-0.1, 1.1]).is_err());
    }

    #[test]
    fn bernoulli_convenience() {
        let mu = bernoulli(0.3).unwrap();
        assert_eq!(mu.ambient_dim(), 1);
        assert_eq!(mu.weights(), &[0.3, 0.7]);
        assert!(mu.is_node_homogeneous());
    }

    #[test]
    fn explicit_lookup_with_uniform_continuation() {
        let mut mu = ExplicitMeasure::new(1, Continuation::Uniform).unwrap();
        mu.insert(NodePath::root(1).unwrap(), &[0.3, 0.7]).unwrap();
        // Depth-1 store, query at depth 3: stored weight times 2^-2.
        let q = path(1, &[0, 1, 0]);
        let got = mu.mass(&q).unwrap().linear();
        assert!((got - 0.3 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn explicit_error_continuation_fires_beyond_depth() {
        let mut mu = ExplicitMeasure::new(1, Continuation::Error).unwrap();
        mu.insert(NodePath::root(1).unwrap(), &[0.3, 0.7]).unwrap();
        let q = path(1, &[0, 1]);
        assert!(matches!(mu.mass(&q), Err(Error::BeyondStoredDepth { .. })));
        // Within the stored depth everything works.
        assert!(mu.mass(&path(1, &[1])).is_ok());
    }

    #[test]
    fn explicit_zero_weights_give_zero_mass() {
        let mut mu = ExplicitMeasure::new(1, Continuation::Uniform).unwrap();
        mu.insert(NodePath::root(1).unwrap(), &[1.0, 0.0]).unwrap();
        assert!(mu.mass(&path(1, &[1])).unwrap().is_zero());
        assert_eq!(mu.mass(&path(1, &[0])).unwrap().log2(), 0.0);
    }

    #[test]
    fn json_round_trip_preserves_weights_exactly() {
        let mut mu = ExplicitMeasure::new(2, Continuation::Uniform).unwrap();
        mu.insert(NodePath::root(2).unwrap(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        mu.insert(path(2, &[3]), &[0.25, 0.25, 0.25, 0.25]).unwrap();
        let text = mu.to_json_string().unwrap();
        let back = ExplicitMeasure::from_json_str(&text).unwrap();
        assert_eq!(back.stored_len(), 2);
        for (node, w) in mu.stored_nodes() {
            let got = back.edge_weights(node).unwrap();
            assert_eq!(got.as_slice(), w);
        }
    }

    #[test]
    fn loader_rejects_off_unit_sums_and_bad_keys() {
        let bad_sum = r#"{"d":1,"nodes":{"":[0.5,0.6]},"continuation":"uniform"}"#;
        assert!(matches!(
            ExplicitMeasure::from_json_str(bad_sum),
            Err(Error::WeightSumOffUnit { .. })
        ));
        let bad_key = r#"{"d":1,"nodes":{"2":[0.5,0.5]},"continuation":"uniform"}"#;
        assert!(ExplicitMeasure::from_json_str(bad_key).is_err());
        let bad_policy = r#"{"d":1,"nodes":{},"continuation":"wrap"}"#;
        assert!(ExplicitMeasure::from_json_str(bad_policy).is_err());
        let bad_count = r#"{"d":2,"nodes":{"":[0.5,0.5]},"continuation":"uniform"}"#;
        assert!(matches!(
            ExplicitMeasure::from_json_str(bad_count),
            Err(Error::WeightCount { .. })
        ));
    }

    #[test]
    fn snapshot_reproduces_masses_bit_for_bit() {
        let mu = make_random_measure(2, 99).unwrap();
        let snap = snapshot_measure(&mu, 3).unwrap();
        assert_eq!(snap.stored_len(), 1 + 4 + 16);
        for level in 0..=3u32 {
            for idx in 0..(1u64 << (2 * level)) {
                let node = NodePath::from_level_index(2, level, idx).unwrap();
                assert_eq!(
                    snap.mass(&node).unwrap().log2(),
                    mu.mass(&node).unwrap().log2(),
                    "node {node}"
                );
            }
        }
    }
}
