//! Dyadic ratio statistics behind quasi-Assouad dimension estimates.
//!
//! For a measure mu, a tail length m, and a level L, every positive-mass
//! node omega at level L contributes
//!
//! ```text
//!     r(omega) = min over central children omega' of
//!                log2( mass(omega) / mass(omega') )
//! ```
//!
//! where the central children are the 2^d depth-m descendants touching the
//! center of omega's cube. The upper statistic takes the max of r over the
//! level, the lower statistic the min. Levels come either from an exact
//! rational delta (L = floor(m/delta)) or from a scale function through its
//! quasi-inverse.
//!
//! Values are log2-domain and can be +inf (a positive node all of whose
//! central children have zero mass); they are never NaN. Witnesses are
//! reported as the first attaining node in preorder, and parallel scans
//! reproduce the sequential result bit for bit because max/min with the
//! preorder tie-break is associative and commutative.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::tree::{NodePath, MAX_AMBIENT_DIM, MAX_LEVEL};

/// An exact rational scale exponent delta = num/den > 0.
///
/// Kept rational because levels are computed as floor(m/delta) and floating
/// delta would misplace the floor at exact boundaries (e.g. m = 25, delta =
/// 2/5 sits exactly on an integer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DeltaParam {
    num: u64,
    den: u64,
}

impl DeltaParam {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::domain("delta must be a positive rational"));
        }
        Ok(DeltaParam { num, den })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Strict comparison num1/den1 > num2/den2 in exact arithmetic.
    pub fn gt(&self, other: &DeltaParam) -> bool {
        (self.num as u128) * (other.den as u128) > (other.num as u128) * (self.den as u128)
    }
}

impl fmt::Display for DeltaParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for DeltaParam {
    type Err = Error;

    /// Accepts "P/Q" or a bare integer "P". Decimals are rejected: the level
    /// floor(m/delta) must sit exactly on rational boundaries, which binary
    /// floats cannot represent in general.
    fn from_str(s: &str) -> Result<Self> {
        if s.contains('.') {
            return Err(Error::Parse(format!(
                "delta `{s}` must be an exact rational like 2/5 (decimals would move floor(m/delta) at boundaries)"
            )));
        }
        let (num, den) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let num: u64 = num
            .parse()
            .map_err(|_| Error::Parse(format!("invalid delta numerator in `{s}`")))?;
        let den: u64 = den
            .parse()
            .map_err(|_| Error::Parse(format!("invalid delta denominator in `{s}`")))?;
        DeltaParam::new(num, den)
    }
}

/// L = floor(m / delta) = floor(m * den / num), in exact integer arithmetic.
pub fn level_from_delta(m: u32, delta: DeltaParam) -> Result<u32> {
    let level = (m as u128 * delta.den as u128) / delta.num as u128;
    u32::try_from(level).map_err(|_| Error::LevelOverflow {
        level: u64::MAX,
        max: MAX_LEVEL,
    })
}

// ---------------------------------------------------------------------------
// Scale functions phi and their quasi-inverse
// ---------------------------------------------------------------------------

/// A monotone sample table for tabulated scale exponents, interpreted as a
/// left-continuous step function: phi(x) = y_i on (x_{i-1}, x_i], extended by
/// y_1 near 0 and y_n near 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    points: Vec<(f64, f64)>,
}

impl PhiTable {
    /// Points must have x strictly increasing inside (0,1) and y positive
    /// nonincreasing.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        for (index, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 || x >= 1.0 || !y.is_finite() || y <= 0.0 {
                return Err(Error::NonMonotoneTable { index });
            }
            if index > 0 {
                let (px, py) = points[index - 1];
                if x <= px || y > py {
                    return Err(Error::NonMonotoneTable { index });
                }
            }
        }
        Ok(PhiTable { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn eval(&self, x: f64) -> f64 {
        // Smallest sample point >= x carries the value (left continuity).
        let idx = self.points.partition_point(|&(px, _)| px < x);
        if idx == self.points.len() {
            self.points[self.points.len() - 1].1
        } else {
            self.points[idx].1
        }
    }
}

/// The scale exponent Phi presented in one of three forms, all entering the
/// statistics through phi(R) = R^{-Phi(R)}.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiSpec {
    /// Phi(R) = delta, so phi(R) = R^{-delta}: the plain delta statistics.
    Power(DeltaParam),
    /// phi(R) = v constant: the Assouad-style endpoint, where the scale
    /// constraint is vacuous for all large m.
    Constant(f64),
    /// phi given by a sample table (left-continuous steps).
    Tabulated(PhiTable),
}

impl PhiSpec {
    pub fn constant(v: f64) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::domain(format!("constant phi must be positive, got {v}")));
        }
        Ok(PhiSpec::Constant(v))
    }

    /// Short tag for reports: "power:P/Q", "const:V", "table[n]".
    pub fn tag(&self) -> String {
        match self {
            PhiSpec::Power(d) => format!("power:{d}"),
            PhiSpec::Constant(v) => format!("const:{v}"),
            PhiSpec::Tabulated(t) => format!("table[{}]", t.points.len()),
        }
    }
}

/// sup { x in (0,1) : phi(x) >= y }, or `None` when no x qualifies
/// (the vacuous case). Power form is closed form; constant compares once;
/// tabulated bisects to absolute accuracy 1e-12 (phi nonincreasing makes the
/// qualifying set a left interval).
pub fn quasi_inverse(phi: &PhiSpec, y: f64) -> Result<Option<f64>> {
    if !y.is_finite() || y <= 0.0 {
        return Err(Error::domain(format!("quasi-inverse needs y > 0, got {y}")));
    }
    match phi {
        PhiSpec::Power(delta) => {
            // x^{-delta} >= y iff x <= y^{-1/delta}; never vacuous.
            if y <= 1.0 {
                return Ok(Some(1.0));
            }
            let exponent = -(delta.den as f64) / (delta.num as f64);
            Ok(Some(y.powf(exponent).min(1.0)))
        }
        PhiSpec::Constant(v) => {
            if *v >= y {
                Ok(Some(1.0))
            } else {
                Ok(None)
            }
        }
        PhiSpec::Tabulated(table) => {
            if table.eval(1.0) >= y {
                return Ok(Some(1.0));
            }
            let mut lo = f64::MIN_POSITIVE;
            if table.eval(lo) < y {
                return Ok(None);
            }
            let mut hi = 1.0;
            // Invariant: phi(lo) >= y > phi(hi); converge to the boundary.
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if table.eval(mid) >= y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(Some(lo))
        }
    }
}

/// A level derived from a scale function, with a flag recording whether the
/// level cap was applied (vacuous constraint or a level beyond the cap).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiLevel {
    pub level: u32,
    pub capped: bool,
}

/// The comparison level for tail length m under Phi: L = floor(-log2 of the
/// quasi-inverse of 2^m). Power forms route through exact integer
/// arithmetic so they agree with `level_from_delta` for every m; vacuous
/// constraints and levels beyond `level_cap` return the cap, flagged.
pub fn level_from_phi(phi: &PhiSpec, m: u32, level_cap: u32) -> Result<PhiLevel> {
    if m == 0 {
        return Err(Error::domain("tail length m must be >= 1"));
    }
    let uncapped: Option<u64> = match phi {
        PhiSpec::Power(delta) => {
            let level = (m as u128 * delta.den as u128) / delta.num as u128;
            Some(u64::try_from(level).unwrap_or(u64::MAX))
        }
        _ => {
            if m >= 1024 {
                return Err(Error::domain("tail length m too large for 2^m in binary64"));
            }
            let y = (m as f64).exp2();
            match quasi_inverse(phi, y)? {
                None => None,
                Some(x) => {
                    let level = (-x.log2()).floor();
                    Some(if level <= 0.0 { 0 } else { level as u64 })
                }
            }
        }
    };
    Ok(match uncapped {
        None => PhiLevel { level: level_cap, capped: true },
        Some(level) if level > level_cap as u64 => PhiLevel { level: level_cap, capped: true },
        Some(level) => PhiLevel { level: level as u32, capped: false },
    })
}

// ---------------------------------------------------------------------------
// The ratio statistics
// ---------------------------------------------------------------------------

/// Which end of the level the statistic takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    /// max over nodes of the min central-child ratio (the H statistic).
    Upper,
    /// min over nodes of the min central-child ratio (the h statistic).
    Lower,
}

/// Evaluation options shared by the statistics.
#[derive(Debug, Clone, Copy)]
pub struct StatOptions {
    /// Worker threads for the level scan. Results are identical for any
    /// value; this only trades wall time.
    pub threads: usize,
    /// Guard on level + m. Scans touch on the order of 2^{d * level} nodes,
    /// so the default keeps accidental parameter blowups from running for
    /// hours; raise it deliberately for big runs.
    pub depth_budget: u32,
}

pub const DEFAULT_DEPTH_BUDGET: u32 = 32;

impl Default for StatOptions {
    fn default() -> Self {
        StatOptions { threads: 1, depth_budget: DEFAULT_DEPTH_BUDGET }
    }
}

/// One evaluated statistic: the log2 value and the preorder-first witness.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioStatistic {
    pub m: u32,
    pub level: u32,
    /// log2 of the statistic; nonnegative, possibly +inf, never NaN.
    pub log2_value: f64,
    pub witness: NodePath,
}

impl RatioStatistic {
    /// The normalized exponent log2(value) / m.
    pub fn exponent(&self) -> f64 {
        self.log2_value / self.m as f64
    }
}

struct Best {
    value: f64,
    witness: NodePath,
}

impl Best {
    fn offer(&mut self, kind: StatKind, value: f64, witness: &NodePath) {
        let better = match kind {
            StatKind::Upper => value > self.value,
            StatKind::Lower => value < self.value,
        };
        if better || (value == self.value && *witness < self.witness) {
            self.value = value;
            self.witness = witness.clone();
        }
    }

    fn merge(&mut self, kind: StatKind, other: Best) {
        self.offer(kind, other.value, &other.witness);
    }
}

/// min over the central children of `node` of the parent/child log2 mass
/// ratio. `node` is assumed to have positive mass; the ratio telescopes to
/// minus the log-sum of the m tail edge weights, so only edges strictly
/// below `node` are touched.
fn central_ratio_floor<M: Measure + ?Sized>(
    measure: &M,
    node: &mut NodePath,
    m: u32,
    parent_weights: &[f64],
    step_buf: &mut [f64],
) -> Result<f64> {
    let fanout = parent_weights.len();
    let complement_mask = (fanout - 1) as u8;
    let base_level = node.level();
    let mut worst = f64::INFINITY;
    for c in 0..fanout as u8 {
        let comp = complement_mask ^ c;
        let mut tail = parent_weights[c as usize].log2();
        node.push(c);
        for _ in 1..m {
            if tail == f64::NEG_INFINITY {
                break; // zero hit: the ratio is +inf regardless of the rest
            }
            measure.edge_weights_into(node, step_buf)?;
            tail += step_buf[comp as usize].log2();
            node.push(comp);
        }
        node.truncate(base_level);
        let ratio = -tail;
        if ratio < worst {
            worst = ratio;
        }
    }
    Ok(worst)
}

/// Depth-first scan over the positive-mass nodes of `target` level under
/// `node`, feeding each node's central ratio floor to `best`. Zero-mass
/// subtrees are pruned: all their descendants are zero-mass and skipped by
/// definition.
fn scan_subtree<M: Measure + ?Sized>(
    measure: &M,
    node: &mut NodePath,
    target: u32,
    m: u32,
    kind: StatKind,
    best: &mut Option<Best>,
) -> Result<()> {
    let fanout = measure.fanout();
    let mut weights = [0.0f64; 1 << MAX_AMBIENT_DIM];
    let weights = &mut weights[..fanout];
    measure.edge_weights_into(node, weights)?;
    if node.level() == target {
        let mut step = [0.0f64; 1 << MAX_AMBIENT_DIM];
        let value = central_ratio_floor(measure, node, m, weights, &mut step[..fanout])?;
        match best {
            Some(b) => b.offer(kind, value, node),
            None => *best = Some(Best { value, witness: node.clone() }),
        }
        return Ok(());
    }
    for c in 0..fanout as u8 {
        if weights[c as usize] == 0.0 {
            continue;
        }
        node.push(c);
        scan_subtree(measure, node, target, m, kind, best)?;
        node.pop();
    }
    Ok(())
}

fn homogeneous_stat<M: Measure + ?Sized>(
    measure: &M,
    kind: StatKind,
    m: u32,
    level: u32,
) -> Result<RatioStatistic> {
    // Every node carries the same weight vector, so the central ratio floor
    // is one constant and both statistics equal it. The preorder-first
    // positive-mass witness is the smallest positive-weight digit repeated.
    let fanout = measure.fanout();
    let root = NodePath::root(measure.ambient_dim())?;
    let weights = measure.edge_weights(&root)?;
    let lead = weights
        .iter()
        .position(|&w| w > 0.0)
        .ok_or_else(|| Error::domain("measure has no positive edge weight"))?;
    let mut witness = NodePath::from_digits(
        measure.ambient_dim(),
        &vec![lead as u8; level as usize],
    )?;
    let mut step = [0.0f64; 1 << MAX_AMBIENT_DIM];
    let value = central_ratio_floor(measure, &mut witness, m, &weights, &mut step[..fanout])?;
    let _ = kind; // identical for Upper and Lower by node homogeneity
    Ok(RatioStatistic { m, level, log2_value: value, witness })
}

fn check_stat_inputs(m: u32, level: u32, opts: &StatOptions) -> Result<()> {
    if m == 0 {
        return Err(Error::domain("tail length m must be >= 1"));
    }
    if level as u64 + m as u64 > opts.depth_budget as u64 {
        return Err(Error::DepthBudgetExceeded { level, m, budget: opts.depth_budget });
    }
    // Only the witness level must stay cube-representable; the tail below it
    // is walked with transient digit pushes and never becomes a cube.
    if level > MAX_LEVEL {
        return Err(Error::LevelOverflow { level: level as u64, max: MAX_LEVEL });
    }
    Ok(())
}

/// Evaluates one ratio statistic at a fixed level by streaming over the
/// level's nodes (never materializing the tree).
pub fn ratio_stat<M: Measure + ?Sized>(
    measure: &M,
    kind: StatKind,
    m: u32,
    level: u32,
    opts: &StatOptions,
) -> Result<RatioStatistic> {
    check_stat_inputs(m, level, opts)?;
    if measure.is_node_homogeneous() {
        return homogeneous_stat(measure, kind, m, level);
    }

    let dim = measure.ambient_dim();
    let threads = opts.threads.max(1);
    let best = if threads == 1 || level == 0 {
        let mut best = None;
        let mut root = NodePath::root(dim)?;
        scan_subtree(measure, &mut root, level, m, kind, &mut best)?;
        best
    } else {
        // Partition the level by subtrees rooted at a shallow split level:
        // deep enough to give every worker several subtrees, shallow enough
        // that walking to each subtree root stays negligible.
        let mut split = 0u32;
        while split < level && (1u64 << (dim as u32 * split)) < 4 * threads as u64 {
            split += 1;
        }
        let subtree_count = 1u64 << (dim as u32 * split);
        let workers = threads.min(subtree_count as usize);
        let chunk = subtree_count.div_ceil(workers as u64);
        std::thread::scope(|scope| -> Result<Option<Best>> {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers as u64 {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(subtree_count);
                handles.push(scope.spawn(move || -> Result<Option<Best>> {
                    let mut best = None;
                    for idx in lo..hi {
                        let mut sub = NodePath::from_level_index(dim, split, idx)?;
                        if measure.mass(&sub)?.is_zero() {
                            continue;
                        }
                        scan_subtree(measure, &mut sub, level, m, kind, &mut best)?;
                    }
                    Ok(best)
                }));
            }
            // Joining in subtree order keeps the reduction deterministic,
            // though the (value, preorder witness) merge is order-free anyway.
            let mut best: Option<Best> = None;
            for handle in handles {
                let local = handle.join().expect("scan worker panicked")?;
                match (&mut best, local) {
                    (Some(b), Some(l)) => b.merge(kind, l),
                    (slot @ None, Some(l)) => *slot = Some(l),
                    (_, None) => {}
                }
            }
            Ok(best)
        })?
    };

    let best = best.ok_or_else(|| {
        Error::domain("no positive-mass node at the requested level")
    })?;
    Ok(RatioStatistic { m, level, log2_value: best.value, witness: best.witness })
}

/// The upper statistic: max over level-L nodes of the central ratio floor.
pub fn upper_ratio_stat<M: Measure + ?Sized>(
    measure: &M,
    m: u32,
    level: u32,
    opts: &StatOptions,
) -> Result<RatioStatistic> {
    ratio_stat(measure, StatKind::Upper, m, level, opts)
}

/// The lower statistic: min over level-L nodes of the central ratio floor.
pub fn lower_ratio_stat<M: Measure + ?Sized>(
    measure: &M,
    m: u32,
    level: u32,
    opts: &StatOptions,
) -> Result<RatioStatistic> {
    ratio_stat(measure, StatKind::Lower, m, level, opts)
}

/// Multi-level variant: the best value over all levels 1..=max_level (max
/// for Upper, min for Lower). With max_level = 0 this is the fixed level-0
/// statistic. The reported `level` is the witness's level.
pub fn multi_level_ratio_stat<M: Measure + ?Sized>(
    measure: &M,
    kind: StatKind,
    m: u32,
    max_level: u32,
    opts: &StatOptions,
) -> Result<RatioStatistic> {
    check_stat_inputs(m, max_level, opts)?;
    if max_level == 0 {
        return ratio_stat(measure, kind, m, 0, opts);
    }
    let mut combined: Option<RatioStatistic> = None;
    for level in 1..=max_level {
        let stat = ratio_stat(measure, kind, m, level, opts)?;
        combined = Some(match combined {
            None => stat,
            Some(prev) => {
                let better = match kind {
                    StatKind::Upper => stat.log2_value > prev.log2_value,
                    StatKind::Lower => stat.log2_value < prev.log2_value,
                };
                let tie = stat.log2_value == prev.log2_value && stat.witness < prev.witness;
                if better || tie {
                    stat
                } else {
                    prev
                }
            }
        });
    }
    let mut best = combined.expect("max_level >= 1 always yields a statistic");
    best.m = m;
    Ok(best)
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Materialized cap: the oracle refuses to build more than 2^22 leaf nodes.
pub const ORACLE_NODE_CAP_LOG2: u32 = 22;

/// Literal evaluation of a ratio statistic for cross-checking the streaming
/// path: materializes every node mass to depth level + m (linear and log2
/// tables built by independent arithmetic), then walks the definition with
/// index arithmetic. Ratios use linear division where the masses are far
/// from underflow, log2 differences otherwise.
pub fn brute_force_oracle<M: Measure + ?Sized>(
    measure: &M,
    kind: StatKind,
    m: u32,
    level: u32,
) -> Result<RatioStatistic> {
    if m == 0 {
        return Err(Error::domain("tail length m must be >= 1"));
    }
    let dim = measure.ambient_dim();
    let depth = level + m;
    let leaf_bits = dim as u32 * depth;
    if leaf_bits > ORACLE_NODE_CAP_LOG2 {
        return Err(Error::OracleTooLarge { log2_nodes: leaf_bits, limit: ORACLE_NODE_CAP_LOG2 });
    }
    let fanout = measure.fanout();

    // Level-by-level mass tables, children packed contiguously by parent.
    let mut lin: Vec<Vec<f64>> = vec![vec![1.0]];
    let mut log: Vec<Vec<f64>> = vec![vec![0.0]];
    let mut buf = vec![0.0f64; fanout];
    for l in 0..depth {
        let parents = lin[l as usize].len();
        let mut next_lin = vec![0.0f64; parents * fanout];
        let mut next_log = vec![0.0f64; parents * fanout];
        for idx in 0..parents {
            let node = NodePath::from_level_index(dim, l, idx as u64)?;
            measure.edge_weights_into(&node, &mut buf)?;
            for (c, &w) in buf.iter().enumerate() {
                next_lin[idx * fanout + c] = lin[l as usize][idx] * w;
                next_log[idx * fanout + c] = log[l as usize][idx] + w.log2();
            }
        }
        lin.push(next_lin);
        log.push(next_log);
    }

    let level_lin = &lin[level as usize];
    let level_log = &log[level as usize];
    let deep_lin = &lin[depth as usize];
    let deep_log = &log[depth as usize];
    let complement = fanout - 1;

    let mut best: Option<(f64, u64)> = None;
    for idx in 0..level_lin.len() {
        if level_log[idx] == f64::NEG_INFINITY {
            continue; // zero-mass node
        }
        let mut worst = f64::INFINITY;
        for c in 0..fanout {
            // Descend c, then m-1 complements, by index arithmetic.
            let mut child = idx * fanout + c;
            for _ in 1..m {
                child = child * fanout + (complement - c);
            }
            let ratio = if level_lin[idx] >= 1e-300 && deep_lin[child] >= 1e-300 {
                (level_lin[idx] / deep_lin[child]).log2()
            } else if deep_log[child] == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                level_log[idx] - deep_log[child]
            };
            if ratio < worst {
                worst = ratio;
            }
        }
        let better = match (&best, kind) {
            (None, _) => true,
            (Some((v, _)), StatKind::Upper) => worst > *v,
            (Some((v, _)), StatKind::Lower) => worst < *v,
        };
        if better {
            best = Some((worst, idx as u64)); // ascending idx keeps preorder-first ties
        }
    }

    let (value, idx) = best
        .ok_or_else(|| Error::domain("no positive-mass node at the requested level"))?;
    Ok(RatioStatistic {
        m,
        level,
        log2_value: value,
        witness: NodePath::from_level_index(dim, level, idx)?,
    })
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

/// How one schedule entry picks its level.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSpec {
    Delta(DeltaParam),
    Phi(PhiSpec),
}

impl ScaleSpec {
    pub fn tag(&self) -> String {
        match self {
            ScaleSpec::Delta(d) => format!("delta:{d}"),
            ScaleSpec::Phi(p) => p.tag(),
        }
    }

    /// The delta rational, when this scale is an exact rational (including
    /// power-form phi).
    pub fn as_delta(&self) -> Option<DeltaParam> {
        match self {
            ScaleSpec::Delta(d) | ScaleSpec::Phi(PhiSpec::Power(d)) => Some(*d),
            _ => None,
        }
    }

    pub fn level(&self, m: u32, level_cap: u32) -> Result<PhiLevel> {
        match self {
            ScaleSpec::Delta(delta) => {
                let level = level_from_delta(m, *delta)?;
                if level > level_cap {
                    Ok(PhiLevel { level: level_cap, capped: true })
                } else {
                    Ok(PhiLevel { level, capped: false })
                }
            }
            ScaleSpec::Phi(phi) => level_from_phi(phi, m, level_cap),
        }
    }
}

/// One (m, scale) evaluation request.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub m: u32,
    pub scale: ScaleSpec,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub stat: StatOptions,
    pub level_cap: u32,
    /// Evaluate the multi-level variant instead of the fixed level.
    pub multi_level: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            stat: StatOptions::default(),
            level_cap: DEFAULT_DEPTH_BUDGET,
            multi_level: false,
        }
    }
}

/// Both statistics evaluated for one schedule entry.
#[derive(Debug, Clone)]
pub struct ProfileRow {
    pub m: u32,
    pub scale: ScaleSpec,
    pub level: u32,
    pub capped: bool,
    pub upper: RatioStatistic,
    pub lower: RatioStatistic,
}

impl ProfileRow {
    pub fn upper_exponent(&self) -> f64 {
        self.upper.log2_value / self.m as f64
    }

    pub fn lower_exponent(&self) -> f64 {
        self.lower.log2_value / self.m as f64
    }
}

/// Evaluates upper and lower statistics over a schedule of (m, scale) pairs.
pub fn estimate_profile<M: Measure + ?Sized>(
    measure: &M,
    schedule: &[ScheduleEntry],
    opts: &ProfileOptions,
) -> Result<Vec<ProfileRow>> {
    let mut rows = Vec::with_capacity(schedule.len());
    for entry in schedule {
        let PhiLevel { level, capped } = entry.scale.level(entry.m, opts.level_cap)?;
        let (upper, lower) = if opts.multi_level {
            (
                multi_level_ratio_stat(measure, StatKind::Upper, entry.m, level, &opts.stat)?,
                multi_level_ratio_stat(measure, StatKind::Lower, entry.m, level, &opts.stat)?,
            )
        } else {
            (
                ratio_stat(measure, StatKind::Upper, entry.m, level, &opts.stat)?,
                ratio_stat(measure, StatKind::Lower, entry.m, level, &opts.stat)?,
            )
        };
        rows.push(ProfileRow {
            m: entry.m,
            scale: entry.scale.clone(),
            level,
            capped,
            upper,
            lower,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{
        bernoulli, lebesgue, make_product_measure, make_random_measure, Continuation,
        ExplicitMeasure,
    };
    use crate::tree::NodePath;

    fn opts() -> StatOptions {
        StatOptions::default()
    }

    #[test]
    fn delta_parsing_and_levels() {
        let d: DeltaParam = "2/5".parse().unwrap();
        assert_eq!((d.num(), d.den()), (2, 5));
        assert_eq!(level_from_delta(4, d).unwrap(), 10);
        assert_eq!(level_from_delta(2, "2/1".parse().unwrap()).unwrap(), 1);
        assert_eq!(level_from_delta(6, "1/3".parse().unwrap()).unwrap(), 18);
        assert_eq!(level_from_delta(7, "2".parse().unwrap()).unwrap(), 3);

        assert!("0/3".parse::<DeltaParam>().is_err());
        assert!("0.4".parse::<DeltaParam>().is_err());
        assert!("2/0".parse::<DeltaParam>().is_err());
        assert!("x/1".parse::<DeltaParam>().is_err());
    }

    #[test]
    fn delta_exact_comparison() {
        let a: DeltaParam = "1/2".parse().unwrap();
        let b: DeltaParam = "1/3".parse().unwrap();
        assert!(a.gt(&b));
        assert!(!b.gt(&a));
        assert!(!a.gt(&a));
    }

    #[test]
    fn quasi_inverse_closed_forms() {
        // Power delta = 2: x^{-2} >= 2^m iff x <= 2^{-m/2}.
        let phi = PhiSpec::Power("2/1".parse().unwrap());
        for m in 1..=6u32 {
            let y = (m as f64).exp2();
            let got = quasi_inverse(&phi, y).unwrap().unwrap();
            let want = (-(m as f64) / 2.0).exp2();
            assert!((got - want).abs() < 1e-12, "m={m}: {got} vs {want}");
        }
        // y <= 1: everything qualifies.
        assert_eq!(quasi_inverse(&phi, 0.5).unwrap(), Some(1.0));
    }

    #[test]
    fn quasi_inverse_constant_vacuous() {
        let phi = PhiSpec::constant(2.0).unwrap();
        assert_eq!(quasi_inverse(&phi, 8.0).unwrap(), None);
        assert_eq!(quasi_inverse(&phi, 2.0).unwrap(), Some(1.0));
    }

    #[test]
    fn quasi_inverse_tabulated_bisection() {
        // Sample x^{-1/2} on a dyadic grid containing 1/16 exactly.
        let points: Vec<(f64, f64)> = (1..512)
            .map(|k| {
                let x = k as f64 / 512.0;
                (x, x.powf(-0.5))
            })
            .collect();
        let phi = PhiSpec::Tabulated(PhiTable::new(points).unwrap());
        let got = quasi_inverse(&phi, 4.0).unwrap().unwrap();
        assert!((got - 1.0 / 16.0).abs() < 1e-10, "{got}");
        assert_eq!(level_from_phi(&phi, 2, 32).unwrap(), PhiLevel { level: 4, capped: false });
    }

    #[test]
    fn tabulated_validation() {
        assert!(PhiTable::new(vec![]).is_err());
        assert!(PhiTable::new(vec![(0.5, 2.0), (0.5, 1.0)]).is_err()); // x not increasing
        assert!(PhiTable::new(vec![(0.2, 1.0), (0.4, 2.0)]).is_err()); // y increasing
        assert!(PhiTable::new(vec![(0.0, 1.0)]).is_err()); // x outside (0,1)
        assert!(PhiTable::new(vec![(0.5, 2.0), (0.75, 2.0)]).is_ok()); // flat y allowed
    }

    #[test]
    fn level_from_phi_power_is_exact_integer_arithmetic() {
        for (p, q) in [(1u64, 1u64), (1, 2), (2, 5), (3, 7), (7, 3), (1, 3)] {
            let delta = DeltaParam::new(p, q).unwrap();
            let phi = PhiSpec::Power(delta);
            for m in 1..=64u32 {
                let direct = level_from_delta(m, delta).unwrap();
                let via_phi = level_from_phi(&phi, m, u32::MAX).unwrap();
                assert_eq!(via_phi, PhiLevel { level: direct, capped: false }, "{p}/{q} m={m}");
            }
        }
    }

    #[test]
    fn level_from_phi_constant_caps() {
        let phi = PhiSpec::constant(2.0).unwrap();
        assert_eq!(level_from_phi(&phi, 4, 16).unwrap(), PhiLevel { level: 16, capped: true });
        // 2^1 = 2 <= v: the constraint holds everywhere, level 0.
        assert_eq!(level_from_phi(&phi, 1, 16).unwrap(), PhiLevel { level: 0, capped: false });
    }

    #[test]
    fn lebesgue_statistics_are_exact() {
        for d in 1..=2u8 {
            let mu = lebesgue(d).unwrap();
            for m in 1..=6u32 {
                for level in [0u32, 1, 3] {
                    let h = upper_ratio_stat(&mu, m, level, &opts()).unwrap();
                    let l = lower_ratio_stat(&mu, m, level, &opts()).unwrap();
                    let want = (m * d as u32) as f64;
                    assert_eq!(h.log2_value, want, "d={d} m={m} L={level}");
                    assert_eq!(l.log2_value, want);
                    assert_eq!(h.witness.digits(), vec![0u8; level as usize].as_slice());
                }
            }
        }
    }

    #[test]
    fn bernoulli_h22_is_one_over_pq() {
        // H_{2,2}: m = 2, delta = 2 so L = 1.
        let mu = bernoulli(0.2).unwrap();
        let h = upper_ratio_stat(&mu, 2, 1, &opts()).unwrap();
        assert!((h.log2_value.exp2() - 6.25).abs() < 1e-12);
    }

    #[test]
    fn streaming_matches_oracle_on_random_measures() {
        for (d, m, level) in [(1u8, 2u32, 4u32), (1, 3, 5), (2, 2, 3)] {
            for seed in [1u64, 7, 42] {
                let mu = make_random_measure(d, seed).unwrap();
                for kind in [StatKind::Upper, StatKind::Lower] {
                    let fast = ratio_stat(&mu, kind, m, level, &opts()).unwrap();
                    let slow = brute_force_oracle(&mu, kind, m, level).unwrap();
                    assert!(
                        (fast.log2_value - slow.log2_value).abs() < 1e-12,
                        "d={d} m={m} L={level} seed={seed} {kind:?}: {} vs {}",
                        fast.log2_value,
                        slow.log2_value
                    );
                    assert_eq!(fast.witness, slow.witness);
                }
            }
        }
    }

    #[test]
    fn parallel_scan_is_bit_identical() {
        let mu = make_random_measure(2, 2024).unwrap();
        let sequential = upper_ratio_stat(&mu, 2, 5, &opts()).unwrap();
        for threads in [2usize, 3, 8] {
            let par = upper_ratio_stat(
                &mu,
                2,
                5,
                &StatOptions { threads, ..StatOptions::default() },
            )
            .unwrap();
            assert_eq!(par.log2_value.to_bits(), sequential.log2_value.to_bits());
            assert_eq!(par.witness, sequential.witness);
        }
    }

    #[test]
    fn zero_mass_nodes_are_skipped_and_infinite_ratios_surface() {
        // Root sends everything left; left child splits evenly but its own
        // children kill the central tails, so m = 2 ratios go infinite.
        let mut mu = ExplicitMeasure::new(1, Continuation::Uniform).unwrap();
        let root = NodePath::root(1).unwrap();
        mu.insert(root.clone(), &[1.0, 0.0]).unwrap();
        mu.insert(NodePath::from_digits(1, &[0]).unwrap(), &[0.5, 0.5]).unwrap();
        mu.insert(NodePath::from_digits(1, &[0, 0]).unwrap(), &[1.0, 0.0]).unwrap();
        mu.insert(NodePath::from_digits(1, &[0, 1]).unwrap(), &[0.0, 1.0]).unwrap();

        // Level 1: only "0" has positive mass; central children at depth 2
        // are "001" (weight path 0.5 * 0) and "010" (0.5 * 0): both zero.
        let h = upper_ratio_stat(&mu, 2, 1, &opts()).unwrap();
        assert_eq!(h.log2_value, f64::INFINITY);
        assert_eq!(h.witness.digits(), &[0]);
        let l = lower_ratio_stat(&mu, 2, 1, &opts()).unwrap();
        assert_eq!(l.log2_value, f64::INFINITY); // the only node is the min too

        let oracle = brute_force_oracle(&mu, StatKind::Upper, 2, 1).unwrap();
        assert_eq!(oracle.log2_value, f64::INFINITY);
        assert_eq!(oracle.witness, h.witness);
    }

    #[test]
    fn homogeneous_shortcut_matches_generic_streaming() {
        // Same weights, but hidden behind a wrapper that disables the
        // homogeneity flag, forcing the generic scan.
        struct Opaque<M>(M);
        impl<M: Measure> Measure for Opaque<M> {
            fn ambient_dim(&self) -> u8 {
                self.0.ambient_dim()
            }
            fn edge_weights_into(&self, node: &NodePath, out: &mut [f64]) -> Result<()> {
                self.0.edge_weights_into(node, out)
            }
        }

        let weights = [0.1, 0.4, 0.2, 0.3];
        let fast_mu = make_product_measure(2, &weights).unwrap();
        let slow_mu = Opaque(make_product_measure(2, &weights).unwrap());
        for kind in [StatKind::Upper, StatKind::Lower] {
            for (m, level) in [(1u32, 2u32), (2, 3), (3, 2)] {
                let fast = ratio_stat(&fast_mu, kind, m, level, &opts()).unwrap();
                let slow = ratio_stat(&slow_mu, kind, m, level, &opts()).unwrap();
                assert_eq!(fast.log2_value, slow.log2_value, "{kind:?} m={m} L={level}");
                assert_eq!(fast.witness, slow.witness);
            }
        }
    }

    #[test]
    fn lower_stat_is_at_most_upper_stat() {
        let mu = make_random_measure(2, 5).unwrap();
        for (m, level) in [(1u32, 2u32), (2, 3), (3, 4)] {
            let h = upper_ratio_stat(&mu, m, level, &opts()).unwrap();
            let l = lower_ratio_stat(&mu, m, level, &opts()).unwrap();
            assert!(l.log2_value <= h.log2_value);
        }
    }

    #[test]
    fn multi_level_bounds_fixed_level() {
        let mu = make_random_measure(1, 31).unwrap();
        let m = 2;
        let max_level = 6;
        let multi_h =
            multi_level_ratio_stat(&mu, StatKind::Upper, m, max_level, &opts()).unwrap();
        let multi_l =
            multi_level_ratio_stat(&mu, StatKind::Lower, m, max_level, &opts()).unwrap();
        for level in 1..=max_level {
            let h = upper_ratio_stat(&mu, m, level, &opts()).unwrap();
            let l = lower_ratio_stat(&mu, m, level, &opts()).unwrap();
            assert!(multi_h.log2_value >= h.log2_value);
            assert!(multi_l.log2_value <= l.log2_value);
        }
        assert!(multi_h.witness.level() >= 1 && multi_h.witness.level() <= max_level);
        assert!(multi_l.witness.level() >= 1 && multi_l.witness.level() <= max_level);
    }

    #[test]
    fn depth_budget_guards_scans() {
        let mu = make_random_measure(1, 1).unwrap();
        let err = upper_ratio_stat(&mu, 8, 30, &opts()).unwrap_err();
        assert!(matches!(err, Error::DepthBudgetExceeded { .. }));
        // Explicit override lifts it.
        let ok = upper_ratio_stat(
            &lebesgue(1).unwrap(),
            8,
            30,
            &StatOptions { depth_budget: 40, ..StatOptions::default() },
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn oracle_size_cap() {
        let mu = make_random_measure(2, 1).unwrap();
        assert!(matches!(
            brute_force_oracle(&mu, StatKind::Upper, 4, 10),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn profile_levels_and_cap_flags() {
        let mu = lebesgue(1).unwrap();
        let schedule = vec![
            ScheduleEntry { m: 4, scale: ScaleSpec::Delta("1/2".parse().unwrap()) },
            ScheduleEntry { m: 4, scale: ScaleSpec::Phi(PhiSpec::constant(2.0).unwrap()) },
        ];
        let rows = estimate_profile(
            &mu,
            &schedule,
            &ProfileOptions { level_cap: 12, ..ProfileOptions::default() },
        )
        .unwrap();
        assert_eq!(rows[0].level, 8);
        assert!(!rows[0].capped);
        assert_eq!(rows[1].level, 12);
        assert!(rows[1].capped);
        for row in &rows {
            assert!((row.upper_exponent() - 1.0).abs() < 1e-12);
            assert!((row.lower_exponent() - 1.0).abs() < 1e-12);
        }
    }
}
