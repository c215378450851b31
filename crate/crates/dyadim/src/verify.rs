//! Self-verification suite: end-to-end checks that the sampled statistics,
//! the closed-form bounds, and the serialization layer agree with each
//! other and with exactly solvable cases.
//!
//! Each criterion returns a [`CriterionReport`] with a stable id, a verdict,
//! and a one-line detail string; the acceptance tests and `dyadim verify`
//! print one line per criterion. Every check runs from fixed seeds, so a
//! failure is reproducible, never a flake to shrug at.

// Reference constants keep every digit of the 50-digit computation that
// produced them; the compiler rounds to the nearest f64.
#![allow(clippy::excessive_precision)]

use std::time::Instant;

use crate::analytics::{
    lower_params_admissible, lower_tail_bound, product_uniform_tail, upper_delta_admissible,
    upper_tail_bound,
};
use crate::dimension::{
    brute_force_oracle, level_from_delta, level_from_phi, lower_ratio_stat, quasi_inverse,
    ratio_stat, upper_ratio_stat, DeltaParam, PhiLevel, PhiSpec, PhiTable, StatKind, StatOptions,
};
use crate::error::Result;
use crate::experiment::{
    self, report_csv_string, report_json_string, ExperimentConfig, ExperimentKind,
};
use crate::measure::{bernoulli, lebesgue, make_random_measure, Continuation, ExplicitMeasure, Measure};
use crate::random::NodeRng;
use crate::tree::NodePath;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn format_line(&self) -> String {
        format!(
            "[{}] {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.seconds,
            self.detail
        )
    }
}

struct Check {
    id: &'static str,
    start: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new(id: &'static str) -> Self {
        Check { id, start: Instant::now(), failures: Vec::new(), notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self) -> CriterionReport {
        let passed = self.failures.is_empty();
        let detail = if passed {
            self.notes.join("; ")
        } else {
            self.failures.join("; ")
        };
        CriterionReport {
            id: self.id,
            passed,
            detail,
            seconds: self.start.elapsed().as_secs_f64(),
        }
    }

    /// Folds an infrastructure error into the report instead of panicking,
    /// so one broken criterion cannot take down the whole suite.
    fn fail_with(mut self, err: crate::error::Error) -> CriterionReport {
        self.failures.push(format!("criterion aborted: {err}"));
        self.finish()
    }
}

macro_rules! try_check {
    ($check:expr, $expr:expr) => {
        match $expr {
            Ok(v) => v,
            Err(e) => return $check.fail_with(e),
        }
    };
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    if want == 0.0 {
        return got.abs() <= tol;
    }
    ((got - want) / want).abs() <= tol
}

// ---------------------------------------------------------------------------
// Criterion 1: edge-weight marginals follow Beta(1, 2^d - 1)
// ---------------------------------------------------------------------------

pub fn criterion_marginal_law(threads: usize) -> CriterionReport {
    let mut check = Check::new("marginal-law");
    for dim in [1u8, 2, 3] {
        let mut config = ExperimentConfig::new(ExperimentKind::Marginal, dim);
        config.trials = 100_000;
        config.master_seed = 0x4D41_5247 + dim as u64;
        config.threads = threads;
        let report = try_check!(check, experiment::run(&config));
        let row = &report.rows[0];
        check.require(row.pass == Some(true), || {
            format!(
                "d={dim}: KS {:.5} exceeds the 1% critical value {:.5}",
                row.value,
                row.bound.unwrap()
            )
        });
        check.note(format!("d={dim} KS {:.5} < {:.5}", row.value, row.bound.unwrap()));
    }
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 2: weights sum to one and mass telescopes
// ---------------------------------------------------------------------------

pub fn criterion_conservation() -> CriterionReport {
    let mut check = Check::new("mass-conservation");
    let tol = 1e-9;
    let mut max_sum_err = 0.0f64;
    let mut max_split_err = 0.0f64;
    for dim in [1u8, 2] {
        let fanout = 1usize << dim;
        for seed in 0..50u64 {
            let mu = try_check!(check, make_random_measure(dim, 0xC0_5E_ED + seed));
            let mut walker = NodeRng::from_key(seed ^ 0x51ED);
            let mut node = try_check!(check, NodePath::root(dim));
            for _ in 0..8 {
                let weights = try_check!(check, mu.edge_weights(&node));
                let sum: f64 = weights.iter().sum();
                max_sum_err = max_sum_err.max((sum - 1.0).abs());
                check.require((sum - 1.0).abs() <= tol, || {
                    format!("d={dim} seed={seed} {node}: weights sum to {sum:.12}")
                });

                let parent_mass = try_check!(check, mu.mass(&node)).linear();
                let mut children_mass = 0.0;
                for c in 0..fanout as u8 {
                    let child = try_check!(check, node.child(c));
                    children_mass += try_check!(check, mu.mass(&child)).linear();
                }
                let err = (children_mass - parent_mass).abs()
                    / parent_mass.max(f64::MIN_POSITIVE);
                max_split_err = max_split_err.max(err);
                check.require(err <= tol, || {
                    format!(
                        "d={dim} seed={seed} {node}: children mass {children_mass:.12e} vs parent {parent_mass:.12e}"
                    )
                });

                let digit = (walker.next_u64() % fanout as u64) as u8;
                node = try_check!(check, node.child(digit));
            }
        }
    }
    check.note(format!(
        "max |sum-1| {max_sum_err:.2e}, max split error {max_split_err:.2e} over 100 seeded walks to depth 8"
    ));
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 3: cube masses have mean 2^{-d level}
// ---------------------------------------------------------------------------

pub fn criterion_expectation(threads: usize) -> CriterionReport {
    let mut check = Check::new("expected-mass");
    let targets = [
        NodePath::from_digits(1, &[0, 1, 0]).expect("valid path"),
        NodePath::from_digits(2, &[2, 0, 3]).expect("valid path"),
    ];
    for target in targets {
        let dim = target.ambient_dim();
        let mut config = ExperimentConfig::new(ExperimentKind::Expectation, dim);
        config.trials = 10_000;
        config.master_seed = 0xE0_15 + dim as u64;
        config.threads = threads;
        config.target = Some(target.clone());
        let report = try_check!(check, experiment::run(&config));
        let row = &report.rows[0];
        check.require(row.pass == Some(true), || {
            format!(
                "d={dim} {target}: mean {:.6e} misses {:.6e} by more than {:.2e}",
                row.value,
                row.bound.unwrap(),
                row.radius3.unwrap()
            )
        });
        check.note(format!(
            "d={dim} mean {:.4e} vs 2^-{} within {:.1e}",
            row.value,
            3 * dim as u32,
            row.radius3.unwrap()
        ));
    }

    // Root cube: mass is identically 1, no tolerance involved.
    let mut config = ExperimentConfig::new(ExperimentKind::Expectation, 1);
    config.trials = 32;
    config.master_seed = 7;
    let report = try_check!(check, experiment::run(&config));
    check.require(report.rows[0].value == 1.0 && report.rows[0].sd == Some(0.0), || {
        format!("root mass mean {} (sd {:?}) is not exactly 1", report.rows[0].value, report.rows[0].sd)
    });
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 4: Lebesgue trees give exactly dyadic statistics
// ---------------------------------------------------------------------------

pub fn criterion_lebesgue_exactness() -> CriterionReport {
    let mut check = Check::new("lebesgue-exactness");
    let opts = StatOptions { depth_budget: 40, ..StatOptions::default() };
    let deltas: [DeltaParam; 2] =
        ["1/2".parse().expect("valid delta"), "1/1".parse().expect("valid delta")];
    let mut cases = 0u32;
    for dim in [1u8, 2] {
        let mu = try_check!(check, lebesgue(dim));
        for m in 2..=8u32 {
            for delta in deltas {
                let level = try_check!(check, level_from_delta(m, delta));
                let upper = try_check!(check, upper_ratio_stat(&mu, m, level, &opts));
                let lower = try_check!(check, lower_ratio_stat(&mu, m, level, &opts));
                let want = (m * dim as u32) as f64;
                check.require((upper.log2_value - want).abs() <= 1e-9, || {
                    format!("d={dim} m={m} delta={delta}: upper {:.12} != {want}", upper.log2_value)
                });
                check.require((lower.log2_value - want).abs() <= 1e-9, || {
                    format!("d={dim} m={m} delta={delta}: lower {:.12} != {want}", lower.log2_value)
                });
                check.require((upper.exponent() - dim as f64).abs() <= 1e-9, || {
                    format!("d={dim} m={m}: exponent {:.12} != {dim}", upper.exponent())
                });
                cases += 1;
            }
        }
    }
    check.note(format!("log2 H = log2 h = m d exactly across {cases} (d, m, delta) cases"));
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 5: streaming statistics match the materialized oracle
// ---------------------------------------------------------------------------

fn zero_fixture_d1() -> Result<ExplicitMeasure> {
    let mut mu = ExplicitMeasure::new(1, Continuation::Uniform)?;
    mu.insert(NodePath::root(1)?, &[1.0, 0.0])?;
    mu.insert(NodePath::from_digits(1, &[0])?, &[0.5, 0.5])?;
    mu.insert(NodePath::from_digits(1, &[0, 0])?, &[1.0, 0.0])?;
    mu.insert(NodePath::from_digits(1, &[0, 1])?, &[0.0, 1.0])?;
    Ok(mu)
}

fn zero_fixture_d2() -> Result<ExplicitMeasure> {
    let mut mu = ExplicitMeasure::new(2, Continuation::Uniform)?;
    mu.insert(NodePath::root(2)?, &[0.5, 0.0, 0.25, 0.25])?;
    mu.insert(NodePath::from_digits(2, &[0])?, &[0.0, 0.0, 1.0, 0.0])?;
    mu.insert(NodePath::from_digits(2, &[2])?, &[0.25, 0.25, 0.25, 0.25])?;
    Ok(mu)
}

pub fn criterion_oracle_equivalence() -> CriterionReport {
    let mut check = Check::new("oracle-equivalence");
    let opts = StatOptions::default();
    let combos: [(u8, u32, u32); 6] =
        [(1, 2, 4), (1, 2, 8), (1, 3, 9), (1, 4, 12), (2, 2, 3), (2, 2, 5)];
    let mut compared = 0u64;
    for (dim, m, level) in combos {
        for seed in 0..25u64 {
            let mu = try_check!(check, make_random_measure(dim, 0x0AC1E + seed));
            for kind in [StatKind::Upper, StatKind::Lower] {
                let fast = try_check!(check, ratio_stat(&mu, kind, m, level, &opts));
                let slow = try_check!(check, brute_force_oracle(&mu, kind, m, level));
                let agree = (fast.log2_value - slow.log2_value).abs() <= 1e-12
                    || (fast.log2_value.is_infinite() && slow.log2_value.is_infinite());
                check.require(agree, || {
                    format!(
                        "d={dim} m={m} L={level} seed={seed} {kind:?}: {} vs oracle {}",
                        fast.log2_value, slow.log2_value
                    )
                });
                check.require(fast.witness == slow.witness, || {
                    format!(
                        "d={dim} m={m} L={level} seed={seed} {kind:?}: witness {} vs oracle {}",
                        fast.witness, slow.witness
                    )
                });
                compared += 1;
            }
        }
    }

    // Hand-built trees with zero branches: infinite ratios and pruning on
    // both paths must agree too.
    let fixtures: [(ExplicitMeasure, u32, u32); 2] = [
        (try_check!(check, zero_fixture_d1()), 2, 3),
        (try_check!(check, zero_fixture_d2()), 2, 2),
    ];
    for (mu, m, level) in &fixtures {
        for kind in [StatKind::Upper, StatKind::Lower] {
            let fast = try_check!(check, ratio_stat(mu, kind, *m, *level, &opts));
            let slow = try_check!(check, brute_force_oracle(mu, kind, *m, *level));
            let agree = fast.log2_value == slow.log2_value
                || (fast.log2_value.is_infinite() && slow.log2_value.is_infinite());
            check.require(agree && fast.witness == slow.witness, || {
                format!(
                    "zero fixture d={} {kind:?}: {} @ {} vs oracle {} @ {}",
                    mu.ambient_dim(),
                    fast.log2_value,
                    fast.witness,
                    slow.log2_value,
                    slow.witness
                )
            });
            compared += 1;
        }
    }
    check.note(format!("{compared} statistic evaluations agree with the oracle to 1e-12"));
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 6: two-weight product trees match their closed form
// ---------------------------------------------------------------------------

pub fn criterion_bernoulli_closed_form() -> CriterionReport {
    let mut check = Check::new("bernoulli-closed-form");
    let one: DeltaParam = "1/1".parse().expect("valid delta");

    // log2 H = -log2(p q^{m-1}) for p < 1/2, frozen to 20 digits.
    let frozen: [(f64, [f64; 3], f64); 2] = [
        (
            0.2,
            [2.6438561897747246957, 2.9657842846620870436, 3.2877123795494493915],
            0.32192809488736234787,
        ),
        (
            0.3,
            [2.2515387669959644068, 2.7661119398257226473, 3.2806851126554808877],
            0.51457317282975824043,
        ),
    ];

    for (p, values, limit) in frozen {
        let mu = try_check!(check, bernoulli(p));
        for (i, want) in values.into_iter().enumerate() {
            let m = i as u32 + 2;
            let level = try_check!(check, level_from_delta(m, one));
            let opts = StatOptions::default();
            let upper = try_check!(check, upper_ratio_stat(&mu, m, level, &opts));
            let lower = try_check!(check, lower_ratio_stat(&mu, m, level, &opts));
            check.require((upper.log2_value - want).abs() <= 1e-12, || {
                format!("p={p} m={m}: log2 H {:.15} != {want:.15}", upper.log2_value)
            });
            check.require(upper.log2_value == lower.log2_value, || {
                format!("p={p} m={m}: H and h differ on a product tree")
            });
            if m <= 3 {
                let oracle =
                    try_check!(check, brute_force_oracle(&mu, StatKind::Upper, m, level));
                check.require((oracle.log2_value - want).abs() <= 1e-12, || {
                    format!("p={p} m={m}: oracle {:.15} != {want:.15}", oracle.log2_value)
                });
            }
        }

        // The exponent approaches -log2 max(p, 1-p) like C/m; successive
        // gaps shrink, and the two-point extrapolation over m = 8 and 24
        // removes the 1/m term entirely.
        let exponent = |m: u32| -> Result<f64> {
            let opts = StatOptions { depth_budget: 2 * m + 8, ..StatOptions::default() };
            let level = level_from_delta(m, one)?;
            Ok(upper_ratio_stat(&mu, m, level.min(50), &opts)?.exponent())
        };
        let e8 = try_check!(check, exponent(8));
        let e16 = try_check!(check, exponent(16));
        let e24 = try_check!(check, exponent(24));
        check.require(e8 > e16 && e16 > e24 && e24 > limit, || {
            format!("p={p}: exponent gaps fail to shrink: {e8:.5} {e16:.5} {e24:.5} -> {limit:.5}")
        });
        let extrapolated = (24.0 * e24 - 8.0 * e8) / 16.0;
        check.require((extrapolated - limit).abs() <= 0.02, || {
            format!("p={p}: extrapolated exponent {extrapolated:.6} vs limit {limit:.6}")
        });

        let opts = StatOptions { depth_budget: 160, ..StatOptions::default() };
        let e128 = try_check!(check, upper_ratio_stat(&mu, 128, 1, &opts)).exponent();
        check.require((e128 - limit).abs() <= 0.02, || {
            format!("p={p}: exponent at m=128 is {e128:.6}, limit {limit:.6}")
        });
        check.note(format!(
            "p={p}: gaps at m=8/16/24 are {:.4}/{:.4}/{:.4}, extrapolation error {:.1e}, m=128 gap {:.4}",
            e8 - limit,
            e16 - limit,
            e24 - limit,
            (extrapolated - limit).abs(),
            e128 - limit
        ));
    }
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 7: upper-tail frequencies stay under the closed-form bound
// ---------------------------------------------------------------------------

pub fn criterion_upper_tail(slow: bool, threads: usize) -> CriterionReport {
    let mut check = Check::new("upper-tail-bound");
    let delta: DeltaParam = "2/5".parse().expect("valid delta");
    check.require(
        upper_delta_admissible(1, 1, delta).unwrap_or(false),
        || "delta 2/5 should be admissible at d=1, N=1".to_string(),
    );

    let frozen: [(u32, u32, f64); 3] = [
        (4, 10, 0.018172734640507619924),
        (6, 15, 0.00033513513431088414544),
        (8, 20, 1.125214382140055595e-7),
    ];
    let m_values: Vec<u32> = if slow { vec![4, 6, 8] } else { vec![4, 6] };
    for &(m, level, want) in &frozen {
        if !m_values.contains(&m) {
            continue;
        }
        let bound = try_check!(check, upper_tail_bound(1, 1, m, level));
        check.require(rel_close(bound, want, 1e-10), || {
            format!("bound m={m}: {bound:.17e} != frozen {want:.17e}")
        });
    }

    let mut config = ExperimentConfig::new(ExperimentKind::UpperTail, 1);
    config.threshold = 1;
    config.m_values = m_values;
    config.deltas = vec![delta];
    config.trials = 400;
    config.master_seed = 0x5EED_0701;
    config.threads = threads;
    let report = try_check!(check, experiment::run(&config));
    for row in &report.rows {
        check.require(row.pass == Some(true), || {
            format!(
                "m={}: frequency {:.4} above bound {:.4e} + {:.4e}",
                row.m.unwrap(),
                row.value,
                row.bound.unwrap(),
                row.radius3.unwrap()
            )
        });
        check.note(format!(
            "m={} freq {:.4} <= bound {:.3e} (+3sd)",
            row.m.unwrap(),
            row.value,
            row.bound.unwrap()
        ));
    }

    // Single-branch sanity: the tail of a product of uniforms at its
    // geometric mean never beats the m = 1 value 1 - 1/e and decays
    // monotonically, pinning the series evaluation the bound relies on.
    let mut prev = 1.0 - (-1.0f64).exp() + 1e-15;
    for m in 2..=12u32 {
        let p = try_check!(check, product_uniform_tail(m, (-(m as f64)).exp()));
        check.require(p < prev && p > 0.5, || {
            format!("product tail at m={m} is {p:.6}, previous {prev:.6}")
        });
        prev = p;
    }
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 8: lower-tail frequencies stay under the closed-form bound
// ---------------------------------------------------------------------------

pub fn criterion_lower_tail(threads: usize) -> CriterionReport {
    let mut check = Check::new("lower-tail-bound");
    let delta: DeltaParam = "1/2".parse().expect("valid delta");
    check.require(
        lower_params_admissible(1, 2, delta).unwrap_or(false),
        || "delta 1/2 should be admissible at d=1, N=2".to_string(),
    );

    let frozen: [(u32, u32, f64); 2] =
        [(4, 8, 0.1509282512475838854), (8, 16, 0.028739229739047073662)];
    for &(m, level, want) in &frozen {
        let bound = try_check!(check, lower_tail_bound(1, 2, m, level));
        check.require(rel_close(bound, want, 1e-10), || {
            format!("bound m={m}: {bound:.17e} != frozen {want:.17e}")
        });
    }

    let mut config = ExperimentConfig::new(ExperimentKind::LowerTail, 1);
    config.threshold = 2;
    config.m_values = vec![4, 8];
    config.deltas = vec![delta];
    config.trials = 400;
    config.master_seed = 0x5EED_0802;
    config.threads = threads;
    let report = try_check!(check, experiment::run(&config));
    for row in &report.rows {
        check.require(row.pass == Some(true), || {
            format!(
                "m={}: frequency {:.4} above bound {:.4} + {:.4e}",
                row.m.unwrap(),
                row.value,
                row.bound.unwrap(),
                row.radius3.unwrap()
            )
        });
        check.note(format!(
            "m={} freq {:.4} <= bound {:.4} (+3sd)",
            row.m.unwrap(),
            row.value,
            row.bound.unwrap()
        ));
    }
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 9: scale-function levels
// ---------------------------------------------------------------------------

pub fn criterion_phi_machinery() -> CriterionReport {
    let mut check = Check::new("phi-levels");

    // Power form must route through the same integer arithmetic as plain
    // delta for every m, including exact boundaries.
    let mut agreements = 0u32;
    for (p, q) in [(1u64, 1u64), (1, 2), (2, 5), (3, 7), (7, 3)] {
        let delta = DeltaParam::new(p, q).expect("valid delta");
        let phi = PhiSpec::Power(delta);
        for m in 1..=64u32 {
            let direct = match level_from_delta(m, delta) {
                Ok(l) => l,
                Err(e) => return check.fail_with(e),
            };
            let via_phi = match level_from_phi(&phi, m, u32::MAX) {
                Ok(l) => l,
                Err(e) => return check.fail_with(e),
            };
            check.require(via_phi == PhiLevel { level: direct, capped: false }, || {
                format!("power {p}/{q} m={m}: {via_phi:?} != uncapped level {direct}")
            });
            agreements += 1;
        }
    }

    // Power quasi-inverse closed form: at y = 2^m and delta = 2 the answer
    // is 2^{-m/2} on the nose.
    let phi2 = PhiSpec::Power("2/1".parse().expect("valid delta"));
    for m in 1..=20u32 {
        let qi = try_check!(check, quasi_inverse(&phi2, (m as f64).exp2()))
            .expect("power form is never vacuous");
        let want = (-(m as f64) / 2.0).exp2();
        check.require(rel_close(qi, want, 1e-12), || {
            format!("power quasi-inverse at m={m}: {qi:.16e} != {want:.16e}")
        });
    }

    // Constant form: vacuous above the constant (capped), level 0 below.
    let constant = try_check!(check, PhiSpec::constant(2.0));
    let capped = try_check!(check, level_from_phi(&constant, 4, 16));
    check.require(capped == PhiLevel { level: 16, capped: true }, || {
        format!("constant phi at m=4: {capped:?} should cap at 16")
    });
    let free = try_check!(check, level_from_phi(&constant, 1, 16));
    check.require(free == PhiLevel { level: 0, capped: false }, || {
        format!("constant phi at m=1: {free:?} should be level 0")
    });

    // Tabulated x^{-1/2}: quasi-inverse of 4 is 1/16, level at m=2 is 4.
    let points: Vec<(f64, f64)> = (1..1024).map(|k| {
        let x = k as f64 / 1024.0;
        (x, x.powf(-0.5))
    }).collect();
    let table = PhiSpec::Tabulated(try_check!(check, PhiTable::new(points)));
    let qi = try_check!(check, quasi_inverse(&table, 4.0)).expect("4 is reachable");
    check.require((qi - 1.0 / 16.0).abs() <= 1e-10, || {
        format!("tabulated quasi-inverse {qi:.14} != 1/16")
    });
    let level = try_check!(check, level_from_phi(&table, 2, 32));
    check.require(level == PhiLevel { level: 4, capped: false }, || {
        format!("tabulated level {level:?} != 4")
    });

    check.note(format!(
        "power/delta agreement on {agreements} cases; constant caps; tabulated bisection hits 1/16"
    ));
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 10: upper exponents grow along a decreasing delta schedule
// ---------------------------------------------------------------------------

pub fn criterion_profile_trend(threads: usize) -> CriterionReport {
    let mut check = Check::new("profile-trend");
    let mut config = ExperimentConfig::new(ExperimentKind::ProfileTrend, 1);
    config.m_values = vec![6];
    config.deltas = vec![
        "1/1".parse().expect("valid delta"),
        "1/2".parse().expect("valid delta"),
        "1/3".parse().expect("valid delta"),
    ];
    config.trials = 100;
    config.master_seed = 0x5EED_1001;
    config.threads = threads;
    let report = try_check!(check, experiment::run(&config));

    let means: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.metric == "mean_exponent")
        .map(|r| r.value)
        .collect();
    check.require(means.windows(2).all(|w| w[1] > w[0]), || {
        format!("mean exponents not strictly increasing: {means:?}")
    });
    let summary = report.rows.last().expect("summary row present");
    check.require(summary.metric == "monotone_fraction" && summary.pass == Some(true), || {
        format!("monotone fraction {:.3} below 0.9", summary.value)
    });
    check.note(format!(
        "means {:.4} -> {:.4} -> {:.4}, monotone fraction {:.2}",
        means[0], means[1], means[2], summary.value
    ));
    check.finish()
}

// ---------------------------------------------------------------------------
// Criterion 11: reports and statistics are bitwise reproducible
// ---------------------------------------------------------------------------

pub fn criterion_determinism() -> CriterionReport {
    let mut check = Check::new("determinism");

    let mut config = ExperimentConfig::new(ExperimentKind::UpperTail, 1);
    config.m_values = vec![2, 3];
    config.deltas = vec!["1/2".parse().expect("valid delta")];
    config.trials = 64;
    config.master_seed = 0xD3_7E_12;
    let mut serials = Vec::new();
    for threads in [1usize, 8, 8] {
        config.threads = threads;
        let report = try_check!(check, experiment::run(&config));
        serials.push((report_csv_string(&report), report_json_string(&report)));
    }
    check.require(
        serials.iter().all(|s| s.0 == serials[0].0 && s.1 == serials[0].1),
        || "serialized reports differ across reruns or thread counts".to_string(),
    );

    let mu = match make_random_measure(2, 0xBEEF) {
        Ok(mu) => mu,
        Err(e) => return check.fail_with(e),
    };
    let base = try_check!(
        check,
        ratio_stat(&mu, StatKind::Upper, 2, 5, &StatOptions::default())
    );
    for threads in [2usize, 8] {
        let par = try_check!(
            check,
            ratio_stat(&mu, StatKind::Upper, 2, 5, &StatOptions { threads, depth_budget: 32 })
        );
        check.require(
            par.log2_value.to_bits() == base.log2_value.to_bits() && par.witness == base.witness,
            || format!("statistic differs at {threads} threads"),
        );
    }
    check.note("reports and level scans byte-identical across thread counts".to_string());
    check.finish()
}

/// Runs every acceptance criterion. `slow` adds the large upper-tail
/// configuration; `threads` is passed to the Monte Carlo drivers.
pub fn all_criteria(slow: bool, threads: usize) -> Vec<CriterionReport> {
    vec![
        criterion_marginal_law(threads),
        criterion_conservation(),
        criterion_expectation(threads),
        criterion_lebesgue_exactness(),
        criterion_oracle_equivalence(),
        criterion_bernoulli_closed_form(),
        criterion_upper_tail(slow, threads),
        criterion_lower_tail(threads),
        criterion_phi_machinery(),
        criterion_profile_trend(threads),
        criterion_determinism(),
    ]
}
