//! Monte Carlo experiments comparing sampled ratio statistics with the
//! closed-form bounds, plus deterministic report serialization.
//!
//! Reports are written by hand rather than through a serializer so the byte
//! stream is pinned down completely: floats always use `{:.16e}` (17
//! significant digits, lossless for binary64), absent cells are `na` in CSV
//! and `null` in JSON, and rows appear in schedule order. Two runs with the
//! same config produce identical bytes regardless of thread count. Wall
//! time is deliberately kept out of the serialized forms.

use std::fmt::Write as _;
use std::time::Instant;

use crate::analytics::{lower_tail_bound, upper_tail_bound};
use crate::dimension::{level_from_delta, lower_ratio_stat, upper_ratio_stat, DeltaParam, StatOptions};
use crate::error::{Error, Result};
use crate::measure::{make_product_measure, make_random_measure, Measure};
use crate::random::{beta_cdf, derive_generator, ks_critical_001, ks_distance, trial_seed};
use crate::tree::{NodePath, MAX_AMBIENT_DIM};

/// The experiment families the driver knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Frequency of {log2 H <= N m} against [`upper_tail_bound`].
    UpperTail,
    /// Frequency of {log2 h >= m / N} against [`lower_tail_bound`].
    LowerTail,
    /// Mean mass of a fixed cube against its exact expectation 2^{-d level}.
    Expectation,
    /// KS distance of first edge-weight components against Beta(1, 2^d - 1).
    Marginal,
    /// Mean upper exponents along a decreasing delta schedule, plus the
    /// fraction of trials whose exponent chain increases strictly.
    ProfileTrend,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::UpperTail => "upper_tail",
            ExperimentKind::LowerTail => "lower_tail",
            ExperimentKind::Expectation => "expectation",
            ExperimentKind::Marginal => "marginal",
            ExperimentKind::ProfileTrend => "profile_trend",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "upper_tail" => ExperimentKind::UpperTail,
            "lower_tail" => ExperimentKind::LowerTail,
            "expectation" => ExperimentKind::Expectation,
            "marginal" => ExperimentKind::Marginal,
            "profile_trend" => ExperimentKind::ProfileTrend,
            other => return Err(Error::Parse(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Which measure each trial evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// Independent uniformly random tree per trial, seeded from the master
    /// seed and the trial index.
    Random,
    /// The same fixed product measure in every trial.
    Product(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: u8,
    /// Event slope N for the tail experiments.
    pub threshold: u32,
    pub m_values: Vec<u32>,
    pub deltas: Vec<DeltaParam>,
    pub trials: u64,
    pub master_seed: u64,
    pub depth_budget: u32,
    pub threads: usize,
    pub measure: MeasureSpec,
    /// Cube whose mass the expectation experiment averages.
    pub target: Option<NodePath>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, dim: u8) -> Self {
        ExperimentConfig {
            kind,
            dim,
            threshold: 1,
            m_values: vec![2],
            deltas: vec![DeltaParam::new(1, 1).expect("1/1 is a valid delta")],
            trials: 100,
            master_seed: 1,
            depth_budget: crate::dimension::DEFAULT_DEPTH_BUDGET,
            threads: 1,
            measure: MeasureSpec::Random,
            target: None,
        }
    }
}

/// One line of an experiment report. Optional fields appear as `na`/`null`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub kind: &'static str,
    pub dim: u8,
    pub threshold: Option<u32>,
    pub m: Option<u32>,
    pub delta: Option<DeltaParam>,
    pub level: Option<u32>,
    pub trials: u64,
    pub metric: &'static str,
    pub value: f64,
    pub sd: Option<f64>,
    pub radius3: Option<f64>,
    /// Closed-form bound or exact prediction the value is compared against.
    pub bound: Option<f64>,
    pub pass: Option<bool>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub version: &'static str,
    /// Wall time of the run; informational only, never serialized.
    pub elapsed_seconds: f64,
}

impl ExperimentReport {
    /// Every comparison row passed (rows without a verdict don't count).
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }
}

// ---------------------------------------------------------------------------
// Trial scheduling
// ---------------------------------------------------------------------------

/// Runs `f` for trial indices 0..trials, in parallel over contiguous chunks,
/// and returns the results in trial order. The output is independent of the
/// thread count by construction.
pub(crate) fn map_trials<T, F>(trials: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let workers = threads.max(1).min(trials.max(1) as usize);
    if workers <= 1 {
        return (0..trials).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..trials).map(|_| None).collect();
    let chunk = (trials as usize).div_ceil(workers);
    std::thread::scope(|scope| -> Result<()> {
        let f = &f;
        let mut handles = Vec::with_capacity(workers);
        for (w, slice) in out.chunks_mut(chunk).enumerate() {
            let start = (w * chunk) as u64;
            handles.push(scope.spawn(move || -> Result<()> {
                for (i, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(start + i as u64)?);
                }
                Ok(())
            }));
        }
        for handle in handles {
            handle.join().expect("trial worker panicked")?;
        }
        Ok(())
    })?;
    Ok(out.into_iter().map(|slot| slot.expect("every trial filled")).collect())
}

enum TrialMeasure {
    Random(crate::measure::RandomMeasure),
    Product(crate::measure::ProductMeasure),
}

impl TrialMeasure {
    fn as_measure(&self) -> &dyn Measure {
        match self {
            TrialMeasure::Random(m) => m,
            TrialMeasure::Product(m) => m,
        }
    }
}

fn trial_measure(config: &ExperimentConfig, trial: u64) -> Result<TrialMeasure> {
    match &config.measure {
        MeasureSpec::Random => Ok(TrialMeasure::Random(make_random_measure(
            config.dim,
            trial_seed(config.master_seed, trial),
        )?)),
        MeasureSpec::Product(weights) => {
            Ok(TrialMeasure::Product(make_product_measure(config.dim, weights)?))
        }
    }
}

fn check_config(config: &ExperimentConfig) -> Result<()> {
    if config.dim == 0 || config.dim > MAX_AMBIENT_DIM {
        return Err(Error::DimensionOutOfRange(config.dim));
    }
    if config.trials == 0 {
        return Err(Error::domain("experiment needs at least one trial"));
    }
    if config.m_values.is_empty() {
        return Err(Error::domain("experiment needs at least one tail length m"));
    }
    match config.kind {
        ExperimentKind::UpperTail | ExperimentKind::LowerTail => {
            if config.deltas.is_empty() {
                return Err(Error::domain("tail experiment needs at least one delta"));
            }
            if config.threshold == 0 {
                return Err(Error::domain("event slope threshold must be >= 1"));
            }
        }
        ExperimentKind::ProfileTrend => {
            if config.deltas.is_empty() {
                return Err(Error::domain("profile trend needs a delta schedule"));
            }
            if config.m_values.len() != 1 {
                return Err(Error::domain("profile trend uses exactly one tail length m"));
            }
            for pair in config.deltas.windows(2) {
                if !pair[0].gt(&pair[1]) {
                    return Err(Error::domain(format!(
                        "profile trend deltas must decrease strictly, got {} then {}",
                        pair[0], pair[1]
                    )));
                }
            }
        }
        ExperimentKind::Marginal => {
            if config.measure != MeasureSpec::Random {
                return Err(Error::domain(
                    "marginal experiment samples the random measure; a fixed product measure has no law to test",
                ));
            }
        }
        ExperimentKind::Expectation => {
            if let Some(target) = &config.target {
                if target.ambient_dim() != config.dim {
                    return Err(Error::DimensionMismatch {
                        expected: config.dim,
                        got: target.ambient_dim(),
                    });
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The experiment families
// ---------------------------------------------------------------------------

fn stat_options(config: &ExperimentConfig) -> StatOptions {
    // With many trials the parallelism lives at the trial level; a single
    // trial gets the whole thread budget for its level scan.
    StatOptions {
        threads: if config.trials == 1 { config.threads } else { 1 },
        depth_budget: config.depth_budget,
    }
}

fn frequency_rows(
    config: &ExperimentConfig,
    schedule: &[(u32, DeltaParam, u32)],
    hits_per_pair: &[u64],
    bounds: &[f64],
) -> Vec<ReportRow> {
    let trials = config.trials;
    schedule
        .iter()
        .zip(hits_per_pair)
        .zip(bounds)
        .map(|(((m, delta, level), &hits), &bound)| {
            let freq = hits as f64 / trials as f64;
            let sd = (freq * (1.0 - freq) / trials as f64).sqrt();
            let radius3 = 3.0 * sd;
            ReportRow {
                kind: config.kind.as_str(),
                dim: config.dim,
                threshold: Some(config.threshold),
                m: Some(*m),
                delta: Some(*delta),
                level: Some(*level),
                trials,
                metric: "frequency",
                value: freq,
                sd: Some(sd),
                radius3: Some(radius3),
                bound: Some(bound),
                pass: Some(freq <= bound + radius3),
                seed: config.master_seed,
            }
        })
        .collect()
}

fn run_tail(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let upper = config.kind == ExperimentKind::UpperTail;
    let opts = stat_options(config);

    let mut schedule = Vec::new();
    let mut bounds = Vec::new();
    for &m in &config.m_values {
        for &delta in &config.deltas {
            let level = level_from_delta(m, delta)?;
            let bound = if upper {
                upper_tail_bound(config.dim, config.threshold, m, level)?
            } else {
                lower_tail_bound(config.dim, config.threshold, m, level)?
            };
            schedule.push((m, delta, level));
            bounds.push(bound);
        }
    }

    // One measure per trial, every scheduled statistic evaluated on it.
    let events = map_trials(config.trials, config.threads, |trial| {
        let measure = trial_measure(config, trial)?;
        let mu = measure.as_measure();
        let mut hits = Vec::with_capacity(schedule.len());
        for &(m, _, level) in &schedule {
            let stat = if upper {
                upper_ratio_stat(mu, m, level, &opts)?
            } else {
                lower_ratio_stat(mu, m, level, &opts)?
            };
            let event = if upper {
                stat.log2_value <= (config.threshold as u64 * m as u64) as f64
            } else {
                stat.log2_value >= m as f64 / config.threshold as f64
            };
            hits.push(event);
        }
        Ok(hits)
    })?;

    let mut hits_per_pair = vec![0u64; schedule.len()];
    for trial_hits in &events {
        for (slot, &hit) in hits_per_pair.iter_mut().zip(trial_hits) {
            *slot += hit as u64;
        }
    }
    Ok(frequency_rows(config, &schedule, &hits_per_pair, &bounds))
}

fn run_expectation(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let root = NodePath::root(config.dim)?;
    let target = config.target.clone().unwrap_or(root);
    let masses = map_trials(config.trials, config.threads, |trial| {
        let measure = trial_measure(config, trial)?;
        Ok(measure.as_measure().mass(&target)?.linear())
    })?;

    let n = masses.len() as f64;
    let mean = masses.iter().sum::<f64>() / n;
    let prediction = crate::analytics::predicted_cube_mass(&target).linear();
    let (sd, radius3, pass) = if masses.len() >= 2 {
        let var = masses.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let sigma_mean = (var / n).sqrt();
        let radius3 = 3.0 * sigma_mean;
        // A deterministic target (the root, or any product measure) gives
        // zero spread; the comparison degenerates to exact equality.
        (Some(sigma_mean), Some(radius3), Some((mean - prediction).abs() <= radius3))
    } else {
        (None, None, None)
    };

    Ok(vec![ReportRow {
        kind: config.kind.as_str(),
        dim: config.dim,
        threshold: None,
        m: None,
        delta: None,
        level: Some(target.level()),
        trials: config.trials,
        metric: "mean_mass",
        value: mean,
        sd,
        radius3,
        bound: Some(prediction),
        pass,
        seed: config.master_seed,
    }])
}

fn run_marginal(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    // One random tree, one sample of the first weight component per distinct
    // node at a depth with at least `trials` nodes. Distinct nodes draw from
    // independent streams, so the samples are iid Beta(1, 2^d - 1).
    let dim = config.dim;
    let fanout = 1u64 << dim;
    let mut depth = 5u32;
    while fanout.saturating_pow(depth) < config.trials {
        depth += 1;
    }

    let mut samples = map_trials(config.trials, config.threads, |trial| {
        let node = NodePath::from_level_index(dim, depth, trial)?;
        let mut rng = derive_generator(config.master_seed, &node);
        let mut weights = vec![0.0f64; fanout as usize];
        crate::random::sample_uniform_simplex_into(&mut rng, &mut weights)?;
        Ok(weights[0])
    })?;
    samples.sort_unstable_by(f64::total_cmp);

    let n = fanout as u32;
    let ks = ks_distance(&samples, |x| beta_cdf(x, n).unwrap_or(f64::NAN))?;
    let bound = ks_critical_001(samples.len());
    let pass = if config.trials > 1 { Some(ks <= bound) } else { None };

    Ok(vec![ReportRow {
        kind: config.kind.as_str(),
        dim,
        threshold: None,
        m: None,
        delta: None,
        level: Some(depth),
        trials: config.trials,
        metric: "ks_distance",
        value: ks,
        sd: None,
        radius3: None,
        bound: Some(bound),
        pass,
        seed: config.master_seed,
    }])
}

fn run_profile_trend(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let m = config.m_values[0];
    let opts = stat_options(config);
    let mut levels = Vec::with_capacity(config.deltas.len());
    for &delta in &config.deltas {
        levels.push(level_from_delta(m, delta)?);
    }

    let chains = map_trials(config.trials, config.threads, |trial| {
        let measure = trial_measure(config, trial)?;
        let mu = measure.as_measure();
        let mut chain = Vec::with_capacity(levels.len());
        for &level in &levels {
            let stat = upper_ratio_stat(mu, m, level, &opts)?;
            chain.push(stat.log2_value / m as f64);
        }
        Ok(chain)
    })?;

    let trials = config.trials as f64;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for (i, (&delta, &level)) in config.deltas.iter().zip(&levels).enumerate() {
        let column: Vec<f64> = chains.iter().map(|c| c[i]).collect();
        let mean = column.iter().sum::<f64>() / trials;
        let sd = if column.len() >= 2 {
            let var =
                column.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (trials - 1.0);
            Some(var.sqrt())
        } else {
            None
        };
        means.push(mean);
        rows.push(ReportRow {
            kind: config.kind.as_str(),
            dim: config.dim,
            threshold: None,
            m: Some(m),
            delta: Some(delta),
            level: Some(level),
            trials: config.trials,
            metric: "mean_exponent",
            value: mean,
            sd,
            radius3: None,
            bound: None,
            pass: None,
            seed: config.master_seed,
        });
    }

    if config.deltas.len() >= 2 {
        let monotone = chains
            .iter()
            .filter(|chain| chain.windows(2).all(|w| w[1] > w[0]))
            .count();
        let fraction = monotone as f64 / trials;
        let means_increase = means.windows(2).all(|w| w[1] > w[0]);
        rows.push(ReportRow {
            kind: config.kind.as_str(),
            dim: config.dim,
            threshold: None,
            m: Some(m),
            delta: None,
            level: None,
            trials: config.trials,
            metric: "monotone_fraction",
            value: fraction,
            sd: None,
            radius3: None,
            bound: Some(0.9),
            pass: Some(fraction >= 0.9 && means_increase),
            seed: config.master_seed,
        });
    }
    Ok(rows)
}

/// Runs the configured experiment and returns its report.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    check_config(config)?;
    let start = Instant::now();
    let rows = match config.kind {
        ExperimentKind::UpperTail | ExperimentKind::LowerTail => run_tail(config),
        ExperimentKind::Expectation => run_expectation(config),
        ExperimentKind::Marginal => run_marginal(config),
        ExperimentKind::ProfileTrend => run_profile_trend(config),
    }?;
    Ok(ExperimentReport {
        config: config.clone(),
        rows,
        version: env!("CARGO_PKG_VERSION"),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

pub const CSV_HEADER: &str =
    "kind,d,N,m,delta_num,delta_den,level,trials,metric,value,sd,radius3,bound_or_prediction,pass,seed,version";

fn push_f64(out: &mut String, x: f64) {
    // 17 significant digits: lossless for binary64, bitwise stable output.
    write!(out, "{x:.16e}").expect("writing to String cannot fail");
}

fn push_opt_f64(out: &mut String, x: Option<f64>, missing: &str) {
    match x {
        Some(v) => push_f64(out, v),
        None => out.push_str(missing),
    }
}

pub fn report_csv_string(report: &ExperimentReport) -> String {
    let mut out = String::with_capacity(256 + 160 * report.rows.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(row.kind);
        write!(out, ",{}", row.dim).unwrap();
        match row.threshold {
            Some(n) => write!(out, ",{n}").unwrap(),
            None => out.push_str(",na"),
        }
        match row.m {
            Some(m) => write!(out, ",{m}").unwrap(),
            None => out.push_str(",na"),
        }
        match row.delta {
            Some(d) => write!(out, ",{},{}", d.num(), d.den()).unwrap(),
            None => out.push_str(",na,na"),
        }
        match row.level {
            Some(l) => write!(out, ",{l}").unwrap(),
            None => out.push_str(",na"),
        }
        write!(out, ",{},{},", row.trials, row.metric).unwrap();
        push_f64(&mut out, row.value);
        out.push(',');
        push_opt_f64(&mut out, row.sd, "na");
        out.push(',');
        push_opt_f64(&mut out, row.radius3, "na");
        out.push(',');
        push_opt_f64(&mut out, row.bound, "na");
        match row.pass {
            Some(true) => out.push_str(",true"),
            Some(false) => out.push_str(",false"),
            None => out.push_str(",na"),
        }
        write!(out, ",{},{}", row.seed, report.version).unwrap();
        out.push('\n');
    }
    out
}

fn push_json_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => write!(out, "\\u{:04x}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn report_json_string(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let mut out = String::with_capacity(512 + 220 * report.rows.len());
    out.push_str("{\n  \"config\": {\n");
    writeln!(out, "    \"kind\": \"{}\",", cfg.kind.as_str()).unwrap();
    writeln!(out, "    \"d\": {},", cfg.dim).unwrap();
    writeln!(out, "    \"N\": {},", cfg.threshold).unwrap();
    out.push_str("    \"m_values\": [");
    for (i, m) in cfg.m_values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{m}").unwrap();
    }
    out.push_str("],\n    \"deltas\": [");
    for (i, d) in cfg.deltas.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        push_json_str(&mut out, &d.to_string());
    }
    out.push_str("],\n");
    writeln!(out, "    \"trials\": {},", cfg.trials).unwrap();
    writeln!(out, "    \"seed\": {},", cfg.master_seed).unwrap();
    writeln!(out, "    \"depth_budget\": {},", cfg.depth_budget).unwrap();
    out.push_str("    \"measure\": ");
    match &cfg.measure {
        MeasureSpec::Random => out.push_str("\"random\""),
        MeasureSpec::Product(w) => {
            out.push_str("{\"product\": [");
            for (i, x) in w.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                push_f64(&mut out, *x);
            }
            out.push_str("]}");
        }
    }
    out.push_str(",\n    \"target\": ");
    match &cfg.target {
        Some(path) => push_json_str(&mut out, &path.to_string()),
        None => out.push_str("null"),
    }
    out.push_str("\n  },\n");
    writeln!(out, "  \"version\": \"{}\",", report.version).unwrap();
    out.push_str("  \"rows\": [\n");
    for (i, row) in report.rows.iter().enumerate() {
        out.push_str("    {");
        write!(out, "\"kind\": \"{}\", \"d\": {}, ", row.kind, row.dim).unwrap();
        match row.threshold {
            Some(n) => write!(out, "\"N\": {n}, ").unwrap(),
            None => out.push_str("\"N\": null, "),
        }
        match row.m {
            Some(m) => write!(out, "\"m\": {m}, ").unwrap(),
            None => out.push_str("\"m\": null, "),
        }
        match row.delta {
            Some(d) => {
                out.push_str("\"delta\": ");
                push_json_str(&mut out, &d.to_string());
                out.push_str(", ");
            }
            None => out.push_str("\"delta\": null, "),
        }
        match row.level {
            Some(l) => write!(out, "\"level\": {l}, ").unwrap(),
            None => out.push_str("\"level\": null, "),
        }
        write!(out, "\"trials\": {}, \"metric\": \"{}\", ", row.trials, row.metric).unwrap();
        out.push_str("\"value\": ");
        push_f64(&mut out, row.value);
        out.push_str(", \"sd\": ");
        push_opt_f64(&mut out, row.sd, "null");
        out.push_str(", \"radius3\": ");
        push_opt_f64(&mut out, row.radius3, "null");
        out.push_str(", \"bound_or_prediction\": ");
        push_opt_f64(&mut out, row.bound, "null");
        out.push_str(", \"pass\": ");
        match row.pass {
            Some(true) => out.push_str("true"),
            Some(false) => out.push_str("false"),
            None => out.push_str("null"),
        }
        write!(out, ", \"seed\": {}}}", row.seed).unwrap();
        out.push_str(if i + 1 < report.rows.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Writes the report to `path`, choosing the format from the extension
/// (".json" for JSON, anything else CSV).
pub fn write_report(report: &ExperimentReport, path: &std::path::Path) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        report_json_string(report)
    } else {
        report_csv_string(report)
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses a CSV report back into rows (header line included); the inverse of
/// [`report_csv_string`] up to the version column, which is returned
/// separately from the first row.
pub fn parse_report_csv(text: &str) -> Result<(Vec<ReportRow>, String)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty report".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected report header `{header}`")));
    }

    fn opt_u32(field: &str) -> Result<Option<u32>> {
        if field == "na" {
            return Ok(None);
        }
        field
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("bad integer field `{field}`")))
    }
    fn opt_f64(field: &str) -> Result<Option<f64>> {
        if field == "na" {
            return Ok(None);
        }
        field
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("bad float field `{field}`")))
    }

    let mut version = String::new();
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::Parse(format!(
                "report row has {} fields, expected 16",
                fields.len()
            )));
        }
        let kind = ExperimentKind::parse(fields[0])?.as_str();
        let delta = match (opt_u32(fields[4])?, opt_u32(fields[5])?) {
            (Some(num), Some(den)) => Some(DeltaParam::new(num as u64, den as u64)?),
            (None, None) => None,
            _ => return Err(Error::Parse("half-missing delta columns".into())),
        };
        let metric = match fields[8] {
            "frequency" => "frequency",
            "mean_mass" => "mean_mass",
            "ks_distance" => "ks_distance",
            "mean_exponent" => "mean_exponent",
            "monotone_fraction" => "monotone_fraction",
            other => return Err(Error::Parse(format!("unknown metric `{other}`"))),
        };
        let pass = match fields[13] {
            "true" => Some(true),
            "false" => Some(false),
            "na" => None,
            other => return Err(Error::Parse(format!("bad pass field `{other}`"))),
        };
        version = fields[15].to_string();
        rows.push(ReportRow {
            kind,
            dim: fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad dimension `{}`", fields[1])))?,
            threshold: opt_u32(fields[2])?,
            m: opt_u32(fields[3])?,
            delta,
            level: opt_u32(fields[6])?,
            trials: fields[7]
                .parse()
                .map_err(|_| Error::Parse(format!("bad trials `{}`", fields[7])))?,
            metric,
            value: opt_f64(fields[9])?
                .ok_or_else(|| Error::Parse("value column cannot be na".into()))?,
            sd: opt_f64(fields[10])?,
            radius3: opt_f64(fields[11])?,
            bound: opt_f64(fields[12])?,
            pass,
            seed: fields[14]
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed `{}`", fields[14])))?,
        });
    }
    Ok((rows, version))
}
