//! `dyadim`: sample random dyadic measures, evaluate ratio statistics,
//! print closed-form tail bounds, and drive Monte Carlo experiments.
//!
//! Output discipline: everything a run computes goes to stdout in a fixed,
//! reproducible format (floats as `{:.16e}` where exactness matters); wall
//! times and progress notes go to stderr so piped output stays comparable
//! byte for byte.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dyadim::dimension::{
    estimate_profile, DeltaParam, PhiSpec, PhiTable, ProfileOptions, ScaleSpec, ScheduleEntry,
    StatOptions, DEFAULT_DEPTH_BUDGET,
};
use dyadim::experiment::{
    report_csv_string, report_json_string, write_report, ExperimentConfig, ExperimentKind,
    MeasureSpec,
};
use dyadim::measure::{
    load_explicit_measure, make_product_measure, make_random_measure, snapshot_measure,
    Continuation, ExplicitMeasure, Measure, ProductMeasure, RandomMeasure,
};
use dyadim::tree::{path_to_cube, NodePath};
use dyadim::{analytics, verify, Error, Result};

#[derive(Parser)]
#[command(
    name = "dyadim",
    version,
    about = "Random measures on the dyadic grid of [0,1]^d: sampling, ratio statistics, tail bounds, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random measure and store its top levels as an explicit
    /// measure file.
    Sample(SampleArgs),
    /// Evaluate the mass of one dyadic cube.
    Mass(MassArgs),
    /// Evaluate the upper and lower ratio statistics at one (m, scale).
    Stat(StatArgs),
    /// Evaluate the statistics over a schedule of (m, scale) pairs.
    Profile(ProfileArgs),
    /// Print closed-form tail bounds and admissibility of the parameters.
    Bound(BoundArgs),
    /// Run a Monte Carlo experiment and write its report.
    Experiment(ExperimentArgs),
    /// Run the self-verification criteria.
    Verify(VerifyArgs),
}

/// Where a command takes its measure from. Exactly one source is required.
#[derive(Args)]
struct MeasureSource {
    /// Seed for a uniformly random measure (requires --d).
    #[arg(long, conflicts_with_all = ["file", "weights"])]
    seed: Option<u64>,
    /// Explicit measure file written by `dyadim sample` (carries its own d).
    #[arg(long, conflicts_with_all = ["seed", "weights"])]
    file: Option<PathBuf>,
    /// Comma-separated product weights, e.g. 0.2,0.8 (d is log2 of the count).
    #[arg(long, conflicts_with_all = ["seed", "file"])]
    weights: Option<String>,
}

enum LoadedMeasure {
    Random(RandomMeasure),
    Explicit(ExplicitMeasure),
    Product(ProductMeasure),
}

impl LoadedMeasure {
    fn as_measure(&self) -> &dyn Measure {
        match self {
            LoadedMeasure::Random(m) => m,
            LoadedMeasure::Explicit(m) => m,
            LoadedMeasure::Product(m) => m,
        }
    }

    fn describe(&self) -> String {
        match self {
            LoadedMeasure::Random(m) => {
                format!("measure: random d={} seed={}", m.ambient_dim(), m.seed())
            }
            LoadedMeasure::Explicit(m) => format!(
                "measure: explicit d={} stored_nodes={} continuation={}",
                m.ambient_dim(),
                m.stored_len(),
                m.continuation().as_str()
            ),
            LoadedMeasure::Product(m) => format!(
                "measure: product d={} weights={}",
                m.ambient_dim(),
                m.weights()
                    .iter()
                    .map(|w| format!("{w}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }
}

fn parse_weights(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid weight `{t}`")))
        })
        .collect()
}

fn weights_dim(count: usize) -> Result<u8> {
    let dim = (count as f64).log2().round() as u8;
    if count == 0 || (1usize << dim) != count {
        return Err(Error::Parse(format!(
            "product weights need a power-of-two count, got {count}"
        )));
    }
    Ok(dim)
}

impl MeasureSource {
    fn tag(&self) -> String {
        match (&self.seed, &self.file, &self.weights) {
            (Some(seed), None, None) => format!("seed:{seed}"),
            (None, Some(path), None) => format!("file:{}", path.display()),
            (None, None, Some(weights)) => format!("weights:{weights}"),
            _ => "unset".to_owned(),
        }
    }

    fn load(&self, dim: Option<u8>) -> Result<LoadedMeasure> {
        match (&self.seed, &self.file, &self.weights) {
            (Some(seed), None, None) => {
                let dim = dim.ok_or_else(|| {
                    Error::domain("--seed needs --d to fix the ambient dimension")
                })?;
                Ok(LoadedMeasure::Random(make_random_measure(dim, *seed)?))
            }
            (None, Some(path), None) => {
                let mu = load_explicit_measure(path)?;
                if let Some(d) = dim {
                    if d != mu.ambient_dim() {
                        return Err(Error::DimensionMismatch { expected: d, got: mu.ambient_dim() });
                    }
                }
                Ok(LoadedMeasure::Explicit(mu))
            }
            (None, None, Some(text)) => {
                let weights = parse_weights(text)?;
                let d = weights_dim(weights.len())?;
                if let Some(want) = dim {
                    if want != d {
                        return Err(Error::DimensionMismatch { expected: want, got: d });
                    }
                }
                Ok(LoadedMeasure::Product(make_product_measure(d, &weights)?))
            }
            _ => Err(Error::domain(
                "choose exactly one measure source: --seed, --file, or --weights",
            )),
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Ambient dimension (1..=5 for explicit measure files).
    #[arg(long)]
    d: u8,
    /// Master seed of the measure.
    #[arg(long)]
    seed: u64,
    /// Store every node of level < depth.
    #[arg(long)]
    depth: u32,
    /// Continuation policy below the stored depth.
    #[arg(long, default_value = "uniform")]
    continuation: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MassArgs {
    /// Ambient dimension (needed with --seed; checked against other sources).
    #[arg(long)]
    d: Option<u8>,
    /// Node path, digits 0..2^d as one string (d <= 5) or dot-separated.
    #[arg(long)]
    path: String,
    #[command(flatten)]
    source: MeasureSource,
}

#[derive(Args)]
struct ScaleArgs {
    /// Scale exponent as an exact rational P/Q (or integer P).
    #[arg(long, conflicts_with = "phi")]
    delta: Option<String>,
    /// Scale function: `power:P/Q`, `const:V`, or `table:FILE` where FILE
    /// holds a JSON array of [x, y] sample pairs.
    #[arg(long, conflicts_with = "delta")]
    phi: Option<String>,
}

impl ScaleArgs {
    fn resolve(&self) -> Result<ScaleSpec> {
        match (&self.delta, &self.phi) {
            (Some(delta), None) => Ok(ScaleSpec::Delta(delta.parse()?)),
            (None, Some(phi)) => Ok(ScaleSpec::Phi(parse_phi(phi)?)),
            _ => Err(Error::domain("choose exactly one of --delta or --phi")),
        }
    }
}

fn parse_phi(text: &str) -> Result<PhiSpec> {
    let (tag, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("phi spec `{text}` needs the form tag:value")))?;
    match tag {
        "power" => Ok(PhiSpec::Power(rest.parse()?)),
        "const" => {
            let v: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("invalid constant phi `{rest}`")))?;
            PhiSpec::constant(v)
        }
        "table" => {
            let text = std::fs::read_to_string(rest)?;
            let pairs: Vec<(f64, f64)> = serde_json::from_str(&text)?;
            Ok(PhiSpec::Tabulated(PhiTable::new(pairs)?))
        }
        other => Err(Error::Parse(format!(
            "unknown phi form `{other}` (expected power, const, or table)"
        ))),
    }
}

#[derive(Args)]
struct StatArgs {
    /// Ambient dimension (needed with --seed; checked against other sources).
    #[arg(long)]
    d: Option<u8>,
    /// Tail length m >= 1.
    #[arg(long)]
    m: u32,
    #[command(flatten)]
    scale: ScaleArgs,
    /// Take the best value over all levels 1..=L instead of level L alone.
    #[arg(long)]
    multi_level: bool,
    /// Cap on levels derived from scale functions.
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    level_cap: u32,
    /// Guard on level + m; raise deliberately for deep scans.
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth_budget: u32,
    /// Worker threads for the level scan (never changes the result).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    source: MeasureSource,
}

#[derive(Args)]
struct ProfileArgs {
    /// Ambient dimension (needed with --seed; checked against other sources).
    #[arg(long)]
    d: Option<u8>,
    /// Comma-separated tail lengths, e.g. 2,4,6.
    #[arg(long)]
    m: String,
    #[command(flatten)]
    scale_list: ProfileScaleArgs,
    #[arg(long)]
    multi_level: bool,
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    level_cap: u32,
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth_budget: u32,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    source: MeasureSource,
}

#[derive(Args)]
struct ProfileScaleArgs {
    /// Comma-separated list of exact rationals, e.g. 1/1,1/2,1/3.
    #[arg(long, conflicts_with = "phi")]
    delta: Option<String>,
    /// One scale function applied to every m (see `stat --phi`).
    #[arg(long, conflicts_with = "delta")]
    phi: Option<String>,
}

impl ProfileScaleArgs {
    fn resolve(&self) -> Result<Vec<ScaleSpec>> {
        match (&self.delta, &self.phi) {
            (Some(list), None) => list
                .split(',')
                .map(|t| Ok(ScaleSpec::Delta(t.trim().parse()?)))
                .collect(),
            (None, Some(phi)) => Ok(vec![ScaleSpec::Phi(parse_phi(phi)?)]),
            _ => Err(Error::domain("choose exactly one of --delta or --phi")),
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    /// Ambient dimension.
    #[arg(long)]
    d: u8,
    /// Event slope N.
    #[arg(long = "N", default_value_t = 1)]
    threshold: u32,
    /// Tail length m.
    #[arg(long)]
    m: u32,
    /// Exact rational delta; the level becomes floor(m/delta).
    #[arg(long, conflicts_with = "level")]
    delta: Option<String>,
    /// Comparison level L, given directly.
    #[arg(long, conflicts_with = "delta")]
    level: Option<u32>,
    /// Which bounds to print: upper, lower, or both.
    #[arg(long, default_value = "both")]
    side: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment kind: upper_tail, lower_tail, expectation, marginal, or
    /// profile_trend.
    kind: String,
    /// Ambient dimension.
    #[arg(long)]
    d: u8,
    /// Event slope N for the tail experiments.
    #[arg(long = "N", default_value_t = 1)]
    threshold: u32,
    /// Comma-separated tail lengths.
    #[arg(long, default_value = "2")]
    m: String,
    /// Comma-separated exact rationals.
    #[arg(long, default_value = "1/1")]
    delta: String,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth_budget: u32,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Fixed product weights instead of per-trial random measures.
    #[arg(long)]
    product_weights: Option<String>,
    /// Target node for the expectation experiment.
    #[arg(long)]
    target: Option<String>,
    /// Report file; the extension picks the format (.json for JSON, CSV
    /// otherwise). Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout format when --out is omitted: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Include the large upper-tail configuration (minutes of wall time).
    #[arg(long)]
    slow: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Mass(args) => cmd_mass(args),
        Command::Stat(args) => cmd_stat(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let continuation = Continuation::parse(&args.continuation)?;
    let measure = make_random_measure(args.d, args.seed)?;
    let snapshot = snapshot_measure(&measure, args.depth)?;
    let explicit = if continuation == snapshot.continuation() {
        snapshot
    } else {
        let mut rebuilt = ExplicitMeasure::new(args.d, continuation)?;
        for (path, weights) in snapshot.stored_nodes() {
            rebuilt.insert(path.clone(), weights)?;
        }
        rebuilt
    };
    // The resolved config goes to stderr: stdout may carry the JSON
    // document itself.
    eprintln!(
        "config: sample d={} seed={} depth={} continuation={} out={} stored_nodes={}",
        args.d,
        args.seed,
        args.depth,
        continuation.as_str(),
        args.out.as_deref().map_or_else(|| "-".to_owned(), |p| p.display().to_string()),
        explicit.stored_len()
    );
    match args.out {
        Some(path) => {
            explicit.save(&path)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", explicit.to_json_string()?),
    }
    Ok(())
}

fn cmd_mass(args: MassArgs) -> Result<()> {
    let measure = args.source.load(args.d)?;
    let mu = measure.as_measure();
    eprintln!(
        "config: mass d={} path={} source={}",
        mu.ambient_dim(),
        args.path,
        args.source.tag()
    );
    let path = NodePath::parse(mu.ambient_dim(), &args.path)?;
    let cube = path_to_cube(&path);
    let mass = mu.mass(&path)?;
    println!("{}", measure.describe());
    println!(
        "node: {} (level {}, cube side 2^-{})",
        path,
        path.level(),
        cube.level()
    );
    println!("mass: {:.16e}", mass.linear());
    println!("log2_mass: {:.16e}", mass.log2());
    Ok(())
}

fn cmd_stat(args: StatArgs) -> Result<()> {
    let measure = args.source.load(args.d)?;
    let mu = measure.as_measure();
    let scale = args.scale.resolve()?;
    // threads= lives on stderr only; stdout must be byte-identical across
    // worker counts.
    eprintln!(
        "config: stat d={} m={} scale={} multi_level={} level_cap={} depth_budget={} threads={} source={}",
        mu.ambient_dim(),
        args.m,
        scale.tag(),
        args.multi_level,
        args.level_cap,
        args.depth_budget,
        args.threads,
        args.source.tag()
    );
    let opts = ProfileOptions {
        stat: StatOptions { threads: args.threads, depth_budget: args.depth_budget },
        level_cap: args.level_cap,
        multi_level: args.multi_level,
    };
    let schedule = [ScheduleEntry { m: args.m, scale: scale.clone() }];
    let rows = estimate_profile(mu, &schedule, &opts)?;
    let row = &rows[0];

    println!("{}", measure.describe());
    println!(
        "stat: m={} scale={} level={} capped={} multi_level={}",
        row.m,
        row.scale.tag(),
        row.level,
        row.capped,
        args.multi_level
    );
    println!(
        "upper: log2={:.16e} exponent={:.16e} witness={}",
        row.upper.log2_value,
        row.upper_exponent(),
        row.upper.witness
    );
    println!(
        "lower: log2={:.16e} exponent={:.16e} witness={}",
        row.lower.log2_value,
        row.lower_exponent(),
        row.lower.witness
    );
    Ok(())
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let measure = args.source.load(args.d)?;
    let mu = measure.as_measure();
    let m_values: Vec<u32> = args
        .m
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("invalid tail length `{t}`")))
        })
        .collect::<Result<_>>()?;
    let scales = args.scale_list.resolve()?;
    eprintln!(
        "config: profile d={} m={} scales={} multi_level={} level_cap={} depth_budget={} threads={} source={}",
        mu.ambient_dim(),
        args.m,
        scales.iter().map(|s| s.tag()).collect::<Vec<_>>().join(","),
        args.multi_level,
        args.level_cap,
        args.depth_budget,
        args.threads,
        args.source.tag()
    );
    let mut schedule = Vec::new();
    for &m in &m_values {
        for scale in &scales {
            schedule.push(ScheduleEntry { m, scale: scale.clone() });
        }
    }
    let opts = ProfileOptions {
        stat: StatOptions { threads: args.threads, depth_budget: args.depth_budget },
        level_cap: args.level_cap,
        multi_level: args.multi_level,
    };
    let rows = estimate_profile(mu, &schedule, &opts)?;

    println!("{}", measure.describe());
    println!("profile: entries={} multi_level={}", rows.len(), args.multi_level);
    for row in &rows {
        println!(
            "m={} scale={} level={} capped={} upper_log2={:.16e} upper_exp={:.16e} lower_log2={:.16e} lower_exp={:.16e}",
            row.m,
            row.scale.tag(),
            row.level,
            row.capped,
            row.upper.log2_value,
            row.upper_exponent(),
            row.lower.log2_value,
            row.lower_exponent()
        );
    }
    Ok(())
}

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let delta: Option<DeltaParam> = match &args.delta {
        Some(text) => Some(text.parse()?),
        None => None,
    };
    let level = match (delta, args.level) {
        (Some(delta), None) => dyadim::dimension::level_from_delta(args.m, delta)?,
        (None, Some(level)) => level,
        _ => return Err(Error::domain("choose exactly one of --delta or --level")),
    };

    eprintln!(
        "config: bound d={} N={} m={} delta={} level={} side={}",
        args.d,
        args.threshold,
        args.m,
        delta.map_or_else(|| "-".to_owned(), |d| d.to_string()),
        level,
        args.side
    );
    println!(
        "bound: d={} N={} m={} level={}{}",
        args.d,
        args.threshold,
        args.m,
        level,
        match delta {
            Some(d) => format!(" (delta={d})"),
            None => String::new(),
        }
    );
    let side = args.side.as_str();
    if side != "upper" && side != "lower" && side != "both" {
        return Err(Error::Parse(format!("unknown side `{side}` (expected upper, lower, or both)")));
    }
    if side == "upper" || side == "both" {
        let main = analytics::upper_tail_bound(args.d, args.threshold, args.m, level)?;
        let coarse = analytics::upper_tail_bound_coarse(args.d, args.threshold, args.m, level)?;
        println!("upper_bound: {main:.16e}");
        println!("upper_bound_coarse: {coarse:.16e}");
        if let Some(delta) = delta {
            let ok = analytics::upper_delta_admissible(args.d, args.threshold, delta)?;
            println!("upper_admissible: {ok}");
        }
    }
    if side == "lower" || side == "both" {
        let bound = analytics::lower_tail_bound(args.d, args.threshold, args.m, level)?;
        println!("lower_bound: {bound:.16e}");
        if let Some(delta) = delta {
            let ok = analytics::lower_params_admissible(args.d, args.threshold, delta)?;
            println!("lower_admissible: {ok}");
        }
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let kind = ExperimentKind::parse(&args.kind)?;
    let mut config = ExperimentConfig::new(kind, args.d);
    config.threshold = args.threshold;
    config.m_values = args
        .m
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("invalid tail length `{t}`")))
        })
        .collect::<Result<_>>()?;
    config.deltas = args
        .delta
        .split(',')
        .map(|t| t.trim().parse::<DeltaParam>())
        .collect::<Result<_>>()?;
    config.trials = args.trials;
    config.master_seed = args.seed;
    config.depth_budget = args.depth_budget;
    config.threads = args.threads;
    if let Some(weights) = &args.product_weights {
        config.measure = MeasureSpec::Product(parse_weights(weights)?);
    }
    if let Some(target) = &args.target {
        config.target = Some(NodePath::parse(args.d, target)?);
    }

    // Config echo and timing go to stderr so stdout stays a pure report
    // stream, byte-comparable across runs and thread counts.
    eprintln!(
        "config: experiment kind={} d={} N={} m={} delta={} trials={} seed={} depth_budget={} threads={} measure={} target={} out={} format={}",
        kind.as_str(),
        config.dim,
        config.threshold,
        args.m,
        args.delta,
        config.trials,
        config.master_seed,
        config.depth_budget,
        config.threads,
        match &config.measure {
            MeasureSpec::Random => "random".to_owned(),
            MeasureSpec::Product(w) => format!(
                "product:{}",
                w.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
            ),
        },
        config.target.as_ref().map_or_else(|| "-".to_owned(), |t| t.to_string()),
        args.out.as_deref().map_or_else(|| "-".to_owned(), |p| p.display().to_string()),
        args.format
    );
    let report = dyadim::experiment::run(&config)?;
    eprintln!("elapsed: {:.2}s", report.elapsed_seconds);

    match &args.out {
        Some(path) => {
            write_report(&report, path)?;
            println!("rows: {}", report.rows.len());
            println!("wrote {}", path.display());
        }
        None => match args.format.as_str() {
            "csv" => print!("{}", report_csv_string(&report)),
            "json" => print!("{}", report_json_string(&report)),
            other => {
                return Err(Error::Parse(format!("unknown format `{other}` (expected csv or json)")))
            }
        },
    }
    if !report.all_passed() {
        return Err(Error::domain("one or more comparison rows failed"));
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    eprintln!("config: verify slow={} threads={}", args.slow, args.threads);
    let reports = verify::all_criteria(args.slow, args.threads);
    let mut failed = 0usize;
    for report in &reports {
        println!("{}", report.format_line());
        if !report.passed {
            failed += 1;
        }
    }
    println!("{}/{} criteria passed", reports.len() - failed, reports.len());
    if failed > 0 {
        return Err(Error::domain(format!("{failed} criteria failed")));
    }
    Ok(())
}
