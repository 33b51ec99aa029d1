//! The `lfp` command line.
//!
//! Every subcommand resolves its settings from flags, then an optional TOML
//! config file (`--config`), then built-in defaults. The seed additionally
//! falls back to the `LFP_SEED` environment variable. Results are written to
//! the `--out` directory (never overwriting without `--force`) and a one-line
//! JSON summary is printed on stdout.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numeric failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    estimate_optima_birthday, fdc_from_values, persistence_curve, ruggedness, sample_size_study,
    BirthdayConfig, RankDirection, DEFAULT_REPLICATES,
};
use crate::benchmark::{
    generate_nk, load_table, nk_table, Direction, FitnessTable, Landscape, NkSpec, Query, Split,
};
use crate::error::Error;
use crate::footprint::{compare_footprints, compute_footprint, FootprintConfig, FootprintReport};
use crate::genotype::Genotype;
use crate::sampling::{random_walks, rng_for, sample_lhs, uniform_members, write_walks_csv, SampleMethod};
use crate::stats::{empirical_density, qq_pp_data, DensityKind, DensityMethod, FitComparison};

pub const SEED_ENV: &str = "LFP_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Lib(Error::InvalidParameter(_)) => 2,
            CliError::Lib(e) if e.is_numeric() => 4,
            CliError::Lib(_) => 3,
        }
    }

    fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            4 => "numeric",
            _ => "data",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lfp", version, about = "Fitness landscape footprints of architecture-search benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file supplying defaults for any option; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads for walks and local searches.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed; falls back to the config file, then LFP_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
struct QueryArgs {
    /// Benchmark JSONL file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    epoch: Option<u32>,
    #[arg(long)]
    metric: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
struct SampleArgs {
    #[arg(long)]
    samples: Option<usize>,
    /// `lhs` or `uniform`.
    #[arg(long)]
    sampling: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
struct WalkArgs {
    #[arg(long)]
    walks: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
struct BirthdayArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    pd: Option<f64>,
    /// `max` or `min`.
    #[arg(long)]
    direction: Option<Direction>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a benchmark file and summarize its contents.
    Validate {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Empirical fitness density at one budget.
    Density {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long)]
        bins: Option<usize>,
        /// Gaussian kernel estimate instead of a histogram.
        #[arg(long)]
        kernel: bool,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Maximum-likelihood Beta, Weibull and log-normal fits.
    Fit {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Fitness-distance correlation over a sample.
    Fdc {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Random walks exported as CSV.
    Walk {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        walk: WalkArgs,
        /// Moving-average window applied to the exported fitness.
        #[arg(long)]
        smooth: Option<usize>,
    },
    /// Ruggedness from random-walk autocorrelation.
    Ruggedness {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        walk: WalkArgs,
    },
    /// Birthday-problem estimate of the number of local optima.
    Optima {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        birthday: BirthdayArgs,
    },
    /// Rank persistence curves across all epoch budgets.
    Persistence {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// All eight footprint metrics.
    Footprint {
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        walk: WalkArgs,
        #[command(flatten)]
        birthday: BirthdayArgs,
        #[arg(long)]
        persistence_samples: Option<usize>,
        /// Skip the birthday estimate.
        #[arg(long)]
        no_birthday: bool,
    },
    /// Min-max normalized comparison of footprint reports.
    Compare {
        /// Footprint JSON files.
        #[arg(long, num_args = 1..)]
        reports: Vec<PathBuf>,
    },
    /// Write a fully enumerated NK landscape as a benchmark file.
    GenNk {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        epochs: Option<Vec<u32>>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        split: Option<Split>,
        #[arg(long)]
        metric: Option<String>,
    },
    /// Density convergence as the sample size grows.
    SampleSizeStudy {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        sampling: Option<String>,
        /// Study an NK landscape of this length instead of a table.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        nk_seed: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Density { .. } => "density",
            Command::Fit { .. } => "fit",
            Command::Fdc { .. } => "fdc",
            Command::Walk { .. } => "walk",
            Command::Ruggedness { .. } => "ruggedness",
            Command::Optima { .. } => "optima",
            Command::Persistence { .. } => "persistence",
            Command::Footprint { .. } => "footprint",
            Command::Compare { .. } => "compare",
            Command::GenNk { .. } => "gen-nk",
            Command::SampleSizeStudy { .. } => "sample-size-study",
        }
    }
}

/// Settings of one run. The same keys are accepted in the config file; the
/// resolved values a subcommand used are embedded in its artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reports: Option<Vec<PathBuf>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SampleMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persistence_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub birthday: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nk_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl RunConfig {
    /// Fills every unset field from `fallback`.
    fn or(mut self, fallback: &RunConfig) -> RunConfig {
        overlay!(
            self, fallback, input, reports, out, seed, split, epoch, metric, samples, sampling,
            persistence_samples, walks, steps, smooth, trials, runs, pd, direction, birthday, bins,
            kernel, bandwidth, sizes, replicates, n, k, nk_seed, epochs, noise
        );
        self
    }

    pub fn from_toml(text: &str) -> CliResult<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config file: {e}")))?;
        if cfg.subcommand.is_some() {
            return Err(CliError::Usage("config file: `subcommand` is set on the command line".into()));
        }
        Ok(cfg)
    }

    fn seed(&mut self) -> CliResult<u64> {
        if self.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                let s = v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
                self.seed = Some(s);
            }
        }
        self.seed.ok_or_else(|| {
            CliError::Usage(format!(
                "this subcommand is stochastic: pass --seed, set `seed` in the config file or {SEED_ENV}"
            ))
        })
    }

    fn input(&self) -> CliResult<PathBuf> {
        self.input
            .clone()
            .ok_or_else(|| CliError::Usage("--input <benchmark.jsonl> is required".into()))
    }

    fn query(&mut self) -> Query {
        let split = *self.split.get_or_insert(Split::Validation);
        let epoch = *self.epoch.get_or_insert(36);
        let metric = self.metric.get_or_insert_with(|| "overall_accuracy".into()).clone();
        Query::new(split, epoch, metric)
    }
}

fn parse_sampling(s: Option<String>) -> CliResult<Option<SampleMethod>> {
    match s.as_deref() {
        None => Ok(None),
        Some("lhs") => Ok(Some(SampleMethod::Lhs)),
        Some("uniform") => Ok(Some(SampleMethod::Uniform)),
        Some(o) => Err(CliError::Usage(format!("unknown sampling method {o:?} (lhs, uniform)"))),
    }
}

fn flags_config(cmd: &Command, seed: Option<u64>, out: Option<PathBuf>) -> CliResult<RunConfig> {
    let mut c = RunConfig {
        subcommand: Some(cmd.name().to_string()),
        seed,
        out,
        ..RunConfig::default()
    };
    let query = |c: &mut RunConfig, q: &QueryArgs| {
        c.input = q.input.clone();
        c.split = q.split;
        c.epoch = q.epoch;
        c.metric = q.metric.clone();
    };
    let sample = |c: &mut RunConfig, s: &SampleArgs| -> CliResult<()> {
        c.samples = s.samples;
        c.sampling = parse_sampling(s.sampling.clone())?;
        Ok(())
    };
    let walk = |c: &mut RunConfig, w: &WalkArgs| {
        c.walks = w.walks;
        c.steps = w.steps;
    };
    let birthday = |c: &mut RunConfig, b: &BirthdayArgs| {
        c.trials = b.trials;
        c.runs = b.runs;
        c.pd = b.pd;
        c.direction = b.direction;
    };
    match cmd {
        Command::Validate { query: q } => query(&mut c, q),
        Command::Density { query: q, sample: s, bins, kernel, bandwidth } => {
            query(&mut c, q);
            sample(&mut c, s)?;
            c.bins = *bins;
            c.kernel = kernel.then_some(true);
            c.bandwidth = *bandwidth;
        }
        Command::Fit { query: q, sample: s } | Command::Fdc { query: q, sample: s } => {
            query(&mut c, q);
            sample(&mut c, s)?;
        }
        Command::Walk { query: q, walk: w, smooth } => {
            query(&mut c, q);
            walk(&mut c, w);
            c.smooth = *smooth;
        }
        Command::Ruggedness { query: q, walk: w } => {
            query(&mut c, q);
            walk(&mut c, w);
        }
        Command::Optima { query: q, birthday: b } => {
            query(&mut c, q);
            birthday(&mut c, b);
        }
        Command::Persistence { query: q, samples } => {
            query(&mut c, q);
            c.persistence_samples = *samples;
        }
        Command::Footprint {
            query: q,
            sample: s,
            walk: w,
            birthday: b,
            persistence_samples,
            no_birthday,
        } => {
            query(&mut c, q);
            sample(&mut c, s)?;
            walk(&mut c, w);
            birthday(&mut c, b);
            c.persistence_samples = *persistence_samples;
            c.birthday = no_birthday.then_some(false);
        }
        Command::Compare { reports } => {
            c.reports = (!reports.is_empty()).then(|| reports.clone());
        }
        Command::GenNk { n, k, epochs, noise, split, metric } => {
            c.n = *n;
            c.k = *k;
            c.epochs = epochs.clone();
            c.noise = *noise;
            c.split = *split;
            c.metric = metric.clone();
        }
        Command::SampleSizeStudy { query: q, sizes, replicates, sampling, n, k, nk_seed } => {
            query(&mut c, q);
            c.sizes = sizes.clone();
            c.replicates = *replicates;
            c.sampling = parse_sampling(sampling.clone())?;
            c.n = *n;
            c.k = *k;
            c.nk_seed = *nk_seed;
        }
    }
    Ok(c)
}

/// Artifacts held in memory until every target path has been checked.
struct Outcome {
    artifacts: Vec<(String, Vec<u8>)>,
    summary: serde_json::Map<String, Value>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            artifacts: Vec::new(),
            summary: serde_json::Map::new(),
        }
    }

    fn file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.artifacts.push((name.into(), bytes));
    }

    /// CSV preceded by a `# config:` comment line.
    fn csv(&mut self, name: &str, cfg: &RunConfig, body: Vec<u8>) {
        let mut bytes = format!("# config: {}\n", config_json(cfg)).into_bytes();
        bytes.extend(body);
        self.file(name, bytes);
    }

    fn json(&mut self, name: &str, value: &Value) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("json value serializes");
        bytes.push(b'\n');
        self.file(name, bytes);
    }

    fn put(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.into(), serde_json::to_value(value).expect("summary serializes"));
    }
}

fn config_json(cfg: &RunConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command = cli.command.name();
    match execute(cli) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("lfp {command}: {e}");
            println!(
                "{}",
                json!({"command": command, "status": "error", "category": e.category(), "message": e.to_string()})
            );
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<String> {
    let file_cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    let mut cfg = flags_config(&cli.command, cli.seed, cli.out.clone())?.or(&file_cfg);
    let out_dir = cfg.out.get_or_insert_with(|| PathBuf::from(".")).clone();

    let outcome = match cli.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(|| dispatch(&cli.command, &mut cfg))?,
        None => dispatch(&cli.command, &mut cfg)?,
    };

    let paths = write_artifacts(&out_dir, &outcome.artifacts, cli.force)?;
    let mut summary = serde_json::Map::new();
    summary.insert("command".into(), json!(cli.command.name()));
    summary.insert("status".into(), json!("ok"));
    summary.insert("artifacts".into(), json!(paths));
    summary.extend(outcome.summary);
    Ok(Value::Object(summary).to_string())
}

fn write_artifacts(dir: &Path, artifacts: &[(String, Vec<u8>)], force: bool) -> CliResult<Vec<String>> {
    let paths: Vec<PathBuf> = artifacts.iter().map(|(n, _)| dir.join(n)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(CliError::Usage(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    if !artifacts.is_empty() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    for (p, (_, bytes)) in paths.iter().zip(artifacts) {
        std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(paths.iter().map(|p| p.display().to_string()).collect())
}

fn dispatch(cmd: &Command, cfg: &mut RunConfig) -> CliResult<Outcome> {
    match cmd {
        Command::Validate { .. } => validate(cfg),
        Command::Density { .. } => density(cfg),
        Command::Fit { .. } => fit(cfg),
        Command::Fdc { .. } => fdc(cfg),
        Command::Walk { .. } => walk(cfg),
        Command::Ruggedness { .. } => rugged(cfg),
        Command::Optima { .. } => optima(cfg),
        Command::Persistence { .. } => persistence(cfg),
        Command::Footprint { .. } => footprint(cfg),
        Command::Compare { .. } => compare(cfg),
        Command::GenNk { .. } => gen_nk(cfg),
        Command::SampleSizeStudy { .. } => study(cfg),
    }
}

fn validate(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let explicit = cfg.split.is_some() || cfg.epoch.is_some() || cfg.metric.is_some();
    let mut o = Outcome::new();
    if explicit {
        let q = cfg.query();
        table.check_query(&q)?;
        o.put("query", &q);
    }
    o.put("dataset", table.dataset_name());
    o.put("records", table.len());
    o.put("genotype_len", table.genotype_len());
    o.put("cells", table.has_cells());
    o.put("epochs", table.epochs_available());
    o.put("splits", table.splits());
    o.put("metrics", table.metrics());
    Ok(o)
}

/// Fitness values at the configured query: every record, or a seeded sample
/// when `samples` is set.
fn query_values(table: &FitnessTable, cfg: &mut RunConfig) -> CliResult<(Vec<Genotype>, Vec<f64>)> {
    let query = cfg.query();
    let landscape = table.landscape(query)?;
    let genotypes = match cfg.samples {
        None => table.genotypes().to_vec(),
        Some(n) => draw(&landscape, n, cfg)?,
    };
    let values = genotypes
        .iter()
        .map(|g| landscape.fitness(g))
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((genotypes, values))
}

/// `n` samples with the configured method; LHS falls back to uniform
/// sampling when the table cannot be stratified.
fn draw<L: Landscape + ?Sized>(landscape: &L, n: usize, cfg: &mut RunConfig) -> CliResult<Vec<Genotype>> {
    let seed = cfg.seed()?;
    let method = *cfg.sampling.get_or_insert(SampleMethod::Lhs);
    if method == SampleMethod::Lhs {
        match sample_lhs(landscape, n, seed) {
            Ok(s) => return Ok(s.genotypes),
            Err(Error::SamplingExhausted(msg)) => {
                eprintln!("lfp: LHS infeasible ({msg}); using uniform sampling");
                cfg.sampling = Some(SampleMethod::Uniform);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(uniform_members(landscape, n, &mut rng_for(seed, 0))?)
}

fn density(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let (_, values) = query_values(&table, cfg)?;
    let method = if cfg.kernel == Some(true) {
        DensityMethod::Kernel {
            bandwidth: cfg.bandwidth,
            grid_points: *cfg.bins.get_or_insert(256),
        }
    } else {
        DensityMethod::Histogram {
            bins: *cfg.bins.get_or_insert(20),
        }
    };
    let curve = empirical_density(&values, method)?;
    let body = csv_bytes(|w| {
        match curve.kind {
            DensityKind::Histogram => {
                writeln!(w, "bin_lo,bin_hi,density")?;
                for (e, d) in curve.points.windows(2).zip(&curve.density) {
                    writeln!(w, "{},{},{}", e[0], e[1], d)?;
                }
            }
            DensityKind::Kernel => {
                writeln!(w, "x,density")?;
                for (x, d) in curve.points.iter().zip(&curve.density) {
                    writeln!(w, "{x},{d}")?;
                }
            }
        }
        Ok(())
    })?;
    let mut o = Outcome::new();
    o.csv("density.csv", cfg, body);
    o.put("n", values.len());
    o.put("integral", curve.integral());
    Ok(o)
}

fn fit(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let (_, values) = query_values(&table, cfg)?;
    let comparison = FitComparison::compute(&values)?;
    let qq_pp = comparison
        .fits
        .iter()
        .map(|f| Ok((f.family.name().to_string(), qq_pp_data(&values, f)?)))
        .collect::<crate::Result<std::collections::BTreeMap<_, _>>>()?;
    let best = comparison.best_by_aic().map(|f| f.family.name());
    let mut o = Outcome::new();
    o.csv("fit.csv", cfg, csv_bytes(|w| comparison.write_csv(w))?);
    o.json(
        "fit.json",
        &json!({"config": cfg, "fits": comparison.fits, "best_by_aic": best, "qq_pp": qq_pp}),
    );
    o.put("n", values.len());
    o.put("best_by_aic", best);
    Ok(o)
}

fn fdc(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    cfg.samples.get_or_insert(100);
    let (genotypes, values) = query_values(&table, cfg)?;
    let r = fdc_from_values(&genotypes, &values)?;
    let body = csv_bytes(|w| {
        writeln!(w, "distance,fitness")?;
        for (d, f) in &r.pairs {
            writeln!(w, "{d},{f}")?;
        }
        Ok(())
    })?;
    let mut o = Outcome::new();
    o.csv("fdc.csv", cfg, body);
    o.json(
        "fdc.json",
        &json!({
            "config": cfg,
            "optimum": r.optimum,
            "pearson_r": r.pearson_r,
            "slope_per_unit_distance": r.slope_per_unit_distance,
            "intercept": r.intercept,
            "n": r.pairs.len(),
        }),
    );
    o.put("pearson_r", r.pearson_r);
    o.put("slope_per_unit_distance", r.slope_per_unit_distance);
    Ok(o)
}

fn walks_for(table: &FitnessTable, cfg: &mut RunConfig) -> CliResult<Vec<crate::sampling::Walk>> {
    let seed = cfg.seed()?;
    let landscape = table.landscape(cfg.query())?;
    let routes = *cfg.walks.get_or_insert(30);
    let steps = *cfg.steps.get_or_insert(100);
    Ok(random_walks(&landscape, routes, steps, seed)?)
}

fn walk(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let walks = walks_for(&table, cfg)?;
    let mut o = Outcome::new();
    o.csv("walks.csv", cfg, csv_bytes(|w| write_walks_csv(w, &walks, cfg.smooth))?);
    o.put("walks", walks.len());
    o.put("stuck", walks.iter().filter(|w| w.stuck).count());
    Ok(o)
}

fn rugged(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let walks = walks_for(&table, cfg)?;
    let r = ruggedness(&walks)?;
    let mut o = Outcome::new();
    o.json("ruggedness.json", &json!({"config": cfg, "ruggedness": r}));
    o.put("tau", r.tau);
    o.put("rho_mean", r.rho_mean);
    o.put("warnings", &r.warnings);
    Ok(o)
}

fn optima(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let seed = cfg.seed()?;
    let landscape = table.landscape(cfg.query())?;
    let config = BirthdayConfig {
        trials: *cfg.trials.get_or_insert(9),
        runs_per_trial: *cfg.runs.get_or_insert(200),
        p_d: *cfg.pd.get_or_insert(0.5),
        seed,
        direction: *cfg.direction.get_or_insert(Direction::Max),
    };
    let est = estimate_optima_birthday(&landscape, &config)?;
    let mut o = Outcome::new();
    o.csv("optima.csv", cfg, csv_bytes(|w| est.write_csv(w))?);
    o.put("k_mean", est.k_mean);
    o.put("cardinal_estimate", est.cardinal_estimate);
    o.put("failed_trials", est.failed_trials);
    Ok(o)
}

fn persistence(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let seed = cfg.seed()?;
    let query = cfg.query();
    let epochs = table.epochs_for(query.split, &query.metric);
    let first = *epochs
        .first()
        .ok_or_else(|| Error::UnknownQuery {
            split: query.split.to_string(),
            epoch: query.epoch,
            metric: query.metric.clone(),
        })?;
    let landscape = table.landscape(query.at_epoch(first))?;
    let n = (*cfg.persistence_samples.get_or_insert(1000)).min(table.len());
    let samples = uniform_members(&landscape, n, &mut rng_for(seed, 0))?;
    let pos = persistence_curve(&table, &samples, RankDirection::Positive, query.split, &query.metric)?;
    let neg = persistence_curve(&table, &samples, RankDirection::Negative, query.split, &query.metric)?;
    let mut o = Outcome::new();
    o.csv("persistence_positive.csv", cfg, csv_bytes(|w| pos.write_csv(w))?);
    o.csv("persistence_negative.csv", cfg, csv_bytes(|w| neg.write_csv(w))?);
    o.json("persistence.json", &json!({"config": cfg, "positive": pos, "negative": neg}));
    o.put("samples", n);
    o.put("pi_positive_q1", pos.value(25));
    o.put("pi_negative_q1", neg.value(25));
    o.put("auc_positive_q1", pos.auc_q1);
    o.put("auc_negative_q1", neg.auc_q1);
    Ok(o)
}

fn footprint(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let table = load_table(&cfg.input()?)?;
    let d = FootprintConfig::default();
    let query = cfg.query();
    let config = FootprintConfig {
        seed: cfg.seed()?,
        split: query.split,
        metric: query.metric,
        epoch: query.epoch,
        n_samples: *cfg.samples.get_or_insert(d.n_samples),
        sampling: *cfg.sampling.get_or_insert(d.sampling),
        persistence_samples: *cfg.persistence_samples.get_or_insert(d.persistence_samples),
        walks: *cfg.walks.get_or_insert(d.walks),
        walk_steps: *cfg.steps.get_or_insert(d.walk_steps),
        trials: *cfg.trials.get_or_insert(d.trials),
        runs: *cfg.runs.get_or_insert(d.runs),
        p_d: *cfg.pd.get_or_insert(d.p_d),
        direction: *cfg.direction.get_or_insert(d.direction),
        birthday: *cfg.birthday.get_or_insert(d.birthday),
    };
    let report = compute_footprint(&table, &config)?;
    let mut o = Outcome::new();
    let mut bytes = report.to_json().into_bytes();
    bytes.push(b'\n');
    o.file("footprint.json", bytes);
    o.put("dataset", &report.dataset);
    o.put("metrics", &report.metrics);
    Ok(o)
}

fn compare(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let paths = cfg
        .reports
        .clone()
        .ok_or_else(|| CliError::Usage("--reports <a.json> <b.json> ... is required".into()))?;
    let reports = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<FootprintReport>(&text).map_err(|e| Error::Parse {
                line: e.line(),
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let c = compare_footprints(&reports)?;
    let mut o = Outcome::new();
    o.json("comparison.json", &json!({"config": cfg, "comparison": c}));
    o.csv("radar.csv", cfg, csv_bytes(|w| c.write_radar_csv(w))?);
    o.put("reports", reports.len());
    Ok(o)
}

fn gen_nk(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let seed = cfg.seed()?;
    let n = cfg.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
    let k = cfg.k.ok_or_else(|| CliError::Usage("--k is required".into()))?;
    let epochs = cfg.epochs.get_or_insert_with(|| vec![4, 12, 36, 108]).clone();
    let noise = *cfg.noise.get_or_insert(0.0);
    let split = *cfg.split.get_or_insert(Split::Validation);
    let metric = cfg.metric.get_or_insert_with(|| "overall_accuracy".into()).clone();
    let spec = NkSpec { n, k, seed };
    let table = nk_table(spec, split, &metric, &epochs, noise)?;
    let name = table.dataset_name().to_string();
    let mut o = Outcome::new();
    o.file(format!("{name}.jsonl"), csv_bytes(|w| table.write_jsonl(w))?);
    o.json(&format!("{name}.json"), &json!({"config": cfg, "nk": spec, "records": table.len()}));
    o.put("dataset", name);
    o.put("records", table.len());
    Ok(o)
}

fn study(cfg: &mut RunConfig) -> CliResult<Outcome> {
    let seed = cfg.seed()?;
    let sizes = cfg.sizes.get_or_insert_with(|| vec![100, 200, 500, 1000]).clone();
    let replicates = *cfg.replicates.get_or_insert(DEFAULT_REPLICATES);
    let method = *cfg.sampling.get_or_insert(SampleMethod::Uniform);
    let result = match (cfg.n, cfg.k) {
        (Some(n), Some(k)) => {
            let nk_seed = *cfg.nk_seed.get_or_insert(0);
            let l = generate_nk(NkSpec { n, k, seed: nk_seed })?;
            sample_size_study(&l, &sizes, method, seed, replicates)?
        }
        (None, None) => {
            let table = load_table(&cfg.input()?)?;
            let l = table.landscape(cfg.query())?;
            sample_size_study(&l, &sizes, method, seed, replicates)?
        }
        _ => return Err(CliError::Usage("--n and --k must be given together".into())),
    };
    let body = csv_bytes(|w| {
        writeln!(w, "size,x,density")?;
        for c in &result.curves {
            for (x, d) in c.curve.points.iter().zip(&c.curve.density) {
                writeln!(w, "{},{x},{d}", c.size)?;
            }
        }
        Ok(())
    })?;
    let mut o = Outcome::new();
    o.csv("sample_size_study.csv", cfg, body);
    o.json(
        "sample_size_study.json",
        &json!({
            "config": cfg,
            "sizes": sizes,
            "bandwidths": result.curves.iter().map(|c| c.bandwidth).collect::<Vec<_>>(),
            "successive_l1": result.successive_l1,
            "per_replicate_l1": result.per_replicate_l1,
        }),
    );
    o.put("successive_l1", &result.successive_l1);
    o.put("converging", result.is_converging(0.1));
    Ok(o)
}
