use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mms_core::counts::{CountsConfig, DistanceDistribution, Normalization, DEFAULT_EXACT_MAX};
use mms_core::io::csv::{parse_matrix_csv, parse_rankings_csv, rankify_matrix, write_rankings_csv};
use mms_core::io::result::{CountsRecord, FitResultDocument};
use mms_core::mixture::{em_fit_partial, select_g, BicConvention, EmConfig, DEFAULT_COMPLETION_CAP};
use mms_core::partition::{log_sum_exp, DistanceModel, PartitionEvaluator, VmfModel};
use mms_core::ranking::Direction;
use mms_core::sim::StudySpec;
use mms_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mms", version, about = "Mallows models with Spearman distance: counts, fits and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load the Spearman distance distribution for `n` items.
    Counts(CountsArgs),
    /// Compare partition function approximations over a grid of theta.
    Zeta(ZetaArgs),
    /// Fit a mixture to a ranking CSV.
    Fit(FitArgs),
    /// Run a simulation study described by a TOML file.
    Simulate(SimulateArgs),
    /// Turn a numeric matrix into rankings, row by row.
    Rankify(RankifyArgs),
}

#[derive(Args, Clone)]
struct TableArgs {
    /// Directory for cached exact tables.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Largest n served by an exact table.
    #[arg(long, default_value_t = DEFAULT_EXACT_MAX)]
    exact_max: usize,
    /// Scaling of the approximate table.
    #[arg(long, value_enum, default_value_t = NormArg::Unit)]
    normalization: NormArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Unit,
    Renormalized,
}

impl TableArgs {
    fn config(&self) -> CountsConfig {
        CountsConfig {
            exact_max: self.exact_max,
            normalization: match self.normalization {
                NormArg::Unit => Normalization::Unit,
                NormArg::Renormalized => Normalization::Renormalized,
            },
            cache_dir: self.cache.clone(),
            ..CountsConfig::default()
        }
    }
}

#[derive(Args)]
struct CountsArgs {
    #[arg(long)]
    n: usize,
    /// Force the exact table.
    #[arg(long, conflicts_with = "approx")]
    exact: bool,
    /// Force the approximate table.
    #[arg(long)]
    approx: bool,
    /// Print every entry, not just the summary.
    #[arg(long)]
    table: bool,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    New,
    Vmf,
}

#[derive(Args)]
struct ZetaArgs {
    #[arg(long)]
    n: usize,
    /// `start:end:points`, endpoints included.
    #[arg(long, default_value = "0.01:1:100")]
    theta_grid: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,new,vmf")]
    methods: Vec<Method>,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Ranking CSV: item labels, ranks with NA for missing, optional freq.
    #[arg(long)]
    data: PathBuf,
    /// Number of components.
    #[arg(long, conflicts_with = "g_range")]
    g: Option<usize>,
    /// `lo:hi`, fitted in full and resolved by the BIC elbow.
    #[arg(long)]
    g_range: Option<String>,
    /// Largest number of completions allowed per partial row.
    #[arg(long, default_value_t = DEFAULT_COMPLETION_CAP)]
    partial_cap: u128,
    #[arg(long, default_value_t = 10)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BicConvention::Full)]
    bic_convention: BicConvention,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Include per-row posterior membership probabilities.
    #[arg(long)]
    responsibilities: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankifyArgs {
    /// Numeric CSV with a header of item labels.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Direction::Descending)]
    direction: Direction,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let doc = serde_json::json!({ "error": { "kind": kind, "message": message.trim_end() } });
    eprintln!("{doc}");
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Counts(a) => counts(a),
        Command::Zeta(a) => zeta(a),
        Command::Fit(a) => fit(a),
        Command::Simulate(a) => simulate(a),
        Command::Rankify(a) => rankify(a),
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn counts(a: CountsArgs) -> Result<()> {
    let cfg = a.tables.config();
    let dist = if a.exact {
        cfg.exact(a.n)?
    } else if a.approx {
        cfg.approx(a.n)?
    } else {
        cfg.build(a.n)?
    };
    let mut out = io::stdout().lock();
    writeln!(out, "n = {}", dist.n())?;
    writeln!(out, "provenance = {}", dist.provenance().as_str())?;
    writeln!(out, "entries = {}", dist.len())?;
    writeln!(out, "d_max = {}", dist.d_max())?;
    match dist.exact_counts() {
        Some(c) => writeln!(out, "sum = {}", c.iter().sum::<u128>())?,
        None => writeln!(out, "log_sum = {:.12}", log_sum_exp(dist.log_counts().iter().copied()))?,
    }
    let (mean, var) = PartitionEvaluator::new(dist.clone()).moments(0.0);
    writeln!(out, "mean = {mean}")?;
    writeln!(out, "variance = {var}")?;
    if a.table {
        print_table(&mut out, &dist)?;
    }
    Ok(())
}

fn print_table(out: &mut impl Write, dist: &DistanceDistribution) -> Result<()> {
    writeln!(out, "d,log_count,count")?;
    for (i, lc) in dist.log_counts().iter().enumerate() {
        let count = dist.exact_counts().map(|c| c[i].to_string()).unwrap_or_default();
        writeln!(out, "{},{lc},{count}", dist.distance(i))?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("theta grid {spec:?} is not start:end:points"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, k] = parts[..] else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let k: usize = k.parse().map_err(|_| bad())?;
    if k == 0 || !(a >= 0.0 && b >= a) {
        return Err(bad());
    }
    Ok(if k == 1 { vec![a] } else { (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect() })
}

fn zeta(a: ZetaArgs) -> Result<()> {
    let grid = parse_grid(&a.theta_grid)?;
    let cfg = a.tables.config();
    let want = |m| a.methods.contains(&m);
    let exact = want(Method::Exact).then(|| cfg.exact(a.n).map(PartitionEvaluator::new)).transpose()?;
    let new = want(Method::New).then(|| cfg.approx(a.n).map(PartitionEvaluator::new)).transpose()?;
    let vmf = want(Method::Vmf).then(|| VmfModel::new(a.n)).transpose()?;
    let mut out = io::stdout().lock();
    let mut header = vec!["theta".to_string()];
    if exact.is_some() {
        header.push("log_z_exact".into());
    }
    let prefix = if exact.is_some() { "ratio" } else { "log_z" };
    if new.is_some() {
        header.push(format!("{prefix}_new"));
    }
    if vmf.is_some() {
        header.push(format!("{prefix}_vmf"));
    }
    writeln!(out, "{}", header.join(","))?;
    for theta in grid {
        let mut row = vec![theta.to_string()];
        let base = exact.as_ref().map(|m| m.log_partition(theta));
        if let Some(b) = base {
            row.push(b.to_string());
        }
        let models: [Option<&dyn DistanceModel>; 2] = [new.as_ref().map(|m| m as _), vmf.as_ref().map(|m| m as _)];
        for m in models.into_iter().flatten() {
            let lz = m.log_partition(theta);
            row.push(match base {
                Some(b) => (lz - b).exp().to_string(),
                None => lz.to_string(),
            });
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn parse_g_range(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("G range {spec:?} is not lo:hi with 1 <= lo <= hi"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (usize, usize) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn fit(a: FitArgs) -> Result<()> {
    let data = parse_rankings_csv(&a.data)?;
    let counts = a.tables.config();
    let dist = counts.build(data.n_items())?;
    let provenance = dist.provenance();
    let model = PartitionEvaluator::new(dist);
    let cfg = EmConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        n_starts: a.starts,
        seed: a.seed,
        completion_cap: a.partial_cap,
        ..EmConfig::default()
    };
    let (fits, selected) = match (&a.g_range, a.g) {
        (Some(r), _) => {
            let sel = select_g(&data, &parse_g_range(r)?, &model, &cfg, a.bic_convention)?;
            let fits: Vec<_> = sel.g_values.iter().copied().zip(sel.fits).collect();
            (fits, sel.g_hat)
        }
        (None, g) => {
            let g = g.unwrap_or(1);
            (vec![(g, em_fit_partial(&data, g, &model, &cfg)?)], g)
        }
    };
    let doc = FitResultDocument::new(
        &data,
        &fits,
        selected,
        a.bic_convention,
        &cfg,
        CountsRecord { provenance, config: counts },
        a.responsibilities,
    );
    let mut out = output(a.out.as_ref())?;
    out.write_all(doc.to_json()?.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let report = StudySpec::read(&a.spec)?.run()?;
    let mut out = output(a.out.as_ref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn rankify(a: RankifyArgs) -> Result<()> {
    let data = rankify_matrix(&parse_matrix_csv(&a.data)?, a.direction)?;
    match a.out {
        Some(p) => write_rankings_csv(&data, p),
        None => mms_core::io::csv::write_rankings(&data, io::stdout().lock()),
    }
}
