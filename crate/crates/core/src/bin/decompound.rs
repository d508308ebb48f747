use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use decompound::diagnostics::{self, PERCENTILE_METHOD};
use decompound::diophantine::{enumerate_with_budget, DEFAULT_MEMORY_BUDGET};
use decompound::gibbs::{self, PriorConfig, SampleMetadata, SamplerConfig, DEFAULT_M_CAP};
use decompound::model::{BaseDistribution, IncrementData, LevyMeasure};
use decompound::simulate::{self, GridKind, Preset};
use decompound::verify::{self, VerifyConfig, DEFAULT_SLACK};
use decompound::{datasets, io as dio, plugin, Error};

#[derive(Parser)]
#[command(
    name = "decompound",
    version,
    about = "Bayesian decompounding of integer-valued compound Poisson data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate increments from a preset or from explicit (lambda, p).
    Simulate(SimulateArgs),
    /// Sample the posterior of the Lévy measure.
    Fit(FitArgs),
    /// Frequentist plug-in estimate (equidistant data only).
    FitPlugin(PluginArgs),
    /// Summarise a posterior draws CSV.
    Summarize(SummarizeArgs),
    /// Check the compounding inequalities on random instances.
    Verify(VerifyArgs),
    /// Print the solutions of sum_j j*k_j = z with parts at most m.
    Diophantine(DiophantineArgs),
    /// Write an embedded dataset as CSV.
    ExportDataset(ExportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// uniform146_a, uniform146_b, uniform146_c or geometric.
    #[arg(long, conflicts_with_all = ["lambda", "p"])]
    preset: Option<String>,
    /// Geometric parameter for the geometric preset.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of increments (geometric preset and explicit parameters).
    #[arg(long)]
    n: Option<usize>,
    /// Jump intensity for explicit parameters.
    #[arg(long, requires = "p")]
    lambda: Option<f64>,
    /// Jump-size pmf on 1, 2, ... as comma-separated weights (renormalised).
    #[arg(long, value_delimiter = ',', requires = "lambda")]
    p: Option<Vec<f64>>,
    /// Common time gap for explicit parameters.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Draw gaps from Uniform(lo, hi) instead of a common gap.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    random_delta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, receives data.csv and truth.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Embedded dataset name or path to a `delta,z` CSV.
    #[arg(long)]
    data: String,
    /// Largest jump size; defaults to min(15, largest increment).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pi_neighbor: f64,
    /// Imputation sweeps per iteration.
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// 50,000 iterations with 25,000 burn-in unless overridden.
    #[arg(long)]
    quick: bool,
    /// Row stride of the long-format trace file.
    #[arg(long, default_value_t = 50)]
    trace_stride: usize,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [2.5, 97.5])]
    levels: Vec<f64>,
    /// Memory budget in bytes for solution-set enumeration.
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    memory_budget: usize,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct PluginArgs {
    #[arg(long)]
    data: String,
    /// Truncation point for the inverse recursion; defaults to the largest increment.
    #[arg(long)]
    k_max: Option<usize>,
    /// How negative jump probabilities are removed.
    #[arg(long, value_enum, default_value_t = TruncationArg::Recursive)]
    truncation: TruncationArg,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TruncationArg {
    Recursive,
    PositivePart,
}

impl From<TruncationArg> for plugin::Truncation {
    fn from(t: TruncationArg) -> Self {
        match t {
            TruncationArg::Recursive => plugin::Truncation::Recursive,
            TruncationArg::PositivePart => plugin::Truncation::PositivePart,
        }
    }
}

#[derive(Args)]
struct SummarizeArgs {
    /// Draws CSV with header nu_1..nu_m.
    #[arg(long)]
    draws: PathBuf,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [2.5, 97.5])]
    levels: Vec<f64>,
    /// Ground-truth JSON written by `simulate`; prints the l1 error of the mean.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    slack: f64,
    /// Flip a sign in one bound to check that violations are reported.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct DiophantineArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    z: usize,
}

#[derive(Args)]
struct ExportArgs {
    /// horse_kick or plant.
    name: String,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Truth {
    source: String,
    seed: u64,
    lambda: f64,
    nu: Vec<f64>,
    grid: GridKind,
}

#[derive(Serialize)]
struct FitRecord<'a> {
    data: &'a str,
    m_policy: String,
    percentile_method: &'static str,
    levels: (f64, f64),
    trace_stride: usize,
    memory_budget: usize,
    #[serde(flatten)]
    sample: &'a SampleMetadata,
}

#[derive(Serialize)]
struct PluginRecord<'a> {
    data: &'a str,
    dataset_digest: String,
    k_max: Option<usize>,
    #[serde(flatten)]
    estimate: &'a plugin::PluginEstimate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownPreset(_) | Error::Input(_) => 2,
        _ => 1,
    }
}

fn run(command: Command) -> decompound::Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::FitPlugin(a) => cmd_fit_plugin(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Diophantine(a) => cmd_diophantine(a),
        Command::ExportDataset(a) => cmd_export(a),
    }
}

fn load_data(source: &str) -> decompound::Result<IncrementData> {
    let path = Path::new(source);
    if !path.exists()
        && datasets::NAMES
            .iter()
            .any(|n| *n == source || n.replace('_', "-") == source)
    {
        return datasets::by_name(source);
    }
    if !path.exists() {
        return Err(Error::Input(format!(
            "`{source}` is neither a file nor an embedded dataset ({})",
            datasets::NAMES.join(", ")
        )));
    }
    dio::read_increments_file(path)
}

fn levels(v: &[f64]) -> (f64, f64) {
    (v[0], v[1])
}

fn cmd_simulate(a: SimulateArgs) -> decompound::Result<()> {
    let (data, truth, source, grid) = match (&a.preset, a.lambda, &a.p) {
        (Some(name), _, _) => {
            let preset = Preset::parse(name, a.alpha, a.n)?;
            let (data, truth) = simulate::preset(preset, a.seed)?;
            let grid = match preset {
                Preset::Uniform146A => GridKind::Uniform { n: 100, delta: 1.0 },
                Preset::Uniform146B => GridKind::Uniform { n: 500, delta: 1.0 },
                Preset::Uniform146C => GridKind::RandomUniform {
                    n: 500,
                    lo: 0.0,
                    hi: 2.0,
                },
                Preset::Geometric { n, .. } => GridKind::Uniform { n, delta: 1.0 },
            };
            (data, truth, preset.name().to_string(), grid)
        }
        (None, Some(lambda), Some(p)) => {
            let n = a.n.unwrap_or(100);
            let grid = match &a.random_delta {
                Some(r) => GridKind::RandomUniform {
                    n,
                    lo: r[0],
                    hi: r[1],
                },
                None => GridKind::Uniform { n, delta: a.delta },
            };
            let base = BaseDistribution::new_renormalised(p.clone())?;
            let deltas = simulate::make_grid(grid, a.seed)?;
            let data = simulate::simulate_increments(lambda, &base, &deltas, a.seed)?;
            (
                data,
                LevyMeasure::from_parts(lambda, &base)?,
                "explicit".to_string(),
                grid,
            )
        }
        _ => {
            return Err(Error::InvalidArgument(
                "give --preset or both --lambda and --p".into(),
            ))
        }
    };
    fs::create_dir_all(&a.out)?;
    dio::write_increments_file(&data, &a.out.join("data.csv"))?;
    let truth = Truth {
        source,
        seed: a.seed,
        lambda: truth.total_mass(),
        nu: truth.values().to_vec(),
        grid,
    };
    dio::write_json(&truth, &a.out.join("truth.json"))?;
    eprintln!("wrote {} increments to {}", data.len(), a.out.display());
    Ok(())
}

fn cmd_fit(a: FitArgs) -> decompound::Result<()> {
    let data = load_data(&a.data)?;
    let (m, m_policy) = match a.m {
        Some(m) => (m, format!("explicit m = {m}")),
        None => {
            let m = gibbs::default_m(&data, DEFAULT_M_CAP);
            (m, format!("min({DEFAULT_M_CAP}, largest increment) = {m}"))
        }
    };
    let prior = PriorConfig::new(m, a.a, a.c)?;
    let base = if a.quick {
        SamplerConfig::quick()
    } else {
        SamplerConfig::default()
    };
    let mut cfg = SamplerConfig {
        iterations: a.iters.unwrap_or(base.iterations),
        burn_in: a.burnin.unwrap_or(base.burn_in),
        thin: a.thin,
        seed: a.seed,
        threads: a.threads,
        ..base
    };
    cfg.proposal.pi_neighbor = a.pi_neighbor;
    cfg.proposal.sweeps = a.sweeps;
    let levels = levels(&a.levels);

    let cache = decompound::diophantine::SolutionCache::new(a.memory_budget);
    let samples = gibbs::run_chain_with_cache(&data, &prior, &cfg, &cache)?;
    let summary = diagnostics::summarize(&samples, levels)?;

    fs::create_dir_all(&a.out)?;
    dio::write_draws(
        &samples,
        BufWriter::new(fs::File::create(a.out.join("posterior.csv"))?),
    )?;
    dio::write_summary(
        &summary,
        BufWriter::new(fs::File::create(a.out.join("summary.csv"))?),
    )?;
    dio::write_long(
        &samples,
        a.trace_stride,
        BufWriter::new(fs::File::create(a.out.join("long.csv"))?),
    )?;
    let meta = samples
        .metadata
        .as_ref()
        .expect("run_chain records metadata");
    let record = FitRecord {
        data: &a.data,
        m_policy,
        percentile_method: PERCENTILE_METHOD,
        levels,
        trace_stride: a.trace_stride,
        memory_budget: a.memory_budget,
        sample: meta,
    };
    dio::write_json(&record, &a.out.join("posterior.json"))?;

    let mut out = io::stdout().lock();
    writeln!(out, "k\tmean\tlo\thi")?;
    for s in &summary {
        writeln!(out, "{}\t{:.4}\t{:.4}\t{:.4}", s.k, s.mean, s.lo, s.hi)?;
    }
    eprintln!(
        "{} draws kept, acceptance {:.3}, {:.1} s",
        samples.rows(),
        meta.acceptance_rate,
        meta.runtime_secs
    );
    Ok(())
}

fn cmd_fit_plugin(a: PluginArgs) -> decompound::Result<()> {
    let data = load_data(&a.data)?;
    let est = plugin::estimate_with(&data, a.k_max, a.truncation.into())?;
    fs::create_dir_all(&a.out)?;
    dio::write_rows(
        est.nu_hat.len(),
        std::iter::once(est.nu_hat.as_slice()),
        BufWriter::new(fs::File::create(a.out.join("plugin.csv"))?),
    )?;
    let record = PluginRecord {
        data: &a.data,
        dataset_digest: dio::dataset_digest(&data),
        k_max: a.k_max,
        estimate: &est,
    };
    dio::write_json(&record, &a.out.join("plugin.json"))?;
    println!("lambda_hat\t{}", est.lambda_hat);
    for (k, v) in est.nu_hat.iter().enumerate() {
        println!("nu_{}\t{v:.6}", k + 1);
    }
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> decompound::Result<()> {
    let samples = dio::read_draws(fs::File::open(&a.draws)?)?;
    let summary = diagnostics::summarize(&samples, levels(&a.levels))?;
    match &a.out {
        Some(path) => dio::write_summary(&summary, BufWriter::new(fs::File::create(path)?))?,
        None => dio::write_summary(&summary, io::stdout().lock())?,
    }
    if let Some(path) = &a.truth {
        let truth: Truth = dio::read_json(path)?;
        let mean: Vec<f64> = summary.iter().map(|s| s.mean).collect();
        eprintln!("err_l1 = {:.6}", diagnostics::err_l1_vec(&mean, &truth.nu));
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> decompound::Result<()> {
    if a.instances == 0 {
        eprintln!("warning: zero instances requested; nothing is checked");
    }
    let report = verify::run(&VerifyConfig {
        instances: a.instances,
        seed: a.seed,
        slack: a.slack,
        inject_fault: a.inject_fault,
    })?;
    let mut out = io::stdout().lock();
    for c in &report.checks {
        writeln!(
            out,
            "{:<28} {:>6} checked {:>5} skipped {:>5} violations  max excess {:.3e}  {}",
            c.name,
            c.checked,
            c.skipped,
            c.violations,
            c.worst_excess,
            if c.passed() { "PASS" } else { "FAIL" }
        )?;
    }
    if report.passed() {
        Ok(())
    } else {
        let bad: usize = report.checks.iter().map(|c| c.violations).sum();
        Err(Error::InvalidState(format!("{bad} inequality violations")))
    }
}

fn cmd_diophantine(a: DiophantineArgs) -> decompound::Result<()> {
    let set = enumerate_with_budget(a.m, a.z, DEFAULT_MEMORY_BUDGET)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for k in set.iter() {
        let line: Vec<String> = k.iter().map(u32::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_export(a: ExportArgs) -> decompound::Result<()> {
    let data = datasets::by_name(&a.name)?;
    match &a.out {
        Some(path) => dio::write_increments_file(&data, path),
        None => dio::write_increments(&data, io::stdout().lock()),
    }
}
