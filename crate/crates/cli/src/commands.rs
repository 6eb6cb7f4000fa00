use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use laguerre_sieve::estimator::{parse_grid, FitOptions, FitResult, ParameterCount};
use laguerre_sieve::features::{feature_report, DEFAULT_PROBS};
use laguerre_sieve::laguerre::{approximate, best_approx, LaguerreDensity};
use laguerre_sieve::simulator::{
    bootstrap_test, impute_windows, read_raw_records, run_study, sample_dataset, GeneratorConfig,
    Observed,
};
use laguerre_sieve::transmission::{
    read_observations_lenient, write_observations, ExposureModel, Observation, QuadratureConfig,
    RecordError,
};
use laguerre_sieve::{fit, select_model, Density, GenericDensity, SieveError, VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "lagsieve",
    version,
    about = "Laguerre sieve estimation of incubation and generation time densities"
)]
pub struct Cli {
    /// Worker threads for parallel fits and simulations.
    #[arg(long, global = true, env = "LAGSIEVE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic data set.
    Simulate(SimulateArgs),
    /// Fit degree-(m1, m2) Laguerre densities to a data set.
    Fit(FitArgs),
    /// Fit a grid of degrees and choose by BIC.
    Select(SelectArgs),
    /// Reproduction number, quantiles and pre-symptomatic probability of a fit.
    Features(FeaturesArgs),
    /// Monte-Carlo simulation study.
    Study(StudyArgs),
    /// Parametric bootstrap goodness-of-fit test.
    Test(TestArgs),
    /// Best Laguerre approximation of a parametric density.
    Approx(ApproxArgs),
    /// Tabulate density and distribution function of a Laguerre density.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    /// Random starts per fit.
    #[arg(long, default_value_t = 5)]
    starts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Simplex convergence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Likelihood evaluation: auto, moment or direct.
    #[arg(long, default_value = "auto")]
    strategy: String,
    /// Parameter count in the BIC: angles or coefficients.
    #[arg(long, default_value = "angles")]
    parameter_count: String,
    #[arg(long, default_value_t = 64)]
    nodes_t: usize,
    #[arg(long, default_value_t = 64)]
    nodes_y: usize,
    /// Extra batches of starts when all starts stay on the likelihood floor.
    #[arg(long, default_value_t = 2)]
    retries: usize,
}

impl OptimizerArgs {
    fn options(&self, seed: u64) -> Result<FitOptions> {
        let opts = FitOptions {
            n_starts: self.starts,
            max_iters: self.max_iters,
            simplex_tol: self.tol,
            seed,
            quadrature: QuadratureConfig {
                nodes_t: self.nodes_t,
                nodes_y: self.nodes_y,
                ..QuadratureConfig::default()
            },
            strategy: self.strategy.clone(),
            parameter_count: self.parameter_count.parse::<ParameterCount>()?,
            retries: self.retries,
            ..FitOptions::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Generator configuration (`key = value`); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample size (overrides the configuration).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Data set: `id,s1,s2,w_tilde,location`, or raw records with columns
    /// `id,s1,s2,window_start,window_end,second_window_end,location`.
    #[arg(long)]
    data: PathBuf,
    /// Exposure model (`location.<c>.rate = r` entries).
    #[arg(long)]
    model: PathBuf,
    /// Where rejected records are reported (default: next to the data).
    #[arg(long)]
    errors: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    m1: usize,
    #[arg(long)]
    m2: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Degree grid such as `1..4x1..4`.
    #[arg(long, default_value = "1..4x1..4")]
    grid: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// BIC table (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Also write the selected fit as JSON.
    #[arg(long)]
    fit_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    fit: PathBuf,
    /// Exponential growth rate of case numbers (per day).
    #[arg(long, allow_hyphen_values = true)]
    growth_rate: f64,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBS)]
    probs: Vec<f64>,
    /// JSON report; a table is printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m1: usize,
    #[arg(long)]
    m2: usize,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Growth rate used for the reproduction number (default: doubling
    /// every five days).
    #[arg(long, allow_hyphen_values = true)]
    growth_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Output directory for `study.json` and `replications.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Fitted model to test.
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    fit: Option<PathBuf>,
    /// Data to fit first (needs --m1, --m2 and an exposure model).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Null incubation density, e.g. `lognormal:1.644,0.363`.
    #[arg(long)]
    h0_i: String,
    /// Null generation-time density, e.g. `weibull:2.826,5.665`.
    #[arg(long)]
    h0_g: String,
    #[arg(long, default_value_t = 100)]
    sims: usize,
    /// Generator configuration for the null data sets (window, locations).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ApproxArgs {
    /// Density descriptor such as `weibull:2.826,5.665`.
    #[arg(long)]
    density: String,
    #[arg(long)]
    m: usize,
    /// Also minimize the Hellinger distance directly and report both.
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Laguerre density JSON (`{"m": .., "theta": [..]}`).
    #[arg(long)]
    theta: PathBuf,
    /// `start:end:step`.
    #[arg(long, default_value = "0:20:0.05")]
    range: String,
    #[arg(long)]
    out: PathBuf,
}

/// 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SieveError>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Select(a) => select(a),
        Command::Features(a) => features(a),
        Command::Study(a) => study(a),
        Command::Test(a) => test(a),
        Command::Approx(a) => approx(a),
        Command::Curve(a) => curve(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn generator_config(path: Option<&Path>) -> Result<GeneratorConfig> {
    Ok(match path {
        Some(p) => GeneratorConfig::read(p)?,
        None => GeneratorConfig::default(),
    })
}

/// Reads a data set, imputing windows for raw records. Rejected records are
/// written to a sidecar JSON file.
fn load_data(args: &DataArgs) -> Result<Vec<Observation>> {
    let (data, rejected) = read_any(&args.data)?;
    if !rejected.is_empty() {
        let sidecar = args.errors.clone().unwrap_or_else(|| {
            let mut p = args.data.clone().into_os_string();
            p.push(".rejected.json");
            PathBuf::from(p)
        });
        write_json(&sidecar, &rejected)?;
        eprintln!(
            "warning: {} record(s) rejected, see {}",
            rejected.len(),
            sidecar.display()
        );
    }
    if data.is_empty() {
        return Err(SieveError::Validation(format!(
            "{} contains no usable records",
            args.data.display()
        ))
        .into());
    }
    Ok(data)
}

fn read_any(path: &Path) -> Result<(Vec<Observation>, Vec<RecordError>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SieveError::Io(format!("{}: {e}", path.display())))?;
    let header = text
        .lines()
        .find(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .unwrap_or("");
    let has_w_tilde = header.split(',').any(|c| c.trim() == "w_tilde");
    if has_w_tilde {
        Ok(read_observations_lenient(path)?)
    } else {
        let (raw, mut rejected) = read_raw_records(path)?;
        let out = impute_windows(&raw);
        rejected.extend(out.rejected);
        rejected.sort_by_key(|r| r.line);
        Ok((out.observations, rejected))
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = generator_config(a.config.as_deref())?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let data = sample_dataset(&cfg)?;
    let mut comments = vec![format!("lagsieve {VERSION} simulate")];
    comments.extend(cfg.to_config().to_string().lines().map(String::from));
    let mut w = create(&a.out)?;
    write_observations(&mut w, &data, &comments)?;
    w.flush()?;
    eprintln!("wrote {} observations to {}", data.len(), a.out.display());
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let em = ExposureModel::read(&a.data.model)?;
    let opts = a.optimizer.options(a.seed)?;
    let result = fit(&data, &em, a.m1, a.m2, &opts)?;
    write_json(&a.out, &result)?;
    println!(
        "m1={} m2={} loglik={:.6} bic={:.6}",
        result.m1, result.m2, result.loglik, result.bic
    );
    println!("theta_I = {:?}", result.phi_i_hat.theta());
    println!("theta_G = {:?}", result.phi_g_hat.theta());
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let em = ExposureModel::read(&a.data.model)?;
    let grid = parse_grid(&a.grid)?;
    let opts = a.optimizer.options(a.seed)?;
    let sel = select_model(&data, &em, &grid, &opts)?;
    let mut w = create(&a.out)?;
    writeln!(w, "# lagsieve {VERSION} select")?;
    writeln!(w, "# seed = {}", a.seed)?;
    writeln!(w, "# grid = {}", a.grid)?;
    writeln!(w, "# selected = {},{}", sel.best.0, sel.best.1)?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(["m1", "m2", "loglik", "bic", "error"])?;
        for c in &sel.table {
            csv.write_record([
                c.m1.to_string(),
                c.m2.to_string(),
                c.loglik.map(|v| v.to_string()).unwrap_or_default(),
                c.bic.map(|v| v.to_string()).unwrap_or_default(),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        csv.flush()?;
    }
    w.flush()?;
    if let Some(p) = &a.fit_out {
        write_json(p, &sel.best_fit)?;
    }
    println!("{:>3} {:>3} {:>14} {:>14}", "m1", "m2", "loglik", "bic");
    for c in &sel.table {
        match (c.loglik, c.bic) {
            (Some(l), Some(b)) => println!("{:>3} {:>3} {:>14.4} {:>14.4}", c.m1, c.m2, l, b),
            _ => println!(
                "{:>3} {:>3} failed: {}",
                c.m1,
                c.m2,
                c.error.as_deref().unwrap_or("")
            ),
        }
    }
    println!("selected m1={} m2={}", sel.best.0, sel.best.1);
    Ok(())
}

#[derive(Serialize)]
struct FeaturesOutput<'a> {
    version: &'a str,
    fit_seed: u64,
    m1: usize,
    m2: usize,
    report: &'a laguerre_sieve::features::FeatureReport,
}

fn features(a: FeaturesArgs) -> Result<()> {
    let f = FitResult::read_json(&a.fit)?;
    let report = feature_report(&f, a.growth_rate, &a.probs)?;
    println!("growth rate      {}", report.growth_rate_used);
    println!("r0={}", report.r0);
    println!("P(G <= I)        {:.6}", report.presymptomatic_prob);
    println!("{:>6} {:>12} {:>12}", "p", "incubation", "generation");
    for (qi, qg) in report.quantiles_i.iter().zip(&report.quantiles_g) {
        println!("{:>6} {:>12.6} {:>12.6}", qi.p, qi.value, qg.value);
    }
    if let Some(out) = &a.out {
        write_json(
            out,
            &FeaturesOutput {
                version: VERSION,
                fit_seed: f.seed,
                m1: f.m1,
                m2: f.m2,
                report: &report,
            },
        )?;
    }
    Ok(())
}

fn study(a: StudyArgs) -> Result<()> {
    let mut cfg = generator_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let opts = a.optimizer.options(cfg.seed)?;
    let r_hat = a.growth_rate.unwrap_or(std::f64::consts::LN_2 / 5.0);
    let report = run_study(&cfg, a.m1, a.m2, a.reps, r_hat, &opts)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_json(&a.out.join("study.json"), &report)?;
    let mut w = create(&a.out.join("replications.csv"))?;
    writeln!(
        w,
        "# lagsieve {VERSION} study m1={} m2={} reps={}",
        a.m1, a.m2, a.reps
    )?;
    for line in cfg.to_config().to_string().lines() {
        writeln!(w, "# {line}")?;
    }
    report.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "{} replications ({} failed); truth R0 = {:.4}",
        report.n_reps, report.failures, report.truth.r0
    );
    println!(
        "{:<22} {:>10} {:>10} {:>10}",
        "column", "q10", "median", "q90"
    );
    for s in &report.summaries {
        println!(
            "{:<22} {:>10.5} {:>10.5} {:>10.5}",
            s.column, s.q10, s.median, s.q90
        );
    }
    Ok(())
}

fn test(a: TestArgs) -> Result<()> {
    let mut cfg = generator_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let h0_i = GenericDensity::parse(&a.h0_i)?;
    let h0_g = GenericDensity::parse(&a.h0_g)?;
    let opts = a.optimizer.options(cfg.seed)?;
    let (observed, m1, m2) = match (&a.fit, &a.data) {
        (Some(path), _) => {
            let f = FitResult::read_json(path)?;
            let (m1, m2) = (a.m1.unwrap_or(f.m1), a.m2.unwrap_or(f.m2));
            cfg.n = f.n;
            (Observed::Fit(Box::new(f)), m1, m2)
        }
        (None, Some(path)) => {
            let (Some(m1), Some(m2)) = (a.m1, a.m2) else {
                bail!(SieveError::Validation("--data needs --m1 and --m2".into()));
            };
            let model = a.model.as_ref().ok_or_else(|| {
                SieveError::Validation("--data needs an exposure model (--model)".into())
            })?;
            let data = load_data(&DataArgs {
                data: path.clone(),
                model: model.clone(),
                errors: None,
            })?;
            cfg.rates = ExposureModel::read(model)?.rates;
            cfg.validate()?;
            cfg.n = data.len();
            (Observed::Data(data), m1, m2)
        }
        (None, None) => bail!(SieveError::Validation(
            "either --fit or --data is required".into()
        )),
    };
    let res = bootstrap_test(&observed, &h0_i, &h0_g, m1, m2, &cfg, a.sims, &opts)?;
    if let Some(out) = &a.out {
        write_json(out, &res)?;
    }
    println!("statistic  observed     exceedance  p-value");
    println!(
        "incubation {:<12.6} {:>9.1}%  {:.4}",
        res.observed_i,
        100.0 * res.exceed_i,
        res.p_i
    );
    println!(
        "generation {:<12.6} {:>9.1}%  {:.4}",
        res.observed_g,
        100.0 * res.exceed_g,
        res.p_g
    );
    println!(
        "joint      {:<12} {:>9.1}%  {:.4}",
        "",
        100.0 * res.exceed_joint,
        res.p_joint
    );
    if res.failed > 0 {
        eprintln!("warning: {} simulation fit(s) failed", res.failed);
    }
    Ok(())
}

#[derive(Serialize)]
struct ApproxOutput {
    m: usize,
    theta: Vec<f64>,
    density: String,
    hellinger_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection: Option<LaguerreDensity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projection_hellinger_sq: Option<f64>,
    version: &'static str,
}

fn approx(a: ApproxArgs) -> Result<()> {
    let phi = GenericDensity::parse(&a.density)?;
    let out = if a.refine {
        let r = approximate(phi.as_dyn(), a.m)?;
        ApproxOutput {
            m: a.m,
            theta: r.refined.theta().to_vec(),
            density: phi.descriptor().to_string(),
            hellinger_sq: r.refined_hellinger_sq,
            projection: Some(r.projection),
            projection_hellinger_sq: Some(r.projection_hellinger_sq),
            version: VERSION,
        }
    } else {
        let d = best_approx(phi.as_dyn(), a.m)?;
        ApproxOutput {
            m: a.m,
            hellinger_sq: laguerre_sieve::hellinger_sq(phi.as_dyn(), &d)?,
            theta: d.theta().to_vec(),
            density: phi.descriptor().to_string(),
            projection: None,
            projection_hellinger_sq: None,
            version: VERSION,
        }
    };
    write_json(&a.out, &out)?;
    println!("theta = {:?}", out.theta);
    println!("hellinger_sq = {:.8}", out.hellinger_sq);
    Ok(())
}

fn parse_range(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || SieveError::Parse(format!("range `{text}` must look like start:end:step"));
    if parts.len() != 3 {
        return Err(bad().into());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<std::result::Result<_, _>>()?;
    if v.iter().any(|x| !x.is_finite()) || v[2] <= 0.0 || v[1] < v[0] {
        return Err(bad().into());
    }
    Ok((v[0], v[1], v[2]))
}

fn curve(a: CurveArgs) -> Result<()> {
    let d = LaguerreDensity::read_json(&a.theta)?;
    let (start, end, step) = parse_range(&a.range)?;
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    let mut w = create(&a.out)?;
    writeln!(w, "# lagsieve {VERSION} curve")?;
    writeln!(w, "# theta = {:?}", d.theta())?;
    let mut csv = csv::Writer::from_writer(&mut w);
    csv.write_record(["x", "density", "cdf"])?;
    for i in 0..count {
        let x = start + i as f64 * step;
        csv.serialize((x, d.pdf(x), Density::cdf(&d, x)))?;
    }
    csv.flush()?;
    drop(csv);
    w.flush()?;
    Ok(())
}
