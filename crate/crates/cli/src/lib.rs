//! Batch front end: parse flags or a config file, run one computation and
//! write results, metadata and a plot script.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use randmean::grid::DistributionGrid;
use randmean::mixture::{mixture_posterior_cdf, mixture_posterior_density, MixtureData, MixtureRouteRegistry};
use randmean::models::ModelRegistry;
use randmean::numerics::QuadratureConfig;
use randmean::pd::{pd_cdf_via_mixture, pd_fdd_density, pd_mean_cdf, stable_predictive, PdModel};
use randmean::posterior::{posterior_cdf, posterior_density};
use randmean::prior::PriorMeanLaw;
use randmean::sim::{sample_posterior_mean, sample_prior_mean, RngSpec, SuiteOptions, SuiteRegistry};
use randmean::Error;

pub use config::{Command, RunConfig};
use output::Outputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable read when --threads is absent.
pub const THREADS_ENV: &str = "RANDMEAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "randmean", version, about = "Laws of mean functionals of normalized random measures")]
struct Cli {
    /// Run from a JSON config (or a previous run's metadata.json) instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    PriorCdf(GridArgs),
    PriorDensity(GridArgs),
    PosteriorDensity(GridArgs),
    PosteriorCdf(GridArgs),
    MixtureDensity(GridArgs),
    MixtureCdf(GridArgs),
    PdCdf(PdArgs),
    PdFdd(FddArgs),
    Predictive(PredictiveArgs),
    Simulate(SimulateArgs),
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Model JSON file, or inline JSON.
    #[arg(long)]
    model: Option<String>,
    /// identity | indicator:lo:hi | constant:c | poly:c0,c1,... | JSON
    #[arg(long)]
    g: Option<String>,
    /// Sample JSON file ({"distinct": [[x, n], ...]} or {"observations": [...]}).
    #[arg(long)]
    sample: Option<String>,
    /// Mixture data JSON file ({"y": [...]}).
    #[arg(long)]
    data: Option<String>,
    /// gaussian:s
    #[arg(long)]
    kernel: Option<String>,
    /// Mixture route name (default depends on the model).
    #[arg(long)]
    route: Option<String>,
    /// lo:hi:n
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PdArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Base probability JSON ({"atoms": [[x, w], ...]}), file or inline.
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    /// Evaluate through the gamma mixture of generalized gamma laws with this β.
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct FddArgs {
    #[arg(long)]
    theta: Option<f64>,
    /// p1,p2,...
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// w1,...,w_{n-1}
    #[arg(long, value_delimiter = ',')]
    eval: Vec<f64>,
}

#[derive(Debug, Args)]
struct PredictiveArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sample: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    sample: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Suite name; repeat for several, or `all`.
    #[arg(long)]
    suite: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    common: Common,
}

/// A failure together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_NUMERICAL };
        Self { code, message: e.to_string() }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `argv` (program name first), runs and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli) -> Outcome<()> {
    let cfg = match (&cli.config, cli.command) {
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(sub)) => from_flags(sub)?,
        (Some(_), Some(_)) => return Err(Failure::config("give either --config or a subcommand, not both")),
        (None, None) => return Err(Failure::config("missing subcommand (try --help)")),
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure::config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?),
            Err(_) => None,
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let outputs = pool.install(|| compute(&cfg))?;
    let seconds = started.elapsed().as_secs_f64();
    outputs.write(&cli.out_dir, &cfg, seconds)
}

fn read_arg(text: &str, what: &str) -> Outcome<Value> {
    let body = if text.trim_start().starts_with('{') || text.trim_start().starts_with('[') {
        text.to_string()
    } else {
        std::fs::read_to_string(Path::new(text)).map_err(|e| Failure::config(format!("cannot read {what} file {text:?}: {e}")))?
    };
    serde_json::from_str(&body).map_err(|e| Failure::config(format!("malformed {what} JSON: {e}")))
}

fn need<T>(v: Option<T>, flag: &str) -> Outcome<T> {
    v.ok_or_else(|| Failure::config(format!("missing --{flag}")))
}

fn parse<T: std::str::FromStr<Err = Error>>(text: Option<&String>, flag: &str) -> Outcome<Option<T>> {
    text.map(|t| t.parse::<T>().map_err(|e| Failure::config(format!("--{flag}: {e}")))).transpose()
}

fn sample_arg(text: Option<&String>) -> Outcome<Option<randmean::models::SampleSummary>> {
    text.map(|t| config::parse_sample(read_arg(t, "sample")?)).transpose()
}

fn from_flags(sub: Sub) -> Outcome<RunConfig> {
    let mut c = RunConfig::default();
    let grid_args = |c: &mut RunConfig, a: GridArgs| -> Outcome<()> {
        c.model = a.model.as_deref().map(|m| read_arg(m, "model")).transpose()?;
        c.g = parse(a.g.as_ref(), "g")?;
        c.sample = sample_arg(a.sample.as_ref())?;
        c.data = a.data.as_deref().map(|d| config::parse_data(read_arg(d, "data")?)).transpose()?;
        c.kernel = parse(a.kernel.as_ref(), "kernel")?;
        c.route = a.route;
        c.grid = parse(a.grid.as_ref(), "grid")?;
        c.set_tolerances(a.common.abs_tol, a.common.rel_tol);
        Ok(())
    };
    match sub {
        Sub::PriorCdf(a) => {
            c.command = Command::PriorCdf;
            grid_args(&mut c, a)?;
        }
        Sub::PriorDensity(a) => {
            c.command = Command::PriorDensity;
            grid_args(&mut c, a)?;
        }
        Sub::PosteriorDensity(a) => {
            c.command = Command::PosteriorDensity;
            grid_args(&mut c, a)?;
        }
        Sub::PosteriorCdf(a) => {
            c.command = Command::PosteriorCdf;
            grid_args(&mut c, a)?;
        }
        Sub::MixtureDensity(a) => {
            c.command = Command::MixtureDensity;
            grid_args(&mut c, a)?;
        }
        Sub::MixtureCdf(a) => {
            c.command = Command::MixtureCdf;
            grid_args(&mut c, a)?;
        }
        Sub::PdCdf(a) => {
            c.command = Command::PdCdf;
            c.gamma = a.gamma;
            c.theta = a.theta;
            c.p0 = a.p0
                .as_deref()
                .map(|p| serde_json::from_value(read_arg(p, "p0")?).map_err(|e| Failure::config(format!("invalid p0: {e}"))))
                .transpose()?;
            c.g = parse(a.g.as_ref(), "g")?;
            c.grid = parse(a.grid.as_ref(), "grid")?;
            c.beta = a.beta;
            c.set_tolerances(a.common.abs_tol, a.common.rel_tol);
        }
        Sub::PdFdd(a) => {
            c.command = Command::PdFdd;
            c.theta = a.theta;
            c.p = Some(a.p);
            c.eval = Some(a.eval);
        }
        Sub::Predictive(a) => {
            c.command = Command::Predictive;
            c.gamma = a.gamma;
            c.sample = sample_arg(a.sample.as_ref())?;
        }
        Sub::Simulate(a) => {
            c.command = Command::Simulate;
            c.model = a.model.as_deref().map(|m| read_arg(m, "model")).transpose()?;
            c.g = parse(a.g.as_ref(), "g")?;
            c.sample = sample_arg(a.sample.as_ref())?;
            c.n = a.n;
            c.seed = a.seed;
            c.eps = a.eps;
        }
        Sub::Validate(a) => {
            c.command = Command::Validate;
            c.suite = Some(a.suite);
            c.n = a.n;
            c.seed = a.seed;
            c.eps = a.eps;
            c.set_tolerances(a.common.abs_tol, a.common.rel_tol);
        }
    }
    Ok(c)
}

fn quadrature(cfg: &RunConfig) -> Outcome<QuadratureConfig> {
    let mut q = QuadratureConfig::default();
    if let Some(a) = cfg.abs_tol {
        q.abs_tol = a;
    }
    if let Some(r) = cfg.rel_tol {
        q.rel_tol = r;
    }
    q.validate()?;
    Ok(q)
}

fn grid_points(cfg: &RunConfig) -> Outcome<Vec<f64>> {
    Ok(need(cfg.grid, "grid")?.points())
}

fn compute(cfg: &RunConfig) -> Outcome<Outputs> {
    let q = quadrature(cfg)?;
    let models = ModelRegistry::builtin();
    let model = || -> Outcome<_> { Ok(models.build(need(cfg.model.as_ref(), "model")?)?) };
    let g = || need(cfg.g.clone(), "g");
    match cfg.command {
        Command::PriorCdf | Command::PriorDensity => {
            let m = model()?;
            let g = g()?;
            let sigmas = grid_points(cfg)?;
            let law = PriorMeanLaw::new(m.as_ref(), &g)?;
            let grid = if cfg.command == Command::PriorCdf { law.cdf_grid(&sigmas, &q)? } else { law.density_grid(&sigmas, &q)? };
            Ok(Outputs::grid(cfg.command, grid))
        }
        Command::PosteriorDensity | Command::PosteriorCdf => {
            let m = model()?;
            let g = g()?;
            let sample = need(cfg.sample.clone(), "sample")?;
            let sigmas = grid_points(cfg)?;
            let grid = if cfg.command == Command::PosteriorCdf {
                posterior_cdf(m.as_ref(), &g, &sample, &sigmas, &q)?
            } else {
                posterior_density(m.as_ref(), &g, &sample, &sigmas, &q)?
            };
            Ok(Outputs::grid(cfg.command, grid))
        }
        Command::MixtureDensity | Command::MixtureCdf => {
            let m = model()?;
            let data = need(cfg.data.clone(), "data")?;
            let kernel = need(cfg.kernel, "kernel")?;
            let mix = MixtureData::new(data, kernel, g()?)?;
            let sigmas = grid_points(cfg)?;
            let density = cfg.command == Command::MixtureDensity;
            let grid = match &cfg.route {
                None if density => mixture_posterior_density(m.as_ref(), &mix, &sigmas, &q)?,
                None => mixture_posterior_cdf(m.as_ref(), &mix, &sigmas, &q)?,
                Some(name) => {
                    let law = MixtureRouteRegistry::builtin().prepare(name, m.as_ref(), &mix, &q)?;
                    if density {
                        law.density_grid(&sigmas, &q)?
                    } else {
                        law.cdf_grid(&sigmas, &q)?
                    }
                }
            };
            Ok(Outputs::grid(cfg.command, grid))
        }
        Command::PdCdf => {
            let p0 = need(cfg.p0.clone(), "p0")?;
            let pd = PdModel::new(need(cfg.gamma, "gamma")?, need(cfg.theta, "theta")?, p0)?;
            let g = g()?;
            let sigmas = grid_points(cfg)?;
            let grid = DistributionGrid::evaluate(&sigmas, |s| {
                let r = match cfg.beta {
                    Some(b) => pd_cdf_via_mixture(&pd, &g, s, b, &q)?,
                    None => pd_mean_cdf(&pd, &g, s, &q)?,
                };
                Ok((r.value, r.err_estimate))
            })?;
            Ok(Outputs::grid(cfg.command, grid))
        }
        Command::PdFdd => {
            let theta = need(cfg.theta, "theta")?;
            let p = need(cfg.p.clone(), "p")?;
            let w = need(cfg.eval.clone(), "eval")?;
            let density = pd_fdd_density(theta, &p, &w)?;
            Ok(Outputs::json("fdd.json", json!({ "theta": theta, "p": p, "w": w, "density": density })))
        }
        Command::Predictive => {
            let sample = need(cfg.sample.clone(), "sample")?;
            let pr = stable_predictive(need(cfg.gamma, "gamma")?, &sample)?;
            Ok(Outputs::json("predictive.json", serde_json::to_value(pr).map_err(Error::from)?))
        }
        Command::Simulate => {
            let m = model()?;
            let g = g()?;
            let n = need(cfg.n, "n")?;
            let rng = RngSpec::new(cfg.seed.unwrap_or(0), 0);
            let eps = cfg.eps.unwrap_or(randmean::sim::DEFAULT_EPS_REL);
            let xs = match &cfg.sample {
                Some(s) => sample_posterior_mean(m.as_ref(), s, &g, n, rng, eps)?,
                None => sample_prior_mean(m.as_ref(), &g, n, rng, eps)?,
            };
            Ok(Outputs::samples(xs))
        }
        Command::Validate => {
            let registry = SuiteRegistry::builtin();
            let mut names = need(cfg.suite.clone(), "suite")?;
            if names.is_empty() {
                return Err(Failure::config("missing --suite"));
            }
            if names.iter().any(|n| n == "all") {
                names = registry.names().map(String::from).collect();
            }
            let opts = SuiteOptions {
                n_samples: cfg.n,
                seed: cfg.seed.unwrap_or(SuiteOptions::default().seed),
                eps_rel: cfg.eps.unwrap_or(randmean::sim::DEFAULT_EPS_REL),
                quadrature: q,
            };
            let reports = names.iter().map(|n| registry.run(n, &opts)).collect::<randmean::Result<Vec<_>>>()?;
            Ok(Outputs::validation(reports))
        }
    }
}
