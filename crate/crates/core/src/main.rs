use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pmlr_core::airframe::{synth_dataset, GangMode, ModelKind, SurfaceSuite};
use pmlr_core::alloc::{increment_limits, rpi_allocate, AllocError, AllocationProblem, EffectorLimits};
use pmlr_core::config::Config;
use pmlr_core::pmlr::io::{read_datasets, read_models, write_datasets, write_models, NamedDataset, NamedModel};
use pmlr_core::pmlr::{fit, FitMethod, PmlrError};
use pmlr_core::sim::{compare, run_maneuver, write_csv, SimConfig, SimError};
use pmlr_core::tensor::Mat;

#[derive(Parser)]
#[command(name = "pmlr", version, about = "Piecewise multi-linear effector models and control allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a PMLR model to every component of a dataset file.
    Fit {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Regression)]
        method: Method,
    },
    /// Evaluate a model and its Jacobian at one point (file units).
    Eval {
        model: PathBuf,
        /// Comma-separated coordinates, one per axis.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        /// Model name inside the file; defaults to the first.
        #[arg(long)]
        name: Option<String>,
    },
    /// Solve a single allocation frame described by a config file.
    Allocate { config: PathBuf },
    /// Run the roll-pulse maneuver and write a CSV trace.
    Sim {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        model: Option<Kind>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        gang: Option<u32>,
    },
    /// Write the synthetic aerodynamic tables.
    GenData {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the maneuver with both onboard models and tabulate allocation errors.
    Compare {
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        gang: Option<u32>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Regression,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pmlr,
    Poly,
}

/// Failure classes mapped to exit codes: bad input → 1, numerical → 2.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<PmlrError> for Failure {
    fn from(e: PmlrError) -> Self {
        match e {
            PmlrError::Singular { .. } | PmlrError::IllConditioned { .. } | PmlrError::NodeBudget { .. } => {
                Failure::Numerical(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => Failure::Usage(e.to_string()),
            SimError::Airframe(pmlr_core::airframe::AirframeError::Pmlr(p)) => p.into(),
            SimError::Airframe(a) => Failure::Usage(a.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<AllocError> for Failure {
    fn from(e: AllocError) -> Self {
        match e {
            AllocError::RankDeficient { .. } | AllocError::NonFinite(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_config(path: &Path) -> Result<Config, Failure> {
    Config::parse(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fit { dataset, output, method } => cmd_fit(&dataset, &output, method),
        Command::Eval { model, at, name } => cmd_eval(&model, &at, name.as_deref()),
        Command::Allocate { config } => cmd_allocate(&config),
        Command::Sim {
            config,
            output,
            model,
            gang,
        } => cmd_sim(&config, &output, model, gang),
        Command::GenData { seed, output } => write(&output, &write_datasets(&synth_dataset(seed))),
        Command::Compare { config, gang } => cmd_compare(&config, gang),
    }
}

fn cmd_fit(dataset: &Path, output: &Path, method: Method) -> Result<(), Failure> {
    let items = read_datasets(&read(dataset)?)?;
    let method = match method {
        Method::Regression => FitMethod::Regression,
        Method::Iterative => FitMethod::Iterative,
    };
    let models = items
        .iter()
        .map(|d| {
            let model = fit(&d.data, method).map_err(|e| match Failure::from(e) {
                Failure::Numerical(m) => Failure::Numerical(format!("{}: {m}", d.name)),
                Failure::Usage(m) => Failure::Usage(format!("{}: {m}", d.name)),
            })?;
            Ok(NamedModel {
                name: d.name.clone(),
                model,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    write(output, &write_models(&models))?;
    for m in &models {
        println!("{}: {} coefficients", m.name, m.model.coefficient_count());
    }
    Ok(())
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::Usage(format!("invalid coordinate {s:?}")))
        })
        .collect()
}

fn cmd_eval(path: &Path, at: &str, name: Option<&str>) -> Result<(), Failure> {
    let models = read_models(&read(path)?)?;
    let chosen = match name {
        Some(n) => models
            .iter()
            .find(|m| m.name == n)
            .ok_or_else(|| Failure::Usage(format!("no model named {n:?} in {}", path.display())))?,
        None => models.first().ok_or_else(|| Failure::Usage("model file is empty".into()))?,
    };
    let model = &chosen.model;
    let z = parse_numbers(at)?;
    if z.len() != model.k() {
        return Err(Failure::Usage(format!("model {:?} takes {} coordinates, got {}", chosen.name, model.k(), z.len())));
    }
    if !model.in_hull(&z) {
        eprintln!("warning: point lies outside the grid; extrapolating the boundary cells linearly");
    }
    let value = model.evaluate(&z)?;
    let jac = model.jacobian(&z)?;
    let labels = model.labels();
    println!("model {}", chosen.name);
    for (o, v) in value.iter().enumerate() {
        let partials: Vec<String> = (0..model.k())
            .map(|j| format!("d/d{} = {:e}", labels.axis_names[j], jac.get(o, j)))
            .collect();
        println!("{} = {:e}    {}", labels.output_names[o], v, partials.join("  "));
    }
    Ok(())
}

const ALLOCATE_KEYS: &[&str] = &[
    "g",
    "demand",
    "lower",
    "upper",
    "weights",
    "preference",
    "delta0",
    "delta_min",
    "delta_max",
    "rate_max",
    "dt",
];

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn cmd_allocate(path: &Path) -> Result<(), Failure> {
    let c = parse_config(path)?;
    c.check_keys(ALLOCATE_KEYS).map_err(usage)?;
    let rows = c.matrix("g").map_err(usage)?.ok_or_else(|| usage("missing key \"g\""))?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let g = Mat::from_rows(&refs).map_err(usage)?;
    let kappa = g.cols();
    let demand = c.list("demand").map_err(usage)?.ok_or_else(|| usage("missing key \"demand\""))?;

    let (lower, upper) = match (c.list("lower").map_err(usage)?, c.list("upper").map_err(usage)?) {
        (Some(lo), Some(hi)) => (lo, hi),
        (None, None) => {
            let need = |k: &str| c.list(k).map_err(usage)?.ok_or_else(|| usage(format!("missing key {k:?} (or give lower and upper)")));
            let limits = EffectorLimits::new(need("delta_min")?, need("delta_max")?, need("rate_max")?)?;
            let delta0 = c.list("delta0").map_err(usage)?.unwrap_or_else(|| vec![0.0; kappa]);
            let dt: f64 = c.require("dt").map_err(usage)?;
            if dt.is_nan() || dt <= 0.0 || delta0.len() != limits.len() {
                return Err(usage("dt must be positive and delta0 must match the limits"));
            }
            increment_limits(&limits, &delta0, dt)
        }
        _ => return Err(usage("give both lower and upper, or neither")),
    };

    let mut problem = AllocationProblem::new(g, demand.clone(), lower, upper);
    if let Some(w) = c.matrix("weights").map_err(usage)? {
        let w = if w.len() == 1 {
            Mat::diag(&w[0]).map_err(usage)?
        } else {
            let refs: Vec<&[f64]> = w.iter().map(Vec::as_slice).collect();
            Mat::from_rows(&refs).map_err(usage)?
        };
        problem = problem.with_weights(w);
    }
    if let Some(p) = c.list("preference").map_err(usage)? {
        problem = problem.with_preference(p);
    }
    let result = rpi_allocate(&problem)?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
    println!("increment {}", fmt(&result.delta_increment));
    println!("achieved  {}", fmt(&result.achieved));
    println!("residual  {}", fmt(&result.residual(&demand)));
    let sat: Vec<String> = result.saturated.iter().map(|s| u8::from(*s).to_string()).collect();
    println!("saturated {}", sat.join(" "));
    println!("passes    {}", result.iterations);
    Ok(())
}

fn load_suite(config_path: &Path, c: &Config, sim: &SimConfig) -> Result<SurfaceSuite, Failure> {
    let items: Vec<NamedDataset> = match c.raw("dataset") {
        Some(p) => {
            let path = config_path.parent().unwrap_or(Path::new(".")).join(p);
            read_datasets(&read(&path)?)?
        }
        None => synth_dataset(sim.seed),
    };
    SurfaceSuite::from_datasets(&items, sim.rate_limit_deg_s).map_err(|e| SimError::from(e).into())
}

fn sim_config(path: &Path, gang: Option<u32>) -> Result<(Config, SimConfig), Failure> {
    let c = parse_config(path)?;
    let mut sim = SimConfig::from_config(&c)?;
    if let Some(g) = gang {
        sim.gang = GangMode::from_index(g).expect("range checked by the parser");
        sim.validate()?;
    }
    Ok((c, sim))
}

fn cmd_sim(path: &Path, output: &Path, model: Option<Kind>, gang: Option<u32>) -> Result<(), Failure> {
    let (c, mut sim) = sim_config(path, gang)?;
    if let Some(k) = model {
        sim.model_kind = match k {
            Kind::Pmlr => ModelKind::Pmlr,
            Kind::Poly => ModelKind::Poly,
        };
    }
    let suite = load_suite(path, &c, &sim)?;
    let trace = run_maneuver(&sim, &suite)?;
    write(output, &write_csv(&trace))?;
    let m = trace.metrics()?;
    println!(
        "{} frames, trim theta {:.4} deg, peak roll {:.3} deg",
        trace.frames.len(),
        trace.trim.theta.to_degrees(),
        trace.peak_roll().to_degrees()
    );
    println!("RMS allocation error [N m]: l {:e}  m {:e}  n {:e}", m.rms[0], m.rms[1], m.rms[2]);
    Ok(())
}

fn cmd_compare(path: &Path, gang: Option<u32>) -> Result<(), Failure> {
    let (c, sim) = sim_config(path, gang)?;
    let suite = load_suite(path, &c, &sim)?;
    let (pmlr, poly) = compare(&sim, &suite)?;
    let (a, b) = (pmlr.metrics()?, poly.metrics()?);
    let label = match sim.gang {
        GangMode::SplitAileronRuddervator => "split aileron / ruddervator",
        GangMode::ElevatorRudderon => "elevator / rudderon",
    };
    println!("gang mode {} ({label}): allocation error [N m]", sim.gang.index());
    println!("{:<6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}", "model", "rms_l", "rms_m", "rms_n", "peak_l", "peak_m", "peak_n");
    for (name, m) in [("pmlr", a), ("poly", b)] {
        println!(
            "{:<6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            name, m.rms[0], m.rms[1], m.rms[2], m.peak[0], m.peak[1], m.peak[2]
        );
    }
    Ok(())
}
