use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gpplab::dnorm::{functional_report, QuadratureSettings};
use gpplab::estimators::{
    beta_hat, psi_hat, psi_hat_threshold_fn, theta_hat, theta_star, CalibratedSurvival,
    EstimateReport, GppSurvival, Scaling, SurvivalMap, CALIBRATION_POINTS,
};
use gpplab::generator::{build_generator, validate_generator, ValidationTolerances};
use gpplab::grid::ThresholdPreset;
use gpplab::harness::io::{read_batch_csv, write_batch_csv, BatchMetadata};
use gpplab::harness::{run_experiment, ExperimentConfig};
use gpplab::kernel::{ScaleParam, SmoothingKernel};
use gpplab::processes::{
    sample_gpp, sample_neighborhood, ProcessBatch, Provenance, YDistribution, DEFAULT_CUTOFF,
};
use gpplab::rng::StreamKey;
use gpplab::{Error, Result};

#[derive(Parser)]
#[command(name = "gpplab", version, about = "Generalized Pareto process lab")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment config (flat TOML) for `lan` and `experiment`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// D-norm and inf-functional of a threshold function.
    Dnorm {
        #[arg(long, default_value = "laplace")]
        kernel: String,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "constant")]
        threshold: String,
        #[arg(long, default_value_t = gpplab::grid::DEFAULT_INTERVALS)]
        grid: usize,
    },
    /// Simulate a batch of paths, or validate the generator.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        validate_generator: bool,
        /// Monte Carlo draws for --validate-generator.
        #[arg(long, default_value_t = 100_000)]
        mc: usize,
    },
    /// Estimators from a batch file or an inline simulation.
    Estimate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value = "constant")]
        threshold: String,
        #[arg(long, default_value_t = 1)]
        replications: usize,
        /// Append one row per replication and estimator to this CSV.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
    /// LAN replication sweep.
    Lan {
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run an experiment config.
    Experiment {
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "laplace")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    mixing_rate: f64,
    #[arg(long, default_value_t = DEFAULT_CUTOFF, allow_hyphen_values = true)]
    cutoff: f64,
    /// gpp | exponential | expansion:A:DELTA
    #[arg(long, default_value = "gpp")]
    model: String,
}

impl ModelArgs {
    fn y(&self) -> Result<Option<YDistribution>> {
        match self.model.as_str() {
            "gpp" => Ok(None),
            "exponential" => Ok(Some(YDistribution::standard_exponential())),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                match parts.as_slice() {
                    ["expansion", a, d] => {
                        let parse = |s: &str| {
                            s.parse::<f64>()
                                .map_err(|e| Error::Config(format!("{s}: {e}")))
                        };
                        Ok(Some(YDistribution::expansion(parse(a)?, parse(d)?)?))
                    }
                    _ => Err(Error::Config(format!(
                        "unknown model '{other}' (gpp, exponential, expansion:A:DELTA)"
                    ))),
                }
            }
        }
    }

    fn simulate(&self, n: usize, grid: usize, seed: u64) -> Result<(ProcessBatch, BatchMetadata)> {
        let kernel = SmoothingKernel::from_name(&self.kernel)?;
        let spec = build_generator(&kernel, self.beta, self.mixing_rate)?;
        let key = StreamKey::root(seed);
        let batch = match self.y()? {
            None => sample_gpp(&spec, self.cutoff, n, grid, key)?,
            Some(y) => sample_neighborhood(&spec, self.cutoff, &y, n, grid, key)?,
        };
        let meta = BatchMetadata {
            provenance: batch.provenance().clone(),
            cutoff: self.cutoff,
            bound_m: spec.bound_m(),
            kernel: self.kernel.clone(),
            beta: self.beta,
            mixing_rate: self.mixing_rate,
            seed: Some(seed),
        };
        Ok((batch, meta))
    }
}

fn emit<T: Serialize>(rows: &[T], format: Format) -> Result<()> {
    let stdout = std::io::stdout();
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(rows).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(stdout.lock(), "{text}")?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn estimate_batch(
    batch: &ProcessBatch,
    meta: &BatchMetadata,
    c: f64,
    threshold: &str,
    seed: u64,
) -> Result<Vec<EstimateReport>> {
    let kernel = SmoothingKernel::from_name(&meta.kernel)?;
    let psi = psi_hat(batch, c)?;
    let tau = psi.exceedances;
    let mut reports = vec![
        psi.clone(),
        beta_hat(&psi, &kernel)?,
        theta_hat(tau, batch.len(), c)?,
    ];
    let star = match &meta.provenance {
        Provenance::Gpp => theta_star(tau, batch.len(), &GppSurvival::new(c)?),
        Provenance::Neighborhood { y } => {
            let map = CalibratedSurvival::build(
                &kernel,
                meta.mixing_rate,
                y,
                c,
                (0.05, 0.95),
                CALIBRATION_POINTS,
                20_000,
                StreamKey::root(seed).child(u64::MAX),
            )?;
            eprintln!(
                "calibrated survival map: max MC standard error {:.3e}",
                map.max_std_error()
            );
            theta_star(tau, batch.len(), &map as &dyn SurvivalMap)
        }
    };
    match star {
        Ok(r) => reports.push(r),
        Err(e) => eprintln!("theta-star: {e}"),
    }
    if matches!(meta.provenance, Provenance::Gpp) {
        let beta = ScaleParam::new(meta.beta)?;
        reports = reports
            .into_iter()
            .map(|r| r.with_target(beta, &kernel, Scaling::Fixed { c }))
            .collect::<Result<_>>()?;
    }
    if threshold != "constant" {
        let f = ThresholdPreset::from_name(threshold)?.grid(batch.intervals().unwrap_or(2));
        reports.push(psi_hat_threshold_fn(batch, &f, c)?);
    }
    Ok(reports)
}

#[derive(Serialize)]
struct EmitRow<'a> {
    replication: usize,
    estimator: &'a str,
    n: usize,
    c: f64,
    tau: usize,
    value: f64,
    flag: String,
    normalized_error: Option<f64>,
}

fn append_csv(path: &Path, rows: &[(usize, EstimateReport)]) -> Result<()> {
    let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_rows(file, fresh, rows)
}

fn write_rows<W: Write>(out: W, header: bool, rows: &[(usize, EstimateReport)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(header)
        .from_writer(out);
    for (r, rep) in rows {
        w.serialize(EmitRow {
            replication: *r,
            estimator: rep.estimator.name(),
            n: rep.n,
            c: rep.c,
            tau: rep.exceedances,
            value: rep.value,
            flag: format!("{:?}", rep.flag).to_lowercase(),
            normalized_error: rep.normalized_error,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn experiment_config(cli: &Cli, base: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = toml::from_str(base).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let file: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        table.extend(file);
    }
    let mut all = overrides.to_vec();
    if let Some(seed) = cli.seed {
        all.push(format!("seed={seed}"));
    }
    if let Some(w) = cli.workers {
        all.push(format!("workers={w}"));
    }
    ExperimentConfig::from_toml_str(&toml::to_string(&table).expect("table serializes"), &all)
}

fn run_config(cli: &Cli, config: &ExperimentConfig) -> Result<()> {
    let out = run_experiment(config)?;
    if let Some(dir) = &cli.out_dir {
        for p in out.write_to(dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    match cli.format {
        Format::Json => println!("{}", out.summary_json()?),
        Format::Csv => std::io::stdout().write_all(&out.summaries_csv()?)?,
    }
    eprintln!("overall: {}", if out.pass() { "pass" } else { "fail" });
    Ok(())
}

const LAN_BASE: &str = r#"
name = "lan"
analysis = "lan"
theta0 = 0.5
regime = "lan"
kappa = 1.0
exponent = 0.5
sample_sizes = [10000, 100000]
replications = 100
"#;

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(1);
    match &cli.command {
        Command::Dnorm {
            kernel,
            beta,
            threshold,
            grid,
        } => {
            let k = SmoothingKernel::from_name(kernel)?;
            let f = ThresholdPreset::from_name(threshold)?.grid(*grid);
            emit(
                &[functional_report(
                    &f,
                    *beta,
                    &k,
                    &QuadratureSettings::default(),
                )?],
                cli.format,
            )
        }
        Command::Simulate {
            model,
            n,
            grid,
            validate_generator: validate,
            mc,
        } => {
            if *validate {
                let kernel = SmoothingKernel::from_name(&model.kernel)?;
                let spec = build_generator(&kernel, model.beta, model.mixing_rate)?;
                let report = validate_generator(
                    &spec,
                    *grid,
                    *mc,
                    StreamKey::root(seed),
                    ValidationTolerances::default(),
                )?;
                eprintln!(
                    "generator validation: {}",
                    if report.pass { "pass" } else { "fail" }
                );
                return emit(&[report], Format::Json);
            }
            let (batch, meta) = model.simulate(*n, *grid, seed)?;
            match &cli.out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let path = dir.join("batch.csv");
                    write_batch_csv(&batch, &meta, fs::File::create(&path)?)?;
                    eprintln!("wrote {}", path.display());
                    Ok(())
                }
                None => write_batch_csv(&batch, &meta, std::io::stdout().lock()),
            }
        }
        Command::Estimate {
            input,
            model,
            n,
            grid,
            c,
            threshold,
            replications,
            emit_csv,
        } => {
            let mut rows = Vec::new();
            if let Some(path) = input {
                let (batch, meta) = read_batch_csv(fs::File::open(path)?)?;
                for r in estimate_batch(&batch, &meta, *c, threshold, seed)? {
                    rows.push((0, r));
                }
            } else {
                for rep in 0..*replications {
                    let rep_seed = StreamKey::root(seed).child(rep as u64).seed();
                    let (batch, meta) = model.simulate(*n, *grid, rep_seed)?;
                    for r in estimate_batch(&batch, &meta, *c, threshold, rep_seed)? {
                        rows.push((rep, r));
                    }
                }
            }
            if let Some(path) = emit_csv {
                append_csv(path, &rows)?;
            }
            let reports: Vec<&EstimateReport> = rows.iter().map(|(_, r)| r).collect();
            match cli.format {
                Format::Json => emit(&reports, Format::Json),
                Format::Csv => write_rows(std::io::stdout().lock(), true, &rows),
            }
        }
        Command::Lan { overrides } => {
            run_config(cli, &experiment_config(cli, LAN_BASE, overrides)?)
        }
        Command::Experiment { overrides } => {
            if cli.config.is_none() && overrides.is_empty() {
                return Err(Error::Config("experiment needs --config or --set".into()));
            }
            run_config(cli, &experiment_config(cli, "", overrides)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
