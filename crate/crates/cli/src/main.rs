use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use windcast::baseline::{fit_baseline, BaselineModel};
use windcast::config::{parse_timestamp, LoadedData, RunConfig};
use windcast::design::{mean_column_count, variance_column_count, ColumnCatalog};
use windcast::evaluation::{evaluate, BaselineForecaster, Forecaster, ModelForecaster, RollingForecaster};
use windcast::forecast::{bootstrap_forecast, write_forecast_csv};
use windcast::irwls::{fit, residual_diagnostics, FittedModel};
use windcast::synthetic::{default_start, to_observations, SyntheticSpec};
use windcast::timeseries::{write_observations, Component, StateMatrix, STEP_MINUTES};
use windcast::{Error, ErrorKind, Result};

const DEFAULT_OUT: &str = "windcast-out";

/// Like `println!`, but a closed stdout is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "windcast", version, about = "Sparse threshold VAR wind forecasting")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model on the in-sample part of the data.
    Fit(Common),
    /// Point and bootstrap forecasts from one origin.
    Forecast {
        #[command(flatten)]
        common: Common,
        /// Fitted model JSON.
        #[arg(long)]
        model: PathBuf,
        /// Origin timestamp (RFC 3339); defaults to the last in-sample row.
        #[arg(long)]
        origin: Option<String>,
    },
    /// Out-of-sample evaluation against the benchmarks.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Fitted models, as `path` or `name=path`. When none is given the
        /// model is fitted on the in-sample part first.
        #[arg(long = "model")]
        models: Vec<String>,
    },
    /// Generate synthetic data from the `synthetic` spec of the config.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// A bare synthetic spec JSON instead of a run config.
        #[arg(long, conflicts_with = "config")]
        spec: Option<PathBuf>,
    },
    /// Summarize a fitted model or the column catalog of a config.
    Inspect {
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Also write the column catalogs into the output directory.
        #[arg(long)]
        catalog: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set forecast.n_paths=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides the config and WINDCAST_OUT).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output_dir
        .clone()
        .or_else(|| std::env::var_os("WINDCAST_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(dir)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn echo_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_text(&dir.join("config.json"), &(cfg.to_json()? + "\n"))
}

/// In-sample rows of the loaded data.
fn in_sample(cfg: &RunConfig, data: &LoadedData) -> Result<(StateMatrix, usize)> {
    let split = cfg.split_row(data)?;
    Ok((data.states.slice(0..split), split))
}

fn fit_and_write(cfg: &RunConfig, data: &LoadedData, dir: &Path) -> Result<(FittedModel, String)> {
    let (train, _) = in_sample(cfg, data)?;
    log::info!("fitting on {} in-sample rows", train.len());
    let model = fit(&train, &cfg.fit)?;
    let json = model.to_json()?;
    write_text(&dir.join("model.json"), &json)?;
    let hash = sha256_hex(json.as_bytes());
    write_text(&dir.join("model.sha256"), &format!("{hash}\n"))?;

    let mut coef = csv_writer(&dir.join("coefficients.csv"))?;
    coef.write_record(["equation", "part", "column", "family", "source", "lag", "i1", "i2", "alpha", "coefficient"])?;
    for eq in &model.equations {
        for (part, terms) in [("mean", &eq.mean_terms), ("variance", &eq.variance_terms)] {
            for t in terms {
                let (i1, i2) = t
                    .spec
                    .basis
                    .map(|b| {
                        let (i, j) = b.indices();
                        (i.to_string(), j.to_string())
                    })
                    .unwrap_or_default();
                coef.write_record([
                    eq.component.name().to_string(),
                    part.to_string(),
                    (t.column + 1).to_string(),
                    t.spec.family.name().to_string(),
                    t.spec.source.map_or(String::new(), |s| Component::from_index(s).name().to_string()),
                    t.spec.lag.map_or(String::new(), |l| l.to_string()),
                    i1,
                    i2,
                    t.spec.alpha.map_or(String::new(), |a| a.to_string()),
                    t.coefficient.to_string(),
                ])?;
            }
        }
    }
    coef.flush().map_err(|e| io_err(dir, e))?;

    let mut trace = csv_writer(&dir.join("trace.csv"))?;
    trace.write_record(["iteration", "delta", "equation", "mean_lambda", "variance_lambda", "mean_df", "variance_df", "weight_sum", "inverse_variance_sum"])?;
    for it in &model.trace {
        for c in Component::ALL {
            let m = c.index();
            trace.write_record([
                it.iteration.to_string(),
                it.delta.to_string(),
                c.name().to_string(),
                it.mean_lambda[m].to_string(),
                it.variance_lambda[m].to_string(),
                it.mean_df[m].to_string(),
                it.variance_df[m].to_string(),
                it.weight_sum[m].to_string(),
                it.inverse_variance_sum[m].to_string(),
            ])?;
        }
    }
    trace.flush().map_err(|e| io_err(dir, e))?;
    write_json(&dir.join("diagnostics.json"), &residual_diagnostics(&model))?;
    Ok((model, hash))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn cmd_fit(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    echo_config(&dir, &cfg)?;
    let data = cfg.load_data()?;
    let (model, hash) = fit_and_write(&cfg, &data, &dir)?;
    say!("model {hash}");
    say!(
        "{} iterations, last delta {:.3e}, {} mean and {} variance terms",
        model.iterations,
        model.last_delta(),
        model.equations.iter().map(|e| e.mean_terms.len()).sum::<usize>(),
        model.equations.iter().map(|e| e.variance_terms.len()).sum::<usize>(),
    );
    say!("outputs in {}", dir.display());
    if !model.converged {
        let e = Error::NotConverged {
            iterations: model.iterations,
            last_delta: model.last_delta(),
        };
        eprintln!("error: {e}");
        return Ok(exit_code(e.kind()));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct ForecastBundle<'a> {
    model_sha256: String,
    origin: String,
    #[serde(flatten)]
    result: &'a windcast::forecast::ForecastResult,
}

fn cmd_forecast(common: &Common, model_path: &Path, origin: Option<&str>) -> Result<ExitCode> {
    let cfg = common.load()?;
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    echo_config(&dir, &cfg)?;
    let model_text = std::fs::read_to_string(model_path).map_err(|e| io_err(model_path, e))?;
    let model = FittedModel::from_json(&model_text)?;
    let data = cfg.load_data()?;
    let row = match origin {
        Some(s) => {
            let ts = parse_timestamp(s)?;
            data.timestamps
                .iter()
                .position(|t| *t == ts)
                .ok_or_else(|| Error::OutOfRange(format!("origin {s} is not a timestamp of the data")))?
        }
        None => cfg.split_row(&data)? - 1,
    };
    if row + 1 < model.required_history() {
        return Err(Error::OutOfRange(format!(
            "origin row {row} leaves less than the {} rows of history the model needs",
            model.required_history()
        )));
    }
    let history = data.states.history_through(row);
    let result = bootstrap_forecast(&model, &history, &cfg.forecast)?;
    let path = dir.join("forecast.csv");
    let f = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    write_forecast_csv(&result, f)?;
    let bundle = ForecastBundle {
        model_sha256: sha256_hex(model_text.as_bytes()),
        origin: data.timestamps[row].to_rfc3339(),
        result: &result,
    };
    write_json(&dir.join("forecast.json"), &bundle)?;
    say!("forecast from {} for {} steps in {}", data.timestamps[row].to_rfc3339(), cfg.forecast.horizon, dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(common: &Common, model_args: &[String]) -> Result<ExitCode> {
    let cfg = common.load()?;
    cfg.validate()?;
    let dir = output_dir(&cfg)?;
    echo_config(&dir, &cfg)?;
    let data = cfg.load_data()?;
    let (train, split) = in_sample(&cfg, &data)?;
    let split_index = data.states.time_index(split);

    let mut models: Vec<(String, FittedModel)> = Vec::new();
    for arg in model_args {
        let (name, path) = match arg.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(arg);
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
                let name = if stem == "model" { "tvarx".to_string() } else { stem.to_string() };
                (name, p)
            }
        };
        let model = FittedModel::load(&path)?;
        let last = model.start_index + model.n_rows as i64 - 1;
        if last >= split_index {
            return Err(Error::Config(format!(
                "model {name} was fitted on rows up to time index {last}, inside the out-of-sample part starting at {split_index}"
            )));
        }
        models.push((name, model));
    }
    if models.is_empty() && !cfg.rolling {
        let (model, hash) = fit_and_write(&cfg, &data, &dir)?;
        say!("fitted model {hash}");
        models.push(("tvarx".to_string(), model));
    }

    let baselines: Vec<BaselineModel> = cfg
        .baselines
        .kinds
        .iter()
        .map(|&k| fit_baseline(k, &train, cfg.baselines.max_order(k)))
        .collect::<Result<_>>()?;
    write_json(&dir.join("baselines.json"), &baselines)?;

    let model_fc: Vec<ModelForecaster> = models
        .iter()
        .map(|(name, m)| ModelForecaster {
            name: name.clone(),
            model: m,
            forecast: cfg.forecast.clone(),
        })
        .collect();
    let rolling = cfg.rolling.then(|| RollingForecaster {
        name: "tvarx-rolling".to_string(),
        fit: cfg.fit.clone(),
        forecast: cfg.forecast.clone(),
    });
    let base_fc: Vec<BaselineForecaster> = baselines
        .iter()
        .map(|b| BaselineForecaster {
            name: b.kind.name().to_string(),
            model: b,
        })
        .collect();
    let mut all: Vec<&dyn Forecaster> = Vec::new();
    all.extend(model_fc.iter().map(|f| f as &dyn Forecaster));
    if let Some(r) = &rolling {
        all.push(r);
    }
    all.extend(base_fc.iter().map(|f| f as &dyn Forecaster));

    let run = evaluate(&data.states, split, &all, &cfg.evaluation)?;
    run.write_outputs(&dir)?;
    say!("evaluated {} models at {} origins; tables in {}", all.len(), run.origins.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(common: &Common, spec_path: Option<&Path>) -> Result<ExitCode> {
    let mut cfg = common.load()?;
    if let Some(p) = spec_path {
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        let spec: SyntheticSpec =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        cfg.synthetic = Some(spec);
    }
    let spec = cfg
        .synthetic
        .clone()
        .ok_or_else(|| Error::Config("simulate needs a `synthetic` spec".to_string()))?;
    spec.validate()?;
    let dir = output_dir(&cfg)?;
    echo_config(&dir, &cfg)?;
    let sim = spec.simulate()?;
    let start = default_start() + chrono::Duration::minutes(STEP_MINUTES * spec.start_index);
    write_observations(&to_observations(&sim.states, start)?, &dir.join("data.csv"))?;

    let mut states = csv_writer(&dir.join("states.csv"))?;
    let mut header = vec!["row".to_string()];
    header.extend(Component::ALL.iter().map(|c| c.name().to_string()));
    header.extend(Component::ALL.iter().map(|c| format!("sigma_{}", c.name())));
    states.write_record(&header)?;
    for (t, (y, s)) in sim.states.rows().iter().zip(&sim.sigma).enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(y.iter().map(|v| v.to_string()));
        rec.extend(s.iter().map(|v| v.to_string()));
        states.write_record(&rec)?;
    }
    states.flush().map_err(|e| io_err(&dir, e))?;
    write_json(&dir.join("truth.json"), &spec)?;
    write_text(&dir.join("truth_model.json"), &spec.truth_model(&sim)?.to_json()?)?;
    say!("simulated {} rows into {}", sim.states.len(), dir.display());
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct EquationSummary {
    equation: &'static str,
    mean_columns: usize,
    variance_columns: usize,
    mean_terms: usize,
    variance_terms: usize,
    mean_lambda: f64,
    variance_lambda: f64,
}

#[derive(serde::Serialize)]
struct ModelSummary {
    sha256: String,
    converged: bool,
    iterations: usize,
    last_delta: f64,
    training_rows: usize,
    equations: Vec<EquationSummary>,
}

#[derive(serde::Serialize)]
struct CatalogSummary {
    equation: &'static str,
    mean_columns: usize,
    variance_columns: usize,
}

fn cmd_inspect(common: &Common, model_path: Option<&Path>, catalog: bool) -> Result<ExitCode> {
    if let Some(p) = model_path {
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        let model = FittedModel::from_json(&text)?;
        let summary = ModelSummary {
            sha256: sha256_hex(text.as_bytes()),
            converged: model.converged,
            iterations: model.iterations,
            last_delta: model.last_delta(),
            training_rows: model.n_rows,
            equations: model
                .equations
                .iter()
                .map(|e| EquationSummary {
                    equation: e.component.name(),
                    mean_columns: e.mean_columns,
                    variance_columns: e.variance_columns,
                    mean_terms: e.mean_terms.len(),
                    variance_terms: e.variance_terms.len(),
                    mean_lambda: e.mean_lambda,
                    variance_lambda: e.variance_lambda,
                })
                .collect(),
        };
        say!("{}", serde_json::to_string_pretty(&summary)?);
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = common.load()?;
    cfg.fit.validate()?;
    let f = &cfg.fit;
    let rows: Vec<CatalogSummary> = Component::ALL
        .iter()
        .map(|c| CatalogSummary {
            equation: c.name(),
            mean_columns: mean_column_count(c.index(), &f.lags, &f.basis, &f.mask),
            variance_columns: variance_column_count(&f.lags, &f.basis),
        })
        .collect();
    say!("{}", serde_json::to_string_pretty(&rows)?);
    if catalog {
        let dir = output_dir(&cfg)?;
        for c in Component::ALL {
            ColumnCatalog::mean(c.index(), &f.lags, &f.basis, &f.mask)
                .write_csv_file(&dir.join(format!("catalog_mean_{}.csv", c.name())))?;
            ColumnCatalog::variance(c.index(), &f.lags, &f.basis)
                .write_csv_file(&dir.join(format!("catalog_variance_{}.csv", c.name())))?;
        }
        say!("catalogs in {}", dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(kind: ErrorKind) -> ExitCode {
    ExitCode::from(match kind {
        ErrorKind::Data => 2,
        ErrorKind::Convergence => 3,
        ErrorKind::Config => 4,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Forecast { common, model, origin } => cmd_forecast(common, model, origin.as_deref()),
        Command::Evaluate { common, models } => cmd_evaluate(common, models),
        Command::Simulate { common, spec } => cmd_simulate(common, spec.as_deref()),
        Command::Inspect { model, common, catalog } => cmd_inspect(common, model.as_deref(), *catalog),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}
