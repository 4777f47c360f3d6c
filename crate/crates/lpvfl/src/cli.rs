//! The `lpvfl` command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numeric
//! failure, 4 ambiguous prediction, 5 infeasible prediction. A one-line JSON
//! summary goes to stdout and a human-readable report to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lpvfl_core::ddpred::{DataRecord, Query, Verdict};
use lpvfl_core::{PredictMethod, Trajectory};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Format};
use crate::csvio::{channel_names, read_trajectory, trajectory_csv, write_atomic};
use crate::experiment::{
    generate_data, generate_query, run_check, run_prediction, CheckReport, Metadata, PredictionJson,
};
use crate::formats::{json_bytes, load_model, read_json, DataBundle, Model, TrajectoryJson};

#[derive(Debug, Parser)]
#[command(
    name = "lpvfl",
    version,
    about = "Data-driven simulation of LPV systems from one measured trajectory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a model from rest with random input and scheduling.
    Simulate(Args),
    /// Predict the output continuation of a query from data.
    Predict(Args),
    /// Report persistence of excitation and structural properties.
    Check(Args),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    HankelSpan,
    Annihilator,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON experiment configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model JSON file or `builtin:verhoek`.
    #[arg(long)]
    model: Option<String>,
    /// Directory with u.csv, p.csv, y.csv or data.json; generated when absent.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory with u_ini.csv, p_ini.csv, y_ini.csv, u_r.csv, p_r.csv and
    /// optionally y_r_true.csv; generated when absent.
    #[arg(long)]
    query_dir: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long = "T-ini")]
    t_ini: Option<usize>,
    #[arg(long = "T-r")]
    t_r: Option<usize>,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    margin_tol: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Numeric(anyhow::Error),
    Ambiguous,
    Infeasible,
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Ambiguous => 4,
            Failure::Infeasible => 5,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config_error",
            Failure::Numeric(_) => "numeric_failure",
            Failure::Ambiguous => "ambiguous",
            Failure::Infeasible => "infeasible",
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        use lpvfl_core::Error as E;
        match e.downcast_ref::<E>() {
            Some(E::RankDeficientObservability { .. } | E::InconsistentTrajectory { .. }) => {
                Failure::Numeric(e)
            }
            Some(E::Ambiguous { .. }) => Failure::Ambiguous,
            Some(E::Infeasible { .. }) => Failure::Infeasible,
            _ => Failure::Config(e),
        }
    }
}

impl From<lpvfl_core::Error> for Failure {
    fn from(e: lpvfl_core::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

struct Outcome {
    summary: serde_json::Value,
    failure: Option<Failure>,
}

fn resolve_config(args: &Args) -> anyhow::Result<(ExperimentConfig, bool)> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let model_explicit = args.model.is_some() || args.config.is_some();
    if let Some(m) = &args.model {
        cfg.model = m.clone();
    }
    macro_rules! set {
        ($($field:ident),*) => {$( if let Some(v) = args.$field { cfg.$field = v; } )*};
    }
    set!(seed, t, t_ini, t_r, tol, margin_tol, burn_in);
    if args.l.is_some() {
        cfg.l = args.l;
    }
    if let Some(m) = args.method {
        cfg.method = match m {
            MethodArg::Auto => PredictMethod::Auto,
            MethodArg::HankelSpan => PredictMethod::HankelSpan,
            MethodArg::Annihilator => PredictMethod::Annihilator,
        };
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    Ok((cfg, model_explicit))
}

fn load_data(dir: &Path) -> anyhow::Result<DataRecord> {
    let bundle = dir.join("data.json");
    if bundle.exists() {
        return read_json::<DataBundle>(&bundle)?.to_record();
    }
    let read = |name: &str| read_trajectory(&dir.join(name));
    let record = DataRecord::new(read("u.csv")?, read("p.csv")?, read("y.csv")?)
        .context("data files disagree")?;
    Ok(record.with_provenance(dir.display().to_string()))
}

fn load_query(dir: &Path) -> anyhow::Result<(Query, Option<Trajectory>)> {
    let read = |name: &str| read_trajectory(&dir.join(name));
    let q = Query {
        u_ini: read("u_ini.csv")?,
        p_ini: read("p_ini.csv")?,
        y_ini: read("y_ini.csv")?,
        u_r: read("u_r.csv")?,
        p_r: read("p_r.csv")?,
    };
    let truth_path = dir.join("y_r_true.csv");
    let truth = if truth_path.exists() {
        Some(read_trajectory(&truth_path)?)
    } else {
        None
    };
    Ok((q, truth))
}

/// Collects artifacts and writes them only once everything succeeded.
struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn csv(&mut self, name: &str, traj: &Trajectory, prefix: &str) -> anyhow::Result<()> {
        let bytes = trajectory_csv(traj, &channel_names(prefix, traj.dim()))?;
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.files.push((name.into(), json_bytes(value)?));
        Ok(())
    }

    fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    fn write(self) -> anyhow::Result<()> {
        for (name, bytes) in &self.files {
            write_atomic(&self.dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn cmd_simulate(args: &Args, err: &mut dyn Write) -> Result<Outcome, Failure> {
    let (cfg, _) = resolve_config(args)?;
    let model = load_model(&cfg.model)?;
    cfg.validate(&model)?;
    let (data, x) = generate_data(&model, &cfg)?;
    let mut out = Artifacts::new(&args.out_dir);
    match cfg.format {
        Format::Csv => {
            out.csv("u.csv", &data.u, "u")?;
            out.csv("p.csv", &data.p, "p")?;
            out.csv("y.csv", &data.y, "y")?;
            if let Some(x) = &x {
                out.csv("x.csv", x, "x")?;
            }
        }
        Format::Json => out.json("data.json", &DataBundle::from_record(&data))?,
    }
    out.json(
        "meta.json",
        &json!({
            "metadata": Metadata::new(cfg.seed),
            "config": cfg,
            "model_kind": model.kind(),
            "provenance": data.provenance,
        }),
    )?;
    let files = out.names();
    out.write()?;
    let _ = writeln!(
        err,
        "simulated {} model {} over [1, {}] with seed {}; wrote {} to {}",
        model.kind(),
        cfg.model,
        cfg.t,
        cfg.seed,
        files.join(", "),
        args.out_dir.display()
    );
    Ok(Outcome {
        summary: json!({"command": "simulate", "status": "ok", "exit_code": 0, "T": cfg.t, "seed": cfg.seed, "files": files, "out_dir": args.out_dir}),
        failure: None,
    })
}

fn plot_csv(truth: &Trajectory, pred: &Trajectory) -> anyhow::Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(channel_names("y_true", truth.dim()));
    header.extend(channel_names("y_pred", pred.dim()));
    wtr.write_record(&header)?;
    for (t, s) in truth.iter() {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|v| v.to_string()));
        row.extend(pred.at(t)?.iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.into_inner().map_err(|e| anyhow!(e.into_error()))
}

fn cmd_predict(args: &Args, err: &mut dyn Write) -> Result<Outcome, Failure> {
    let (cfg, model_explicit) = resolve_config(args)?;
    let needs_model = model_explicit || args.data_dir.is_none() || args.query_dir.is_none();
    let model = if needs_model {
        Some(load_model(&cfg.model)?)
    } else {
        None
    };
    if let Some(m) = &model {
        cfg.validate(m)?;
    }
    let data = match &args.data_dir {
        Some(dir) => load_data(dir)?,
        None => generate_data(model.as_ref().expect("model loaded"), &cfg)?.0,
    };
    let (query, truth, generated) = match &args.query_dir {
        Some(dir) => {
            let (q, t) = load_query(dir)?;
            (q, t, false)
        }
        None => {
            let (q, t) = generate_query(model.as_ref().expect("model loaded"), &cfg)?;
            (q, Some(t), true)
        }
    };
    let l = query.t_ini() + query.t_r();
    if let Some(cl) = cfg.l {
        if cl != l {
            return Err(Failure::Config(anyhow!(
                "L = {cl} differs from T_ini + T_r = {l} of the query"
            )));
        }
    }
    let result = run_prediction(&data, &query, &cfg, model.as_ref())?;
    let pj = PredictionJson::new(&result, truth.as_ref());

    let mut out = Artifacts::new(&args.out_dir);
    out.json(
        "prediction.json",
        &json!({
            "metadata": Metadata::new(cfg.seed),
            "config": cfg,
            "data_provenance": data.provenance,
            "query": {
                "u_ini": TrajectoryJson::from_trajectory(&query.u_ini),
                "p_ini": TrajectoryJson::from_trajectory(&query.p_ini),
                "y_ini": TrajectoryJson::from_trajectory(&query.y_ini),
                "u_r": TrajectoryJson::from_trajectory(&query.u_r),
                "p_r": TrajectoryJson::from_trajectory(&query.p_r),
            },
            "prediction": pj,
        }),
    )?;
    if cfg.format == Format::Csv {
        out.csv("y_r.csv", &result.y_r, "y")?;
        if let Some(t) = &truth {
            out.files
                .push(("plot.csv".into(), plot_csv(t, &result.y_r)?));
        }
        if generated {
            out.csv("u_ini.csv", &query.u_ini, "u")?;
            out.csv("p_ini.csv", &query.p_ini, "p")?;
            out.csv("y_ini.csv", &query.y_ini, "y")?;
            out.csv("u_r.csv", &query.u_r, "u")?;
            out.csv("p_r.csv", &query.p_r, "p")?;
            if let Some(t) = &truth {
                out.csv("y_r_true.csv", t, "y")?;
            }
        }
    }
    let files = out.names();
    out.write()?;

    let _ = writeln!(
        err,
        "prediction over [{}, {}]: {} via {} route (depth {}, {} annihilators)",
        result.y_r.t_start(),
        result.y_r.t_end(),
        result.verdict,
        result.route,
        result.depth,
        result.annihilator_count
    );
    let _ = writeln!(
        err,
        "  residual {:.3e}, uniqueness margin {:.3e} (excitation {:.3e}, determinacy {:.3e})",
        result.residual,
        result.output_uniqueness_margin,
        result.pe_margin,
        result.determinacy_margin
    );
    if let Some(e) = pj.max_abs_error {
        let _ = writeln!(err, "  max abs error against the true continuation {e:.3e}");
    }
    for w in &result.warnings {
        let _ = writeln!(err, "  warning: {w}");
    }
    let failure = match result.verdict {
        Verdict::Ok => None,
        Verdict::Ambiguous => Some(Failure::Ambiguous),
        Verdict::Infeasible => Some(Failure::Infeasible),
    };
    let code = failure.as_ref().map_or(0, Failure::code);
    Ok(Outcome {
        summary: json!({
            "command": "predict",
            "status": result.verdict.to_string(),
            "exit_code": code,
            "route": result.route.to_string(),
            "depth": result.depth,
            "residual": result.residual,
            "margin": result.output_uniqueness_margin,
            "max_abs_error": pj.max_abs_error,
            "files": files,
            "out_dir": args.out_dir,
        }),
        failure,
    })
}

fn cmd_check(args: &Args, err: &mut dyn Write) -> Result<Outcome, Failure> {
    let (cfg, _) = resolve_config(args)?;
    let model: Model = load_model(&cfg.model)?;
    cfg.validate(&model)?;
    let data = match &args.data_dir {
        Some(dir) => load_data(dir)?,
        None => generate_data(&model, &cfg)?.0,
    };
    let report: CheckReport = run_check(&data, &model, &cfg)?;
    let mut out = Artifacts::new(&args.out_dir);
    out.json(
        "check.json",
        &json!({"metadata": Metadata::new(cfg.seed), "config": cfg, "report": report}),
    )?;
    let files = out.names();
    out.write()?;

    let pe = &report.pe_report;
    let _ = writeln!(
        err,
        "excitation of order {}: rank {} of {} required -> {}",
        pe.order_l,
        pe.extended_input_rank,
        pe.required,
        if pe.verdict { "pass" } else { "fail" }
    );
    if let Some(o) = &pe.output {
        let _ = writeln!(
            err,
            "  input-output rank {} (expected {} for n = {})",
            o.extended_io_rank, o.required, o.n_x
        );
    }
    if let Some(m) = &report.minimality {
        let _ = writeln!(
            err,
            "structural observability {} (rank {}), reachability {} (rank {}); minimal: {}",
            m.observability.verdict,
            m.observability.tested_rank,
            m.reachability.verdict,
            m.reachability.tested_rank,
            m.minimal
        );
    }
    if let Some(l) = &report.lag {
        let _ = writeln!(
            err,
            "IO model: n_a = {}, n_b = {}, lag {}",
            l.n_a, l.n_b, l.lag
        );
    }
    Ok(Outcome {
        summary: json!({
            "command": "check",
            "status": "ok",
            "exit_code": 0,
            "pe": report.pe,
            "order_L": report.order_l,
            "extended_input_rank": pe.extended_input_rank,
            "minimal": report.minimality.as_ref().map(|m| m.minimal),
            "lag": report.lag.as_ref().map(|l| l.lag),
            "files": files,
        }),
        failure: None,
    })
}

/// Runs the command line with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let (name, result) = match &cli.command {
        Command::Simulate(a) => ("simulate", cmd_simulate(a, err)),
        Command::Predict(a) => ("predict", cmd_predict(a, err)),
        Command::Check(a) => ("check", cmd_check(a, err)),
    };
    let (summary, failure) = match result {
        Ok(o) => (o.summary, o.failure),
        Err(f) => {
            let message = match &f {
                Failure::Config(e) | Failure::Numeric(e) => format!("{e:#}"),
                other => other.status().to_string(),
            };
            let _ = writeln!(err, "error: {message}");
            let summary = json!({"command": name, "status": f.status(), "exit_code": f.code(), "message": message});
            (summary, Some(f))
        }
    };
    let _ = writeln!(out, "{summary}");
    failure.map_or(0, |f| f.code())
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
