//! Signal generation and the prediction/check experiments.
//!
//! Every generated signal starts from rest. Random draws come from fixed
//! streams of the configured seed, one per signal, so that changing one
//! signal length does not perturb the others.

use anyhow::Result;
use lpvfl_core::analysis::{
    check_pe, check_pe_with_output, minimality_report, MinimalityReport, PeReport, RankTestOptions,
};
use lpvfl_core::ddpred::{predict, DataRecord, PredictOptions, PredictionResult, Query};
use lpvfl_core::random::{self, uniform_trajectory};
use lpvfl_core::simulation::{simulate_io, simulate_ss};
use lpvfl_core::Trajectory;
use nalgebra::DVector;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::formats::{Model, TrajectoryJson};

pub const STREAM_DATA_U: u64 = 0;
pub const STREAM_DATA_P: u64 = 1;
pub const STREAM_QUERY_U: u64 = 2;
pub const STREAM_QUERY_P: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Streams {
    pub data_u: u64,
    pub data_p: u64,
    pub query_u: u64,
    pub query_p: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RngInfo {
    pub generator: &'static str,
    pub seed: u64,
    pub streams: Streams,
    pub uniform: &'static str,
}

impl RngInfo {
    pub fn new(seed: u64) -> Self {
        Self {
            generator: random::GENERATOR,
            seed,
            streams: Streams {
                data_u: STREAM_DATA_U,
                data_p: STREAM_DATA_P,
                query_u: STREAM_QUERY_U,
                query_p: STREAM_QUERY_P,
            },
            uniform: "lo + (hi - lo) * (next_u64 >> 11) * 2^-53",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: RngInfo,
}

impl Metadata {
    pub fn new(seed: u64) -> Self {
        Self {
            tool: "lpvfl",
            version: env!("CARGO_PKG_VERSION"),
            rng: RngInfo::new(seed),
        }
    }
}

/// Simulated `(u, p, y)` over `[from, to]`, and the state for SS models.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub u: Trajectory,
    pub p: Trajectory,
    pub y: Trajectory,
    pub x: Option<Trajectory>,
}

/// Simulates `model` from rest with uniform `u` and `p` drawn from the given
/// streams, returning the samples over `[from, to]`.
pub fn simulate_from_rest(
    model: &Model,
    cfg: &ExperimentConfig,
    streams: (u64, u64),
    from: i64,
    to: i64,
) -> Result<Run> {
    let len = (to - from + 1) as usize;
    let mut rng_u = random::stream(cfg.seed, streams.0);
    let mut rng_p = random::stream(cfg.seed, streams.1);
    let u_box = cfg.input_bounds(model.n_u());
    let p_box = cfg.scheduling_bounds(model.n_p());
    match model {
        Model::Io(m) => {
            let lag = m.n_a() as i64;
            let u = uniform_trajectory(&mut rng_u, &u_box, from - lag, len + lag as usize)?;
            let p = uniform_trajectory(&mut rng_p, &p_box, from - lag, len + lag as usize)?;
            let y0 = Trajectory::zeros(m.n_y(), from - lag, lag as usize)?;
            let y = simulate_io(m, &u, &p, &y0)?;
            Ok(Run {
                u: u.window(from, to)?,
                p: p.window(from, to)?,
                y: y.window(from, to)?,
                x: None,
            })
        }
        Model::Ss(m) => {
            let (lo, hi) = m.window().unwrap_or((0, 0));
            let (lo, hi) = (lo.min(0) as i64, hi.max(0) as i64);
            let u = uniform_trajectory(&mut rng_u, &u_box, from, len)?;
            let p = uniform_trajectory(&mut rng_p, &p_box, from + lo, len + (hi - lo) as usize)?;
            let sim = simulate_ss(m, &DVector::zeros(m.n_x()), &u, &p)?;
            Ok(Run {
                u,
                p: p.window(from, to)?,
                y: sim.y,
                x: Some(sim.x),
            })
        }
    }
}

/// Data over `[1, T]`.
pub fn generate_data(
    model: &Model,
    cfg: &ExperimentConfig,
) -> Result<(DataRecord, Option<Trajectory>)> {
    let run = simulate_from_rest(model, cfg, (STREAM_DATA_U, STREAM_DATA_P), 1, cfg.t as i64)?;
    let record = DataRecord::new(run.u, run.p, run.y)?.with_provenance(format!(
        "simulated {} seed {} T {}",
        model.kind(),
        cfg.seed,
        cfg.t
    ));
    Ok((record, run.x))
}

/// Query with initial window `[1, T_ini]`, continuation
/// `[T_ini + 1, T_ini + T_r]` and the true continuation output.
pub fn generate_query(model: &Model, cfg: &ExperimentConfig) -> Result<(Query, Trajectory)> {
    let (ti, tr) = (cfg.t_ini as i64, cfg.t_r as i64);
    let run = simulate_from_rest(
        model,
        cfg,
        (STREAM_QUERY_U, STREAM_QUERY_P),
        1 - cfg.burn_in as i64,
        ti + tr,
    )?;
    let q = Query {
        u_ini: run.u.window(1, ti)?,
        p_ini: run.p.window(1, ti)?,
        y_ini: run.y.window(1, ti)?,
        u_r: run.u.window(ti + 1, ti + tr)?,
        p_r: run.p.window(ti + 1, ti + tr)?,
    };
    Ok((q, run.y.window(ti + 1, ti + tr)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionJson {
    pub verdict: String,
    pub route: String,
    pub depth: usize,
    pub annihilator_count: usize,
    pub residual: f64,
    pub output_uniqueness_margin: f64,
    pub pe_margin: f64,
    pub determinacy_margin: f64,
    pub y_r: TrajectoryJson,
    pub g: Option<Vec<f64>>,
    pub max_abs_error: Option<f64>,
    pub warnings: Vec<String>,
}

impl PredictionJson {
    pub fn new(r: &PredictionResult, truth: Option<&Trajectory>) -> Self {
        let max_abs_error = truth.map(|t| (r.y_r.vec() - t.vec()).amax());
        Self {
            verdict: r.verdict.to_string(),
            route: r.route.to_string(),
            depth: r.depth,
            annihilator_count: r.annihilator_count,
            residual: r.residual,
            output_uniqueness_margin: r.output_uniqueness_margin,
            pe_margin: r.pe_margin,
            determinacy_margin: r.determinacy_margin,
            y_r: TrajectoryJson::from_trajectory(&r.y_r),
            g: r.g.clone(),
            max_abs_error,
            warnings: r.warnings.clone(),
        }
    }
}

pub fn predict_options(cfg: &ExperimentConfig, model: Option<&Model>) -> PredictOptions {
    PredictOptions {
        method: cfg.method,
        tol: cfg.tol,
        margin_tol: cfg.margin_tol,
        n_x: model.map(Model::order),
        ..Default::default()
    }
}

pub fn run_prediction(
    data: &DataRecord,
    q: &Query,
    cfg: &ExperimentConfig,
    model: Option<&Model>,
) -> Result<PredictionResult> {
    Ok(predict(data, q, &predict_options(cfg, model))?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagReport {
    pub n_a: usize,
    pub n_b: usize,
    /// For IO models the lag equals `n_a`.
    pub lag: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub order_l: usize,
    /// PE verdict at order `L`.
    pub pe: bool,
    pub pe_report: PeReport,
    /// PE at order `L + n`, `n` the model order, when the data is long
    /// enough to test it.
    pub pe_theorem_order: Option<PeReport>,
    pub minimality: Option<MinimalityReport>,
    pub lag: Option<LagReport>,
}

pub fn run_check(data: &DataRecord, model: &Model, cfg: &ExperimentConfig) -> Result<CheckReport> {
    let l = cfg.window_len().min(data.len());
    let n = model.order();
    let pe_report = check_pe_with_output(
        &data.u,
        &data.y,
        &data.p,
        l,
        n,
        lpvfl_core::linalg::RANK_TOL,
    )?;
    let pe_theorem_order = if l + n <= data.len() {
        Some(check_pe(
            &data.u,
            &data.p,
            l + n,
            lpvfl_core::linalg::RANK_TOL,
        )?)
    } else {
        None
    };
    let (minimality, lag) = match model {
        Model::Ss(m) => {
            let opts = RankTestOptions {
                seed: cfg.seed,
                bounds: Some(cfg.scheduling_bounds(m.n_p())),
                ..Default::default()
            };
            (Some(minimality_report(m, &opts)?), None)
        }
        Model::Io(m) => (
            None,
            Some(LagReport {
                n_a: m.n_a(),
                n_b: m.n_b(),
                lag: m.n_a(),
            }),
        ),
    };
    Ok(CheckReport {
        order_l: l,
        pe: pe_report.verdict,
        pe_report,
        pe_theorem_order,
        minimality,
        lag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpvfl_core::{example_verhoek, Verdict};

    #[test]
    fn generated_experiment_predicts_exactly() {
        let model = Model::Io(example_verhoek());
        let cfg = ExperimentConfig::default();
        let (data, x) = generate_data(&model, &cfg).unwrap();
        assert!(x.is_none());
        assert_eq!((data.u.t_start(), data.len()), (1, 40));
        let (q, truth) = generate_query(&model, &cfg).unwrap();
        let r = run_prediction(&data, &q, &cfg, Some(&model)).unwrap();
        assert_eq!(r.verdict, Verdict::Ok);
        let j = PredictionJson::new(&r, Some(&truth));
        assert!(j.max_abs_error.unwrap() < 1e-8);
    }

    #[test]
    fn zero_input_box_gives_zero_output() {
        let model = Model::Io(example_verhoek());
        let cfg = ExperimentConfig {
            input_box: [0.0, 0.0],
            ..Default::default()
        };
        let (data, _) = generate_data(&model, &cfg).unwrap();
        assert!(data.y.as_flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn check_reports_pe_and_lag() {
        let model = Model::Io(example_verhoek());
        let cfg = ExperimentConfig::default();
        let (data, _) = generate_data(&model, &cfg).unwrap();
        let rep = run_check(&data, &model, &cfg).unwrap();
        assert!(rep.pe);
        assert_eq!(rep.lag.as_ref().map(|l| l.lag), Some(2));
        assert!(rep.minimality.is_none());
    }
}
