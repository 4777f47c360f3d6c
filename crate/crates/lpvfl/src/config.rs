//! Experiment configuration: JSON file values overridden by flags.

use std::path::Path;

use anyhow::{bail, Result};
use lpvfl_core::PredictMethod;
use serde::{Deserialize, Serialize};

use crate::formats::{read_json, Model, BUILTIN_VERHOEK};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to a model JSON file or `builtin:verhoek`.
    pub model: String,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "T_ini")]
    pub t_ini: usize,
    #[serde(rename = "T_r")]
    pub t_r: usize,
    /// Window length; `T_ini + T_r` when absent.
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub seed: u64,
    /// Per-component `[lo, hi]`; `[-1, 1]` for every component when absent.
    pub scheduling_box: Option<Vec<[f64; 2]>>,
    pub input_box: [f64; 2],
    pub tol: f64,
    pub margin_tol: f64,
    pub method: PredictMethod,
    /// Samples simulated from rest before a generated query window.
    pub burn_in: usize,
    pub format: Format,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: BUILTIN_VERHOEK.into(),
            t: 40,
            t_ini: 3,
            t_r: 7,
            l: None,
            seed: 1,
            scheduling_box: None,
            input_box: [-1.0, 1.0],
            tol: 1e-7,
            margin_tol: 1e-7,
            method: PredictMethod::Auto,
            burn_in: 10,
            format: Format::Csv,
        }
    }
}

fn check_box(name: &str, b: [f64; 2]) -> Result<()> {
    if !(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1]) {
        bail!(
            "{name} [{}, {}] is not a finite nonempty interval",
            b[0],
            b[1]
        );
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn window_len(&self) -> usize {
        self.l.unwrap_or(self.t_ini + self.t_r)
    }

    pub fn scheduling_bounds(&self, n_p: usize) -> Vec<(f64, f64)> {
        match &self.scheduling_box {
            Some(b) => b.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
            None => vec![(-1.0, 1.0); n_p],
        }
    }

    pub fn input_bounds(&self, n_u: usize) -> Vec<(f64, f64)> {
        vec![(self.input_box[0], self.input_box[1]); n_u]
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.t == 0 {
            bail!("T must be at least 1");
        }
        if self.t_ini == 0 || self.t_r == 0 {
            bail!("T_ini and T_r must be at least 1");
        }
        if self.t < self.t_ini + self.t_r {
            bail!(
                "T = {} is shorter than T_ini + T_r = {}",
                self.t,
                self.t_ini + self.t_r
            );
        }
        if let Some(l) = self.l {
            if l == 0 || l > self.t {
                bail!("L = {l} must lie in [1, T]");
            }
        }
        check_box("input_box", self.input_box)?;
        if let Some(b) = &self.scheduling_box {
            if b.len() != model.n_p() {
                bail!(
                    "scheduling_box has {} components, the model has n_p = {}",
                    b.len(),
                    model.n_p()
                );
            }
            for c in b {
                check_box("scheduling_box component", *c)?;
            }
        }
        if !(self.tol > 0.0 && self.margin_tol > 0.0) {
            bail!("tolerances must be positive");
        }
        Ok(())
    }
}
