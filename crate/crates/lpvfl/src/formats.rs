//! JSON model files and data bundles.
//!
//! A coefficient entry is a list of terms, each `{"coeff": c, "vars":
//! [{"comp": j, "offset": d, "power": n}, ...]}` for `c · Π p_j(k+d)^n`.
//! Matrices are arrays of rows of entries.
//!
//! ```json
//! {"kind": "ss", "n_p": 1,
//!  "a": [[[{"coeff": 0.5, "vars": []}, {"coeff": 0.1, "vars": [{"comp": 1, "offset": 0, "power": 1}]}]]],
//!  "b": [[[{"coeff": 1.0, "vars": []}]]],
//!  "c": [[[{"coeff": 1.0, "vars": []}]]],
//!  "d": [[[]]]}
//! ```
//!
//! IO models use `"kind": "io"` with `n_u`, `n_y`, `n_p` and lists of
//! matrices `a` (`a_1 … a_{n_a}`) and `b` (`b_1 … b_{n_b}`).

use std::path::Path;

use anyhow::{bail, Context, Result};
use lpvfl_core::ddpred::DataRecord;
use lpvfl_core::{
    example_verhoek, CoeffMatrix, LpvIoModel, LpvSsModel, Monomial, PolyCoeff, SchedVar, Trajectory,
};
use serde::{Deserialize, Serialize};

pub const BUILTIN_VERHOEK: &str = "builtin:verhoek";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarJson {
    pub comp: usize,
    pub offset: i32,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: f64,
    #[serde(default)]
    pub vars: Vec<VarJson>,
}

pub type EntryJson = Vec<TermJson>;
pub type MatrixJson = Vec<Vec<EntryJson>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelJson {
    Ss {
        n_p: usize,
        a: MatrixJson,
        b: MatrixJson,
        c: MatrixJson,
        d: MatrixJson,
    },
    Io {
        n_u: usize,
        n_y: usize,
        n_p: usize,
        a: Vec<MatrixJson>,
        b: Vec<MatrixJson>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Ss(LpvSsModel),
    Io(LpvIoModel),
}

impl Model {
    pub fn n_u(&self) -> usize {
        match self {
            Model::Ss(m) => m.n_u(),
            Model::Io(m) => m.n_u(),
        }
    }
    pub fn n_y(&self) -> usize {
        match self {
            Model::Ss(m) => m.n_y(),
            Model::Io(m) => m.n_y(),
        }
    }
    pub fn n_p(&self) -> usize {
        match self {
            Model::Ss(m) => m.n_p(),
            Model::Io(m) => m.n_p(),
        }
    }
    /// `n_x` for state-space models, `n_a` for IO models.
    pub fn order(&self) -> usize {
        match self {
            Model::Ss(m) => m.n_x(),
            Model::Io(m) => m.n_a(),
        }
    }
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Ss(_) => "ss",
            Model::Io(_) => "io",
        }
    }
    pub fn validate(&self) -> lpvfl_core::ValidationReport {
        match self {
            Model::Ss(m) => m.validate(),
            Model::Io(m) => m.validate(),
        }
    }
}

fn entry_from_json(n_p: usize, e: &EntryJson) -> Result<PolyCoeff> {
    let terms = e.iter().map(|t| {
        let factors = t
            .vars
            .iter()
            .map(|v| (SchedVar::new(v.comp, v.offset), v.power));
        (t.coeff, Monomial::from_factors(factors))
    });
    Ok(PolyCoeff::from_terms(n_p, terms.collect::<Vec<_>>())?)
}

fn matrix_from_json(name: &str, n_p: usize, m: &MatrixJson) -> Result<CoeffMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        bail!("matrix {name} has rows of different lengths");
    }
    let entries = m
        .iter()
        .flatten()
        .map(|e| entry_from_json(n_p, e))
        .collect::<Result<Vec<_>>>()
        .with_context(|| format!("matrix {name}"))?;
    Ok(CoeffMatrix::from_entries(n_p, rows, cols, entries)?)
}

fn entry_to_json(p: &PolyCoeff) -> EntryJson {
    p.terms()
        .iter()
        .map(|t| TermJson {
            coeff: t.coeff,
            vars: t
                .monomial
                .factors()
                .iter()
                .map(|(v, power)| VarJson {
                    comp: v.component,
                    offset: v.offset,
                    power: *power,
                })
                .collect(),
        })
        .collect()
}

fn matrix_to_json(m: &CoeffMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| entry_to_json(m.get(i, j))).collect())
        .collect()
}

impl ModelJson {
    pub fn into_model(&self) -> Result<Model> {
        Ok(match self {
            ModelJson::Ss { n_p, a, b, c, d } => Model::Ss(LpvSsModel::new(
                matrix_from_json("a", *n_p, a)?,
                matrix_from_json("b", *n_p, b)?,
                matrix_from_json("c", *n_p, c)?,
                matrix_from_json("d", *n_p, d)?,
            )),
            ModelJson::Io {
                n_u,
                n_y,
                n_p,
                a,
                b,
            } => {
                let list = |name: &str, ms: &[MatrixJson]| -> Result<Vec<CoeffMatrix>> {
                    ms.iter()
                        .enumerate()
                        .map(|(i, m)| matrix_from_json(&format!("{name}_{}", i + 1), *n_p, m))
                        .collect()
                };
                Model::Io(LpvIoModel::new(
                    *n_u,
                    *n_y,
                    *n_p,
                    list("a", a)?,
                    list("b", b)?,
                ))
            }
        })
    }

    pub fn from_model(model: &Model) -> Self {
        match model {
            Model::Ss(m) => ModelJson::Ss {
                n_p: m.n_p(),
                a: matrix_to_json(m.a()),
                b: matrix_to_json(m.b()),
                c: matrix_to_json(m.c()),
                d: matrix_to_json(m.d()),
            },
            Model::Io(m) => ModelJson::Io {
                n_u: m.n_u(),
                n_y: m.n_y(),
                n_p: m.n_p(),
                a: m.a_coeffs().iter().map(matrix_to_json).collect(),
                b: m.b_coeffs().iter().map(matrix_to_json).collect(),
            },
        }
    }
}

/// Loads `builtin:verhoek` or a JSON model file, rejecting invalid models.
pub fn load_model(source: &str) -> Result<Model> {
    let model = if source == BUILTIN_VERHOEK {
        Model::Io(example_verhoek())
    } else {
        let text =
            std::fs::read_to_string(source).with_context(|| format!("reading model {source}"))?;
        let json: ModelJson =
            serde_json::from_str(&text).with_context(|| format!("parsing model {source}"))?;
        json.into_model()?
    };
    let report = model.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        bail!("invalid model {source}: {}", lines.join("; "));
    }
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub t_start: i64,
    pub dim: usize,
    /// One inner array per sample.
    pub samples: Vec<Vec<f64>>,
}

impl TrajectoryJson {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            t_start: t.t_start(),
            dim: t.dim(),
            samples: t.iter().map(|(_, s)| s.to_vec()).collect(),
        }
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        if let Some(bad) = self.samples.iter().position(|s| s.len() != self.dim) {
            bail!(
                "sample {bad} has {} channels, expected {}",
                self.samples[bad].len(),
                self.dim
            );
        }
        Ok(Trajectory::from_rows(
            self.dim,
            self.t_start,
            &self.samples,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataBundle {
    #[serde(default)]
    pub provenance: String,
    pub u: TrajectoryJson,
    pub p: TrajectoryJson,
    pub y: TrajectoryJson,
}

impl DataBundle {
    pub fn from_record(d: &DataRecord) -> Self {
        Self {
            provenance: d.provenance.clone(),
            u: TrajectoryJson::from_trajectory(&d.u),
            p: TrajectoryJson::from_trajectory(&d.p),
            y: TrajectoryJson::from_trajectory(&d.y),
        }
    }

    pub fn to_record(&self) -> Result<DataRecord> {
        Ok(DataRecord::new(
            self.u.to_trajectory()?,
            self.p.to_trajectory()?,
            self.y.to_trajectory()?,
        )?
        .with_provenance(self.provenance.clone()))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verhoek_round_trips_through_json() {
        let m = Model::Io(example_verhoek());
        let text = serde_json::to_string(&ModelJson::from_model(&m)).unwrap();
        let back: ModelJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_model().unwrap(), m);
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"{"kind": "ss", "n_p": 1,
          "a": [[[{"coeff": 0.5, "vars": []}, {"coeff": 0.1, "vars": [{"comp": 1, "offset": 0, "power": 1}]}]]],
          "b": [[[{"coeff": 1.0, "vars": []}]]],
          "c": [[[{"coeff": 1.0, "vars": []}]]],
          "d": [[[]]]}"#;
        let m = serde_json::from_str::<ModelJson>(text)
            .unwrap()
            .into_model()
            .unwrap();
        assert!(m.validate().is_valid());
        assert_eq!((m.kind(), m.order(), m.n_p()), ("ss", 1, 1));
    }

    #[test]
    fn bad_models_are_reported() {
        let ragged = r#"{"kind": "ss", "n_p": 0, "a": [[[], []], [[]]], "b": [[[]]], "c": [[[]]], "d": [[[]]]}"#;
        assert!(serde_json::from_str::<ModelJson>(ragged)
            .unwrap()
            .into_model()
            .is_err());
        let bad_comp = r#"{"kind": "io", "n_u": 1, "n_y": 1, "n_p": 1,
          "a": [[[[{"coeff": 1.0, "vars": [{"comp": 2, "offset": -1}]}]]]], "b": [[[[]]]]}"#;
        assert!(serde_json::from_str::<ModelJson>(bad_comp)
            .unwrap()
            .into_model()
            .is_err());
    }

    #[test]
    fn bundle_round_trip() {
        let u = Trajectory::scalar(1, &[1.0, 2.0]).unwrap();
        let p = Trajectory::zeros(0, 1, 2).unwrap();
        let d = DataRecord::new(u.clone(), p, u)
            .unwrap()
            .with_provenance("test");
        let text = serde_json::to_string(&DataBundle::from_record(&d)).unwrap();
        let back: DataBundle = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_record().unwrap(), d);
    }
}
