//! Run configuration documents and matrix files.
//!
//! A run is described by one JSON object with row-major arrays:
//!
//! ```json
//! {
//!   "A": [[1, -1], [1, 1]], "B": [[1], [1]], "H": [[2, 0], [0, 1]],
//!   "Q": [[1, 0], [0, 1]], "R": [[1, 0], [0, 1]],
//!   "x0": [2, 1], "P0": [[1, 0], [0, 1]],
//!   "controls": [[1]], "measurements": [[1, 1]], "steps": 1
//! }
//! ```
//!
//! Optional keys and their defaults: `readout_mode` (`"exact"`), `shots`
//! (16384), `iterations` (100), `seed` (`$QKF_SEED`, else 0), `shot_budget`
//! (none), `kappa_margin` (1.1), `kappa` (none; a fixed condition bound
//! that overrides the margin), `eps_prime` (0.01) and `degree_cap` (501).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{
    FilterState, KalmanModel, KappaPolicy, QuantumOptions, ReadoutMode, SamplingPlan,
};
use crate::linalg::{ComplexMatrix, C64};
use crate::qsvt::DEFAULT_DEGREE_CAP;

/// Environment variable that supplies the seed when the document has none.
pub const SEED_ENV: &str = "QKF_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub x0: Vec<f64>,
    #[serde(rename = "P0")]
    pub p0: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub measurements: Vec<Vec<f64>>,
    pub steps: usize,
    #[serde(default)]
    pub readout_mode: Readout,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_budget: Option<u64>,
    #[serde(default = "default_margin")]
    pub kappa_margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_eps_prime")]
    pub eps_prime: f64,
    #[serde(default = "default_degree_cap")]
    pub degree_cap: usize,
}

fn default_shots() -> u64 {
    16384
}

fn default_iterations() -> u64 {
    100
}

fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

fn default_margin() -> f64 {
    1.1
}

fn default_eps_prime() -> f64 {
    0.01
}

fn default_degree_cap() -> usize {
    DEFAULT_DEGREE_CAP
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Dimension(format!("{name} is empty")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Dimension(format!(
            "{name} row {i} has {} entries, row 0 has {c}",
            rows[i].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{name} has a non-finite entry")));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| {
        C64::new(rows[i][j], 0.0)
    }))
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Serialize back to a document `parse_config` accepts.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        let init = self.init()?;
        if init.x_hat.rows() != model.n() {
            return Err(Error::Dimension(format!(
                "x0 has {} entries, A is {n}x{n}",
                init.x_hat.rows(),
                n = model.n()
            )));
        }
        if init.p.shape() != (model.n(), model.n()) {
            return Err(Error::Dimension(format!(
                "P0 is {}x{}, expected {n}x{n}",
                init.p.rows(),
                init.p.cols(),
                n = model.n()
            )));
        }
        for (name, list, len) in [
            ("controls", &self.controls, model.c()),
            ("measurements", &self.measurements, model.m()),
        ] {
            if list.len() < self.steps {
                return Err(Error::Dimension(format!(
                    "{name} has {} entries, steps = {}",
                    list.len(),
                    self.steps
                )));
            }
            if let Some(i) = list.iter().position(|v| v.len() != len) {
                return Err(Error::Dimension(format!(
                    "{name}[{i}] has {} entries, expected {len}",
                    list[i].len()
                )));
            }
        }
        if self.readout_mode == Readout::Sampled && (self.shots == 0 || self.iterations == 0) {
            return Err(config_err("shots", "shots and iterations must be positive"));
        }
        if !(self.kappa_margin.is_finite() && self.kappa_margin >= 1.0) {
            return Err(config_err("kappa_margin", "must be at least 1"));
        }
        if let Some(k) = self.kappa {
            if !(k.is_finite() && k > 1.0) {
                return Err(config_err("kappa", "must exceed 1"));
            }
        }
        if !(self.eps_prime > 0.0 && self.eps_prime < 1.0) {
            return Err(config_err("eps_prime", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<KalmanModel> {
        let a = matrix(&self.a, "A")?;
        let b = matrix(&self.b, "B")?;
        if b.rows() != a.rows() {
            return Err(Error::Dimension(format!(
                "B has {} rows, A is {n}x{n}",
                b.rows(),
                n = a.rows()
            )));
        }
        KalmanModel::new(
            a,
            b,
            matrix(&self.h, "H")?,
            matrix(&self.q, "Q")?,
            matrix(&self.r, "R")?,
        )
    }

    pub fn init(&self) -> Result<FilterState> {
        if self.x0.is_empty() {
            return Err(Error::Dimension("x0 is empty".into()));
        }
        FilterState::new(
            ComplexMatrix::column_vector(&self.x0)?,
            matrix(&self.p0, "P0")?,
            0,
        )
    }

    pub fn options(&self) -> QuantumOptions {
        QuantumOptions {
            kappa: match self.kappa {
                Some(k) => KappaPolicy::Fixed(k),
                None => KappaPolicy::Margin(self.kappa_margin),
            },
            eps_prime: self.eps_prime,
            degree_cap: self.degree_cap,
            readout: match self.readout_mode {
                Readout::Exact => ReadoutMode::Exact,
                Readout::Sampled => ReadoutMode::Sampled(SamplingPlan {
                    shots: self.shots,
                    iterations: self.iterations,
                    seed: self.seed,
                    budget: self.shot_budget,
                }),
            },
        }
    }
}

/// The bundled single-step example with the condition bound fixed at 3.5.
pub const EXAMPLE_CONFIG: &str = include_str!("../data/worked_example.json");

/// Read a matrix from CSV without a header. With `complex`, columns come
/// in `re, im` pairs.
pub fn read_matrix_csv(text: &str, complex: bool) -> Result<ComplexMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| config_err(&format!("row {i}"), e.to_string()))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>().map_err(|_| {
                    config_err(
                        &format!("row {i}, column {j}"),
                        format!("`{f}` is not a number"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if complex {
        if let Some(i) = rows.iter().position(|r| r.len() % 2 != 0) {
            return Err(Error::Dimension(format!(
                "row {i} has an odd number of columns for re/im pairs"
            )));
        }
        let re: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().step_by(2).copied().collect())
            .collect();
        let im: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().skip(1).step_by(2).copied().collect())
            .collect();
        let re = matrix(&re, "matrix")?;
        let im = matrix(&im, "matrix")?;
        Ok(ComplexMatrix::from_fn(re.rows(), re.cols(), |i, j| {
            C64::new(re[(i, j)].re, im[(i, j)].re)
        }))
    } else {
        matrix(&rows, "matrix")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parses() {
        let cfg = parse_config(EXAMPLE_CONFIG).unwrap();
        assert_eq!(cfg.kappa, Some(3.5));
        assert_eq!(cfg.steps, 1);
        let model = cfg.model().unwrap();
        assert_eq!(model.a[(0, 1)].re, -1.0);
        assert_eq!(model.h[(0, 0)].re, 2.0);
        assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn empty_document_names_a() {
        match parse_config("{}") {
            Err(Error::Config { message, .. }) => assert!(message.contains("`A`"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_has_location() {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE_CONFIG).unwrap();
        v["kappa_margn"] = 1.2.into();
        match parse_config(&v.to_string()) {
            Err(Error::Config { message, .. }) => assert!(message.contains("kappa_margn")),
            other => panic!("{other:?}"),
        }
        v = serde_json::from_str(EXAMPLE_CONFIG).unwrap();
        v["A"][1][0] = "x".into();
        match parse_config(&v.to_string()) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "A[1][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_b_is_a_dimension_error() {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE_CONFIG).unwrap();
        v["B"] = serde_json::json!([[1], [1], [1]]);
        match parse_config(&v.to_string()) {
            Err(e @ Error::Dimension(_)) => {
                assert!(e.to_string().contains('B'));
                assert_eq!(e.exit_code(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_csv() {
        let m = read_matrix_csv("1, 2\n3, 4\n", false).unwrap();
        assert_eq!(m[(1, 0)].re, 3.0);
        let z = read_matrix_csv("1,0.5,2,0\n", true).unwrap();
        assert_eq!(z.shape(), (1, 2));
        assert_eq!(z[(0, 0)], C64::new(1.0, 0.5));
        assert!(read_matrix_csv("1,a\n", false).is_err());
        assert!(read_matrix_csv("1,2\n3\n", false).is_err());
    }
}
