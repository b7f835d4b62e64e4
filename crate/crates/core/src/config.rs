//! Problem configuration files.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::channel::DensityMatrix;
use crate::decompose::GeneratorSpec;
use crate::error::{Error, Result};
use crate::numerics::{self, c, Mat2, C64};

/// Complex matrix as separate real and imaginary blocks. `im` defaults to
/// zero.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexBlock {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexBlock {
    fn entries(&self, n: usize, what: &str) -> Result<Vec<C64>> {
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !shape_ok(&self.re) || self.im.as_ref().is_some_and(|m| !shape_ok(m)) {
            return Err(Error::Config(format!("{what} must be {n}x{n}")));
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
                let v = c(self.re[i][j], im);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Config(format!("{what} has a non-finite entry")));
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn to_mat2(&self, what: &str) -> Result<Mat2> {
        let e = self.entries(2, what)?;
        Ok(Mat2::from_row_slice(&e))
    }

    pub fn to_mat3(&self, what: &str) -> Result<Matrix3<C64>> {
        let e = self.entries(3, what)?;
        Ok(Matrix3::from_row_slice(&e))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialState {
    Bloch {
        bloch: [f64; 3],
    },
    Matrix(ComplexBlock),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Hermiticity, positivity and reconstruction tolerance.
    #[serde(default = "default_input")]
    pub input: f64,
    /// Allowed excess of the simulated error over the analytic bound.
    #[serde(default = "default_slack")]
    pub circuit_slack: f64,
}

fn default_input() -> f64 {
    numerics::DEFAULT_TOL
}

fn default_slack() -> f64 {
    1e-7
}

fn default_samples() -> usize {
    11
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { input: default_input(), circuit_slack: default_slack() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub hamiltonian: ComplexBlock,
    pub gks_matrix: ComplexBlock,
    pub time: f64,
    pub epsilon: f64,
    pub initial_state: InitialState,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fixes `Λ` instead of estimating it from the generator.
    #[serde(default)]
    pub lambda: Option<f64>,
}

impl ProblemConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.samples < 2 {
            return Err(Error::Config("samples must be at least 2".into()));
        }
        if let Some(l) = cfg.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be positive, got {l}")));
            }
        }
        Ok(cfg)
    }

    /// `LF_TOL` if set, else the configured input tolerance.
    pub fn tolerance(&self) -> f64 {
        match std::env::var("LF_TOL") {
            Ok(_) => numerics::global_tolerance(),
            Err(_) => self.tolerances.input,
        }
    }

    pub fn spec(&self) -> Result<GeneratorSpec> {
        let h = self.hamiltonian.to_mat2("hamiltonian")?;
        let a = self.gks_matrix.to_mat3("gks_matrix")?;
        GeneratorSpec::new(h, a, self.time, self.tolerance())
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        match &self.initial_state {
            InitialState::Bloch { bloch } => {
                let v = Vector3::from(*bloch);
                if v.norm() > 1.0 + 1e-12 {
                    return Err(Error::Config(format!("Bloch vector has length {} > 1", v.norm())));
                }
                Ok(DensityMatrix::from_bloch(v))
            }
            InitialState::Matrix(block) => DensityMatrix::new(block.to_mat2("initial_state")?, self.tolerance()),
        }
    }
}
