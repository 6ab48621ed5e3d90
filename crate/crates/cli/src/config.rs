//! Scenario configuration: a single JSON document with row-major matrices
//! and explicit shapes.

use std::path::Path;

use momentmap::linalg::RMat;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// The bundled two-channel lag-one scenario.
pub const BUNDLED_CONFIG: &str = include_str!("../../../configs/two_channel.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn from_matrix(x: &RMat) -> Self {
        Self {
            rows: x.nrows(),
            cols: x.ncols(),
            data: x.transpose().iter().copied().collect(),
        }
    }

    pub fn to_matrix(&self) -> RMat {
        RMat::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn validate(&self, name: &str, rows: usize, cols: usize) -> Result<(), CliError> {
        if self.rows != rows || self.cols != cols {
            return Err(CliError::Config(format!(
                "{name}: expected shape {rows} x {cols}, got {} x {}",
                self.rows, self.cols
            )));
        }
        if self.data.len() != rows * cols {
            return Err(CliError::Config(format!(
                "{name}: shape {rows} x {cols} needs {} entries, got {}",
                rows * cols,
                self.data.len()
            )));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("{name}: entry {i} is not finite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub tol_t: f64,
    pub residual_tol: f64,
    pub rank_threshold: f64,
    pub cond_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub p: usize,
    pub delta_theta: f64,
    /// Prior factor, `m x n` with `n = m(p+1)`.
    #[serde(rename = "K")]
    pub k: MatrixSpec,
    /// Factors `C`; the first two are the path endpoints.
    #[serde(rename = "C_list")]
    pub c_list: Vec<MatrixSpec>,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn state_dim(&self) -> usize {
        self.m * (self.p + 1)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config does not parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CONFIG).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.m == 0 || self.p == 0 {
            return Err(CliError::Config(format!(
                "m and p must be positive, got m = {}, p = {}",
                self.m, self.p
            )));
        }
        if !(self.delta_theta > 0.0 && self.delta_theta.is_finite()) {
            return Err(CliError::Config(format!(
                "delta_theta must be positive, got {}",
                self.delta_theta
            )));
        }
        let n = self.state_dim();
        self.k.validate("K", self.m, n)?;
        for (i, c) in self.c_list.iter().enumerate() {
            c.validate(&format!("C_list[{i}]"), self.m, n)?;
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_t", t.tol_t),
            ("residual_tol", t.residual_tol),
            ("rank_threshold", t.rank_threshold),
            ("cond_max", t.cond_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The two path endpoint factors.
    pub fn endpoints(&self) -> Result<(&MatrixSpec, &MatrixSpec), CliError> {
        match self.c_list.as_slice() {
            [a, b, ..] => Ok((a, b)),
            _ => Err(CliError::Config(format!(
                "C_list needs at least two factors for a path, got {}",
                self.c_list.len()
            ))),
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
