//! Experiment configuration read by `scan` and `wt-scan`.

use std::path::{Path, PathBuf};

use heatcalc_core::gauss_oracle::{linear_grid, log_grid, Component, GaussianMixture, Tolerances};
use serde::Deserialize;
use thiserror::Error;

pub const MAX_ORDER_LIMIT: u32 = 6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        field: String,
        message: String,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => linear_grid(self.start, self.stop, self.points),
            Spacing::Log => log_grid(self.start, self.stop, self.points),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mixture: Vec<Component>,
    pub t_grid: TimeGrid,
    pub max_order: u32,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Path prefix for CSV and SVG files; CSV goes to stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: path.to_owned(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        let field = |field: &str, message: String| ConfigError::Field {
            path: path.to_owned(),
            field: field.to_owned(),
            message,
        };
        let g = &self.t_grid;
        if !(g.start > 0.0) || !g.start.is_finite() {
            return Err(field(
                "t_grid.start",
                format!("must be positive, got {}", g.start),
            ));
        }
        if !(g.stop > g.start) || !g.stop.is_finite() {
            return Err(field(
                "t_grid.stop",
                format!("must exceed start {}, got {}", g.start, g.stop),
            ));
        }
        if g.points < 3 {
            return Err(field(
                "t_grid.points",
                format!("need at least 3, got {}", g.points),
            ));
        }
        if self.max_order < 1 || self.max_order > MAX_ORDER_LIMIT {
            return Err(field(
                "max_order",
                format!("must lie in 1..={MAX_ORDER_LIMIT}, got {}", self.max_order),
            ));
        }
        let t = &self.tolerances;
        if !(t.sign_factor >= 0.0) || !(t.second_difference >= 0.0) || !(t.costa >= 0.0) {
            return Err(field("tolerances", "entries must be nonnegative".into()));
        }
        self.build_mixture()
            .map_err(|e| field("mixture", e.to_string()))?;
        Ok(())
    }

    pub fn build_mixture(
        &self,
    ) -> Result<GaussianMixture, heatcalc_core::gauss_oracle::OracleError> {
        GaussianMixture::new(self.mixture.clone())
    }

    /// `W_t` lives on `(0, 1)`.
    pub fn check_unit_interval(&self, path: &Path) -> Result<(), ConfigError> {
        if self.t_grid.stop >= 1.0 {
            return Err(ConfigError::Field {
                path: path.to_owned(),
                field: "t_grid.stop".into(),
                message: format!("W_t scans need stop < 1, got {}", self.t_grid.stop),
            });
        }
        Ok(())
    }
}
