//! Run configuration: TOML file, command-line overrides and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::FirstOrderForm;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Everything a subcommand needs besides its own positional flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin algebra name (`heisenberg`, `euclidean:N`, `free_rank2_step3`,
    /// `jacobi_broken`) or a path to an algebra text file.
    pub algebra: String,
    /// `builtin:name(key=value, …)` or a path to a grid CSV file.
    pub datum: String,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub kernel: KernelSpec,
    pub grid: GridConfig,
    pub groupcheck: GroupcheckConfig,
    pub decomp: DecompConfig,
    pub asymptotics: AsymptoticsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Spacing of builtin data unless the datum sets `h` itself.
    pub h: f64,
    /// Half-width `R` of the self-similar output box.
    pub out_radius: f64,
    /// Nodes per axis of the output box (odd).
    pub out_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupcheckConfig {
    pub samples: usize,
    /// Absolute tolerance scaled by the magnitude of the compared values.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompConfig {
    pub order: u32,
    /// Field grid refinement relative to the datum spacing.
    pub oversample: usize,
    /// Largest accepted relative weak residual.
    pub residual_tol: f64,
    /// Exponents of the norm-bound checks.
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub order: u32,
    pub p: f64,
    /// `inf` for the sup-norm.
    pub q: f64,
    /// `start:ratio:count`.
    pub times: String,
    pub slope_tol: f64,
    /// Factor applied to `A_0` in the expansion (1 for the true expansion).
    pub a0_scale: f64,
    pub form: FirstOrderForm,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Directory for multi-file outputs (`decompose`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algebra: "heisenberg".into(),
            datum: "builtin:shifted_bump".into(),
            seed: 1,
            threads: 0,
            kernel: KernelSpec::heisenberg(),
            grid: GridConfig::default(),
            groupcheck: GroupcheckConfig::default(),
            decomp: DecompConfig::default(),
            asymptotics: AsymptoticsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h: 0.1,
            out_radius: 3.0,
            out_nodes: 17,
        }
    }
}

impl Default for GroupcheckConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            tolerance: 1e-12,
        }
    }
}

impl Default for DecompConfig {
    fn default() -> Self {
        Self {
            order: 1,
            oversample: 2,
            residual_tol: 1e-3,
            p: vec![1.0, 1.2],
        }
    }
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self {
            order: 0,
            p: 1.0,
            q: f64::INFINITY,
            times: "8:2:5".into(),
            slope_tol: 0.2,
            a0_scale: 1.0,
            form: FirstOrderForm::InversePoint,
        }
    }
}

fn config_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Parses TOML text; `source` names the file in error locations.
    pub fn from_toml(text: &str, source: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => format!("{source}:{}", text[..span.start].lines().count().max(1)),
                None => source.to_string(),
            };
            config_err(location, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| config_err(p.display().to_string(), e.to_string()))?;
                Self::from_toml(&text, &p.display().to_string())
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Checks every tolerance and numeric field.
    pub fn validate(&self) -> Result<()> {
        self.kernel
            .validate()
            .map_err(|e| config_err("kernel", e.to_string()))?;
        let positive = |v: f64, loc: &str| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(config_err(loc, format!("must be positive, got {v}")))
            }
        };
        positive(self.grid.h, "grid.h")?;
        positive(self.grid.out_radius, "grid.out_radius")?;
        if self.grid.out_nodes < 3 || self.grid.out_nodes.is_multiple_of(2) {
            return Err(config_err(
                "grid.out_nodes",
                format!("must be odd and at least 3, got {}", self.grid.out_nodes),
            ));
        }
        positive(self.groupcheck.tolerance, "groupcheck.tolerance")?;
        if self.groupcheck.samples == 0 {
            return Err(config_err("groupcheck.samples", "must be at least 1"));
        }
        if self.decomp.order > 1 {
            return Err(config_err(
                "decomp.order",
                format!("must be 0 or 1, got {}", self.decomp.order),
            ));
        }
        if self.decomp.oversample == 0 {
            return Err(config_err("decomp.oversample", "must be at least 1"));
        }
        positive(self.decomp.residual_tol, "decomp.residual_tol")?;
        for p in &self.decomp.p {
            if !(*p >= 1.0) {
                return Err(config_err(
                    "decomp.p",
                    format!("exponents must be ≥ 1, got {p}"),
                ));
            }
        }
        let a = &self.asymptotics;
        if a.order > 1 {
            return Err(config_err(
                "asymptotics.order",
                format!("must be 0 or 1, got {}", a.order),
            ));
        }
        if !(a.p >= 1.0) {
            return Err(config_err(
                "asymptotics.p",
                format!("must be ≥ 1, got {}", a.p),
            ));
        }
        if !(a.q >= 1.0) {
            return Err(config_err(
                "asymptotics.q",
                format!("must be ≥ 1 or inf, got {}", a.q),
            ));
        }
        parse_times(&a.times).map_err(|e| config_err("asymptotics.times", e.to_string()))?;
        positive(a.slope_tol, "asymptotics.slope_tol")?;
        if !a.a0_scale.is_finite() {
            return Err(config_err("asymptotics.a0_scale", "must be finite"));
        }
        Ok(())
    }
}

/// Parses `start:ratio:count` into a geometric time list.
pub fn parse_times(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::param(format!("expected start:ratio:count, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let ratio: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    crate::asymptotics::geometric_times(start, ratio, count)
}

/// Parses a norm index: a real ≥ 1 or `inf`.
pub fn parse_norm_index(s: &str) -> std::result::Result<f64, String> {
    let v = match s.trim() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|e| format!("`{other}`: {e}"))?,
    };
    if v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("norm index must be ≥ 1, got {v}"))
    }
}
