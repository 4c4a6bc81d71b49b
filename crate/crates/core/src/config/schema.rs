//! On-disk scenario format (JSON, `schema_version` 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formula::FunctionSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    /// Free-form notes; echoed into output headers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub description: Vec<String>,
    pub age_grid: AgeGridSpec,
    /// Extra named constants usable in every expression.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    pub rates: RatesSpec,
    pub env: EnvSpec,
    pub control: ControlSpec,
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AgeGridSpec {
    pub max_age: f64,
    pub intervals: usize,
}

fn default_lambda() -> FunctionSpec {
    FunctionSpec::Constant(1.0)
}

fn default_sex_ratio() -> f64 {
    0.5
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    /// Aquatic mortality at zero density, a function of `a`.
    #[serde(rename = "mu_I")]
    pub mu_aquatic: FunctionSpec,
    /// `c_p` in `mu_I(a, p) = mu_I(a) * (1 + c_p * p)`.
    #[serde(rename = "mu_I_density_coupling", default, skip_serializing_if = "is_zero")]
    pub density_coupling: f64,
    #[serde(rename = "mu_F")]
    pub mu_female: FunctionSpec,
    #[serde(rename = "mu_M")]
    pub mu_male: FunctionSpec,
    /// Egg laying rate; may reference the male pressure `m`.
    pub beta: FunctionSpec,
    pub w: FunctionSpec,
    #[serde(default = "default_lambda")]
    pub lambda: FunctionSpec,
    #[serde(default = "default_sex_ratio", alias = "r")]
    pub sex_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    #[serde(rename = "K")]
    pub carrying_capacity: FunctionSpec,
    #[serde(rename = "Gamma")]
    pub growth_rate: FunctionSpec,
    #[serde(rename = "gamma")]
    pub competition: FunctionSpec,
    #[serde(rename = "K_star", default, skip_serializing_if = "Option::is_none")]
    pub carrying_capacity_mean: Option<f64>,
    #[serde(rename = "Gamma_star", default, skip_serializing_if = "Option::is_none")]
    pub growth_rate_mean: Option<f64>,
    #[serde(rename = "gamma_star", default, skip_serializing_if = "Option::is_none")]
    pub competition_mean: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Static,
    #[default]
    Stabilizing,
    Tracking,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Static => "static",
            ControllerKind::Stabilizing => "stabilizing",
            ControllerKind::Tracking => "tracking",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(ControllerKind::Static),
            "stabilizing" => Ok(ControllerKind::Stabilizing),
            "tracking" => Ok(ControllerKind::Tracking),
            other => Err(format!("unknown controller `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    #[serde(rename = "P_star")]
    pub p_star: f64,
    #[serde(default)]
    pub variant: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(rename = "P_min", default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<f64>,
    #[serde(rename = "P_max", default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    /// Reference output, a function of `t` that may use `y_star`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_d: Option<String>,
    /// Closed-form derivative of `y_d`; a centered difference is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_d_dot: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    #[serde(rename = "I")]
    pub aquatic: FunctionSpec,
    #[serde(rename = "F")]
    pub female: FunctionSpec,
    #[serde(rename = "M")]
    pub male: FunctionSpec,
}

/// Either transformed data (`eta0` plus optional lag histories `psi0` as
/// functions of `a`) or initial densities as functions of `a`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi0: Option<HistorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<HistorySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diag: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(rename = "sigma_I", default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(rename = "kappa_I", default, skip_serializing_if = "Option::is_none")]
    pub kappa_aquatic: Option<f64>,
    #[serde(rename = "kappa_F", default, skip_serializing_if = "Option::is_none")]
    pub kappa_female: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}
