#![allow(dead_code)]

use larva_core::config::{FunctionSpec, ScenarioConfig, ScenarioFile};
use larva_core::control::ControllerSpec;
use larva_core::equilibrium::solve_steady_state;
use larva_core::{scenarios, ControllerKind, SteadyState};

pub fn reference_file() -> ScenarioFile {
    scenarios::reference()
}

pub fn config(file: ScenarioFile) -> ScenarioConfig {
    ScenarioConfig::from_spec(file).expect("valid scenario")
}

pub fn reference_config() -> ScenarioConfig {
    config(reference_file())
}

pub fn steady(cfg: &ScenarioConfig) -> SteadyState<f64> {
    solve_steady_state(cfg.p_star, cfg).expect("equilibrium exists")
}

pub fn controller(cfg: &ScenarioConfig, st: &SteadyState<f64>, kind: ControllerKind) -> ControllerSpec<f64> {
    ControllerSpec::from_config(kind, cfg, st).expect("controller builds")
}

/// Reference scenario with a constant environment `(K, Gamma, gamma)`.
pub fn constant_env_file(k: f64, g: f64, c: f64) -> ScenarioFile {
    let mut f = reference_file();
    f.env.carrying_capacity = FunctionSpec::Constant(k);
    f.env.growth_rate = FunctionSpec::Constant(g);
    f.env.competition = FunctionSpec::Constant(c);
    f.env.carrying_capacity_mean = Some(k);
    f.env.growth_rate_mean = Some(g);
    f.env.competition_mean = Some(c);
    f
}

pub fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}
