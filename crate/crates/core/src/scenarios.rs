//! Built-in scenarios: the reference demographic setting and the figure
//! scenarios (periodic, autonomous, damped-oscillation and tracking runs).
//!
//! Values the captions leave open are fixed here and written into each
//! scenario's `description`.

use std::collections::BTreeMap;

use crate::config::{
    AgeGridSpec, ControlSpec, ControllerKind, DiagnosticsSpec, EnvSpec, FunctionSpec, InitialSpec, OutputSpec,
    RatesSpec, ScenarioFile, SCHEMA_VERSION,
};

pub const MAX_AGE: f64 = 4.0;
pub const INTERVALS: usize = 128;
pub const MORTALITY: &str = "0.36*exp(0.5*a)";
pub const FECUNDITY: &str = "3.68*exp(-0.5*a)";
pub const EMERGENCE: &str = "(-a^2+4*a)/16";
pub const SEX_RATIO: f64 = 0.5;

pub const CAPACITY_MEAN: f64 = 55.74;
pub const GROWTH_MEAN: f64 = 6.5;
pub const COMPETITION_MEAN: f64 = 0.14;
pub const CONTROL_LEVEL: f64 = 5.7;

pub const PERIODIC_CAPACITY: &str = "K_star*(1+0.2*sin(3*pi*t/T))";
pub const PERIODIC_GROWTH: &str = "Gamma_star*(1+0.3*sin(4*pi*t/T))";
pub const PERIODIC_COMPETITION: &str = "gamma_star*(1+0.2*cos(3*pi*t/T))";

pub const DAMPED_CAPACITY: &str = "K_star+0.5*K_star*exp(-t/10)";
pub const DAMPED_GROWTH: &str = "Gamma_star*(1.0+0.25*exp(-t/40.0)*sin(2*pi*t/15.0))";
pub const DAMPED_COMPETITION: &str = "gamma_star*(1+0.3*exp(-t/8)*sin(2*pi*t/20))";

pub const REFERENCE: &str = "y_star+sin(2*pi*t/30)*exp(-t/30)";
pub const REFERENCE_RATE: &str = "(2*pi/30)*cos(2*pi*t/30)*exp(-t/30)-sin(2*pi*t/30)*exp(-t/30)/30";

pub const NARROW_BAND: (f64, f64) = (5.6, 5.8);
pub const WIDE_BAND: (f64, f64) = (2.0, 10.0);

pub const FIGURE_HORIZON: f64 = 80.0;
pub const TRACKING_HORIZON: f64 = 120.0;
pub const ORACLE_HORIZON: f64 = 40.0;

fn common_notes() -> Vec<String> {
    vec![
        format!(
            "defaults: K* = {CAPACITY_MEAN}, Gamma* = {GROWTH_MEAN}, gamma* = {COMPETITION_MEAN}, \
             P* = {CONTROL_LEVEL}, r = {SEX_RATIO}, A = {MAX_AGE}, n_a = {INTERVALS}"
        ),
        "K* balances the adult and aquatic exponents (zeta_F = zeta_I + Gamma* - P*)".into(),
        "initial lag histories psi0 = 0; eta0 as listed".into(),
    ]
}

fn constant_env() -> EnvSpec {
    EnvSpec {
        carrying_capacity: FunctionSpec::Constant(CAPACITY_MEAN),
        growth_rate: FunctionSpec::Constant(GROWTH_MEAN),
        competition: FunctionSpec::Constant(COMPETITION_MEAN),
        carrying_capacity_mean: Some(CAPACITY_MEAN),
        growth_rate_mean: Some(GROWTH_MEAN),
        competition_mean: Some(COMPETITION_MEAN),
    }
}

fn env_from(k: &str, g: &str, c: &str) -> EnvSpec {
    EnvSpec {
        carrying_capacity: k.into(),
        growth_rate: g.into(),
        competition: c.into(),
        ..constant_env()
    }
}

fn control(variant: ControllerKind) -> ControlSpec {
    ControlSpec {
        p_star: CONTROL_LEVEL,
        variant,
        alpha: None,
        p_min: None,
        p_max: None,
        y_d: None,
        y_d_dot: None,
    }
}

/// The reference demographic setting with constant environment.
pub fn reference() -> ScenarioFile {
    ScenarioFile {
        schema_version: SCHEMA_VERSION,
        name: "paper8".into(),
        description: common_notes(),
        age_grid: AgeGridSpec {
            max_age: MAX_AGE,
            intervals: INTERVALS,
        },
        constants: BTreeMap::new(),
        rates: RatesSpec {
            mu_aquatic: MORTALITY.into(),
            density_coupling: 0.0,
            mu_female: MORTALITY.into(),
            mu_male: MORTALITY.into(),
            beta: FECUNDITY.into(),
            w: EMERGENCE.into(),
            lambda: FunctionSpec::Constant(1.0),
            sex_ratio: SEX_RATIO,
        },
        env: constant_env(),
        control: control(ControllerKind::Static),
        horizon: ORACLE_HORIZON,
        initial: InitialSpec {
            eta0: Some(0.0),
            psi0: None,
            densities: None,
        },
        output: OutputSpec::default(),
        diagnostics: DiagnosticsSpec::default(),
    }
}

fn figure(name: &str, env: EnvSpec, variant: ControllerKind, eta0: f64, horizon: f64, note: &str) -> ScenarioFile {
    let mut s = reference();
    s.name = name.into();
    s.description.push(note.into());
    s.description.push(format!("eta0 = {eta0}, horizon T = {horizon}"));
    s.env = env;
    s.control = control(variant);
    s.horizon = horizon;
    s.initial.eta0 = Some(eta0);
    s
}

/// Periodic environment under the static control.
pub fn periodic_static() -> ScenarioFile {
    figure(
        "fig1",
        env_from(PERIODIC_CAPACITY, PERIODIC_GROWTH, PERIODIC_COMPETITION),
        ControllerKind::Static,
        0.3,
        FIGURE_HORIZON,
        "periodic environment, P(t) = P*",
    )
}

/// Autonomous environment under the static control.
pub fn autonomous_static() -> ScenarioFile {
    figure(
        "fig2",
        constant_env(),
        ControllerKind::Static,
        0.3,
        FIGURE_HORIZON,
        "autonomous case, P(t) = P*",
    )
}

/// Periodic environment under the stabilizing feedback.
pub fn periodic_stabilizing() -> ScenarioFile {
    figure(
        "fig3",
        env_from(PERIODIC_CAPACITY, PERIODIC_GROWTH, PERIODIC_COMPETITION),
        ControllerKind::Stabilizing,
        1.007,
        FIGURE_HORIZON,
        "periodic environment, stabilizing control",
    )
}

/// Damped-oscillation environment under the static control.
pub fn damped_static() -> ScenarioFile {
    figure(
        "fig4",
        env_from(DAMPED_CAPACITY, DAMPED_GROWTH, DAMPED_COMPETITION),
        ControllerKind::Static,
        0.03,
        FIGURE_HORIZON,
        "damped-oscillation environment, P(t) = P*",
    )
}

/// Damped-oscillation environment under the stabilizing feedback.
pub fn damped_stabilizing() -> ScenarioFile {
    figure(
        "fig5",
        env_from(DAMPED_CAPACITY, DAMPED_GROWTH, DAMPED_COMPETITION),
        ControllerKind::Stabilizing,
        0.03,
        FIGURE_HORIZON,
        "damped-oscillation environment, stabilizing control",
    )
}

fn tracking(name: &str, band: (f64, f64)) -> ScenarioFile {
    let mut s = figure(
        name,
        env_from(PERIODIC_CAPACITY, PERIODIC_GROWTH, PERIODIC_COMPETITION),
        ControllerKind::Tracking,
        0.5,
        TRACKING_HORIZON,
        "tracking of y_d(t) = y* + sin(2 pi t/30) exp(-t/30) under the periodic environment",
    );
    s.description.push(format!("control band ({}, {}), gain alpha = 1", band.0, band.1));
    s.control.alpha = Some(1.0);
    s.control.p_min = Some(band.0);
    s.control.p_max = Some(band.1);
    s.control.y_d = Some(REFERENCE.into());
    s.control.y_d_dot = Some(REFERENCE_RATE.into());
    s
}

/// Tracking with the constrained control range.
pub fn tracking_narrow() -> ScenarioFile {
    tracking("fig7-narrow", NARROW_BAND)
}

/// Tracking with the relaxed control range.
pub fn tracking_wide() -> ScenarioFile {
    tracking("fig7-wide", WIDE_BAND)
}

/// Perturbed start for the transform-versus-direct-solver comparison.
pub fn oracle_perturbed() -> ScenarioFile {
    figure(
        "oracle-perturbed",
        constant_env(),
        ControllerKind::Stabilizing,
        0.3,
        ORACLE_HORIZON,
        "perturbed start, constant environment, stabilizing control",
    )
}

/// Every built-in scenario, keyed by file stem.
pub fn all() -> Vec<ScenarioFile> {
    vec![
        reference(),
        periodic_static(),
        autonomous_static(),
        periodic_stabilizing(),
        damped_static(),
        damped_stabilizing(),
        tracking_narrow(),
        tracking_wide(),
        oracle_perturbed(),
    ]
}
