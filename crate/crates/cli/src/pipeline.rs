//! Closed-loop run plus the diagnostic channels recorded alongside it.

use std::path::Path;

use larva_core::config::load_scenario;
use larva_core::diagnostics::{
    check_conditions, default_sigma, lyapunov_sample, tracking_certificates, tracking_record, DiagnosticParams,
    LyapunovSample, TrackingCertificate, TrackingConstants, TrackingRecord,
};
use larva_core::dynamics::{initial_state, simulate_from, Stepper};
use larva_core::{solve_steady_state, ControllerKind, ControllerSpec, OutputSeries, Scalar, ScenarioConfig, SteadyState};

use crate::CliResult;

/// Loads a scenario and applies grid and horizon overrides.
pub fn load(path: &Path, intervals: Option<usize>, horizon: Option<f64>) -> CliResult<ScenarioConfig> {
    let mut cfg = load_scenario(path)?;
    if let Some(n) = intervals {
        cfg = cfg.with_intervals(n)?;
    }
    if let Some(t) = horizon {
        cfg = cfg.with_horizon(t)?;
    }
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct DiagnosticTrace<S> {
    pub samples: Vec<LyapunovSample<S>>,
    pub sigma: S,
    pub gamma1: S,
    pub region_constant: S,
    pub control_positive: bool,
    pub positive_definite: bool,
}

#[derive(Debug, Clone)]
pub struct TrackingOutcome<S> {
    pub records: Vec<TrackingRecord<S>>,
    pub constants: TrackingConstants<S>,
    pub certificate: Result<TrackingCertificate<S>, String>,
    /// `v^2 + delta F` per sample.
    pub w: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct RunReport<S> {
    pub steady: SteadyState<S>,
    pub controller: ControllerSpec<S>,
    pub series: OutputSeries<S>,
    pub diagnostics: Option<DiagnosticTrace<S>>,
    pub tracking: Option<TrackingOutcome<S>>,
}

/// Runs the scenario under `kind`, recording Lyapunov channels when `diag`
/// is set and the tracking certificate for tracking runs.
pub fn run_closed_loop<S: Scalar>(cfg: &ScenarioConfig, kind: ControllerKind, diag: bool) -> CliResult<RunReport<S>> {
    let steady = solve_steady_state::<S>(S::lit(cfg.p_star), cfg)?;
    let controller = ControllerSpec::from_config(kind, cfg, &steady)?;
    let state = initial_state(cfg, &steady, &controller)?;
    let stepper = Stepper::new(&steady, &controller, &cfg.env);
    let steps = cfg.steps()?;
    let da = steady.grid.da();
    let tracking = controller.tracking().is_some();

    let sigma = if diag || tracking {
        default_sigma(&steady, cfg.diagnostics.sigma)
    } else {
        S::lit(larva_core::diagnostics::FALLBACK_SIGMA)
    };
    let times: Vec<S> = (0..=steps).map(|k| S::from_usize_lossy(k) * da).collect();
    let conditions = diag.then(|| check_conditions::<S>(&cfg.env, &times));
    let region_constant = conditions.as_ref().map_or(S::zero(), |c| c.region_constant());
    let gamma1 = cfg
        .diagnostics
        .gamma1
        .map(S::lit)
        .unwrap_or(S::two() * region_constant * steady.aquatic_mass);
    let params = DiagnosticParams {
        sigma,
        gamma1,
        region_constant,
        delta: None,
        control_positive: true,
    };

    let mut samples = Vec::new();
    let mut records = Vec::new();
    let series = simulate_from(state, &stepper, steps, |s, _| {
        if diag {
            samples.push(lyapunov_sample(s, &steady, &cfg.env.at(s.t), &params));
        }
        if tracking {
            records.push(tracking_record(s, sigma, da));
        }
        Ok(())
    })?;

    let control_positive = series.control.iter().all(|c| c.total > S::zero());
    if !control_positive {
        samples.iter_mut().for_each(|s| s.region_a_member = false);
    }

    let tracking = match controller.tracking() {
        Some(spec) => {
            let max_age = steady.grid.max_age();
            let constants = TrackingConstants::compute(spec, &series, sigma, max_age, cfg.diagnostics.delta.map(S::lit))?;
            let certificate = tracking_certificates(&records, &constants, max_age).map_err(|e| e.to_string());
            let w = records.iter().map(|r| r.v * r.v + constants.delta * r.f_func).collect();
            Some(TrackingOutcome {
                records,
                constants,
                certificate,
                w,
            })
        }
        None => None,
    };
    if let Some(t) = tracking.as_ref() {
        samples.iter_mut().zip(&t.w).for_each(|(s, w)| s.w = Some(*w));
    }

    let diagnostics = conditions.map(|c| DiagnosticTrace {
        samples,
        sigma,
        gamma1,
        region_constant,
        control_positive,
        positive_definite: c.all_positive_definite,
    });
    Ok(RunReport {
        steady,
        controller,
        series,
        diagnostics,
        tracking,
    })
}
