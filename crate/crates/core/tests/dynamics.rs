mod common;

use approx::assert_relative_eq;
use common::*;
use larva_core::dynamics::{
    fit_decay_rate, init_from_density, initial_state, output_from_state, output_y, reconstruct,
    remove_neutral_mode, simulate_from, DelayLine, Frame, RenewalWeights, Stepper, DIVERGENCE_LIMIT,
};
use larva_core::{scenarios, simulate, ControllerKind, DensityField, Error, TransformedState};

fn perturbed(steady: &larva_core::SteadyState<f64>) -> DensityField<f64> {
    let mut f = DensityField::equilibrium(steady);
    let max_age = steady.grid.max_age();
    for (j, v) in f.aquatic.iter_mut().enumerate() {
        let a = steady.grid.node(j);
        *v *= 1.0 + 0.1 * (std::f64::consts::PI * a / max_age).sin();
    }
    for (j, v) in f.female.iter_mut().enumerate() {
        *v *= 1.0 + 0.05 * (steady.grid.node(j) / max_age);
    }
    f
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if *y == 0.0 { (x - y).abs() } else { ((x - y) / y).abs() })
        .fold(0.0, f64::max)
}

#[test]
fn delay_line_shifts_lags() {
    let mut d = DelayLine::from_lags(vec![0.0, 1.0, 2.0]);
    d.push(5.0);
    assert_eq!(d.to_vec(), vec![5.0, 0.0, 1.0]);
    assert_eq!(d.lag(0), 5.0);
    assert_eq!(d.lag(2), 1.0);
    assert_eq!(d.len(), 3);
    d.shift_values(1.0);
    assert_eq!(d.to_vec(), vec![4.0, -1.0, 0.0]);
    assert_eq!(d.min(), -1.0);
    assert_eq!(d.max_abs(), 4.0);
}

#[test]
fn equilibrium_maps_to_origin() {
    let st = steady(&reference_config());
    let s = init_from_density(&DensityField::equilibrium(&st), &st).unwrap();
    assert!(s.eta.abs() < 1e-14);
    for h in [&s.aquatic, &s.female, &s.male] {
        assert!(h.max_abs() < 1e-14);
    }
    assert_eq!(s.aquatic.len(), st.grid.len());
}

#[test]
fn scaled_equilibrium_has_log_amplitude() {
    let st = steady(&reference_config());
    let s = init_from_density(&DensityField::equilibrium(&st).scaled(2.5), &st).unwrap();
    assert_close(s.eta, 2.5f64.ln(), 1e-13);
    assert!(s.aquatic.max_abs() < 1e-13);
}

#[test]
fn reconstruct_from_simple_states() {
    let st = steady(&reference_config());
    let n = st.grid.len();
    let eq = reconstruct(&TransformedState::with_amplitude(0.0, n), &st);
    assert_eq!(eq, DensityField::equilibrium(&st));
    let double = reconstruct(&TransformedState::with_amplitude(2f64.ln(), n), &st);
    assert!(max_rel(&double.aquatic, &st.aquatic_profile.iter().map(|x| 2.0 * x).collect::<Vec<_>>()) < 1e-14);
}

#[test]
fn perturbed_field_round_trips() {
    let st = steady(&reference_config());
    let f = perturbed(&st);
    let s = init_from_density(&f, &st).unwrap();
    assert!(s.eta != 0.0);
    let back = reconstruct(&s, &st);
    assert!(max_rel(&back.aquatic, &f.aquatic) < 1e-10);
    assert!(max_rel(&back.female, &f.female) < 1e-10);
    assert!(max_rel(&back.male, &f.male) < 1e-10);
}

#[test]
fn nonpositive_projection_is_rejected() {
    let st = steady(&reference_config());
    let f = DensityField::equilibrium(&st).scaled(-1.0);
    assert!(matches!(init_from_density(&f, &st), Err(Error::InvalidInitialCondition(_))));
}

#[test]
fn output_by_quadrature_and_by_shape_factor_agree() {
    let st = steady(&reference_config());
    let eq = DensityField::equilibrium(&st);
    assert_relative_eq!(output_y(&eq, &st), st.y_star, max_relative = 1e-14);
    assert_relative_eq!(output_y(&eq.scaled(2.0), &st), 2.0 * st.y_star, max_relative = 1e-14);
    let f = perturbed(&st);
    let s = init_from_density(&f, &st).unwrap();
    assert_relative_eq!(output_from_state(&s, &st), output_y(&f, &st), max_relative = 1e-10);
    let r = s.clone().into_reference_frame(1.1, st.y_star);
    assert!(matches!(r.frame, Frame::Reference { .. }));
    assert_relative_eq!(output_from_state(&r, &st), output_y(&f, &st), max_relative = 1e-10);
    assert_relative_eq!(r.into_equilibrium_frame(st.y_star).eta, s.eta, max_relative = 1e-12);
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let stepper = Stepper::new(&st, &ctl, &cfg.env);
    let mut s = TransformedState::with_amplitude(0.0, st.grid.len());
    for _ in 0..200 {
        let before = s.eta;
        stepper.step(&mut s).unwrap();
        assert!((s.eta - before).abs() < 1e-12);
        assert!(s.aquatic.max_abs() < 1e-14);
    }
}

#[test]
fn single_step_agrees_with_euler_to_second_order() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let mut s = TransformedState::with_amplitude(0.3, st.grid.len());
    larva_core::dynamics::step(&mut s, &ctl, &st, &cfg.env).unwrap();
    let da = st.grid.da();
    let m = st.means;
    let euler = 0.3
        + da * (st.zeta_aquatic - st.p_star + m.growth_rate
            - m.growth_rate * m.competition / m.carrying_capacity * 0.3f64.exp() * st.aquatic_mass);
    assert!((s.eta - euler).abs() < da * da, "{} vs {euler}", s.eta);
    assert!((s.eta - 0.3) * (euler - 0.3) > 0.0);
    assert_eq!(s.t, da);
}

#[test]
fn constant_histories_renew_exactly() {
    let st = steady(&reference_config());
    let w = RenewalWeights::new(&st);
    let n = st.grid.len();
    let c = 0.37;
    let (x_aq, x_fe) = w.boundary(&DelayLine::constant(n, c), &DelayLine::constant(n, c));
    assert_close(x_aq, c, 1e-14);
    assert_close(x_fe, c, 1e-14);
}

#[test]
fn renewal_invariant_is_conserved() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let n = st.grid.len();
    let hist: Vec<f64> = (0..n).map(|j| 0.2 * (j as f64 * 0.1).sin()).collect();
    let hist_f: Vec<f64> = (0..n).map(|j| 0.1 * (j as f64 * 0.05).cos()).collect();
    let mut s = TransformedState::from_histories(0.0, hist.clone(), hist_f.clone(), hist_f);
    let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
    let stepper = Stepper::new(&st, &ctl, &cfg.env);
    let w = stepper.weights();
    let phi0 = w.invariant(&s.aquatic, &s.female);
    for _ in 0..500 {
        stepper.step(&mut s).unwrap();
        assert_close(w.invariant(&s.aquatic, &s.female), phi0, 1e-12);
    }
    // Histories approach the neutral constant.
    let c = w.limit(&s.aquatic, &s.female);
    assert!((s.aquatic.lag(0) - c).abs() < 0.05, "{} vs {c}", s.aquatic.lag(0));
}

#[test]
fn shape_deviations_decay_after_removing_the_neutral_mode() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let n = st.grid.len();
    let hist: Vec<f64> = (0..n).map(|j| 0.2 * (j as f64 * 0.2).sin()).collect();
    let mut s = TransformedState::from_histories(0.0, hist.clone(), hist.clone(), hist);
    remove_neutral_mode(&mut s, &st);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let stepper = Stepper::new(&st, &ctl, &cfg.env);
    let mut times = Vec::new();
    let mut norms = Vec::new();
    for k in 0..(40 * n) {
        stepper.step(&mut s).unwrap();
        if k % n == 0 {
            times.push(s.t);
            norms.push(s.aquatic.max_abs());
        }
    }
    let rate = fit_decay_rate(&times, &norms).unwrap();
    assert!(rate > 0.0, "fitted decay rate {rate}");
    assert!(norms.last().unwrap() < &(0.01 * norms[0]));
}

#[test]
fn decay_fit_recovers_exponential_rate() {
    let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
    let v: Vec<f64> = t.iter().map(|&x| 3.0 * (-0.7 * x).exp()).collect();
    assert_close(fit_decay_rate(&t, &v).unwrap(), 0.7, 1e-12);
    assert!(fit_decay_rate(&t[..1], &v[..1]).is_none());
}

#[test]
fn zero_horizon_gives_one_sample() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let out = simulate(&cfg, &st, &ctl, 0.0).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.times, vec![0.0]);
}

#[test]
fn horizon_must_be_a_multiple_of_the_step() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    assert!(simulate(&cfg, &st, &ctl, 0.01).is_err());
}

#[test]
fn times_are_uniform_and_runs_deterministic() {
    let cfg = config(scenarios::periodic_stabilizing()).with_horizon(10.0).unwrap();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
    let a = simulate(&cfg, &st, &ctl, 10.0).unwrap();
    let b = simulate(&cfg, &st, &ctl, 10.0).unwrap();
    assert_eq!(a, b);
    let da = st.grid.da();
    for (k, t) in a.times.iter().enumerate() {
        assert_close(*t, k as f64 * da, 1e-12);
    }
}

#[test]
fn autonomous_static_run_returns_to_equilibrium() {
    let cfg = config(scenarios::autonomous_static());
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let out = simulate(&cfg, &st, &ctl, cfg.horizon).unwrap();
    assert!(out.eta.last().unwrap().abs() < 1e-3);
}

#[test]
fn stabilizing_control_settles_periodic_environment() {
    let cfg = config(scenarios::periodic_stabilizing());
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
    let out = simulate(&cfg, &st, &ctl, cfg.horizon).unwrap();
    assert_eq!(out.eta[0], 1.007);
    assert!(out.eta.last().unwrap().abs() < 1e-2);
}

#[test]
fn static_control_keeps_oscillating_in_periodic_environment() {
    let cfg = config(scenarios::periodic_static());
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let out = simulate(&cfg, &st, &ctl, cfg.horizon).unwrap();
    let tail = &out.eta[3 * out.len() / 4..];
    let amp = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(amp > 1e-1, "amplitude {amp}");
}

#[test]
fn positivity_is_preserved_along_runs() {
    let cfg = config(scenarios::damped_stabilizing());
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
    let state = initial_state(&cfg, &st, &ctl).unwrap();
    let stepper = Stepper::new(&st, &ctl, &cfg.env);
    let steps = cfg.steps().unwrap();
    simulate_from(state, &stepper, steps, |s, _| {
        assert!(s.positivity_margin() > 0.0);
        Ok(())
    })
    .unwrap();
}

#[test]
fn overflow_is_reported_as_divergence() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let mut s = TransformedState::with_amplitude(DIVERGENCE_LIMIT + 1.0, st.grid.len());
    match larva_core::dynamics::step(&mut s, &ctl, &st, &cfg.env) {
        Err(Error::Divergence { controller, .. }) => assert_eq!(controller, "static"),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn tracking_runs_in_the_reference_frame() {
    let cfg = config(scenarios::tracking_wide());
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Tracking);
    let out = simulate(&cfg, &st, &ctl, 30.0).unwrap();
    assert_eq!(out.reference.len(), out.len());
    let err = out.tracking_error();
    assert!(err.last().unwrap() < &1e-2);
    assert_eq!(out.saturation_fraction(), 0.0);
}

#[test]
fn single_precision_run_tracks_double() {
    let cfg = config(scenarios::autonomous_static()).with_horizon(20.0).unwrap();
    let a = steady(&cfg);
    let b = larva_core::solve_steady_state::<f32>(cfg.p_star as f32, &cfg).unwrap();
    let ca = controller(&cfg, &a, ControllerKind::Static);
    let cb = larva_core::ControllerSpec::<f32>::from_config(ControllerKind::Static, &cfg, &b).unwrap();
    let ra = simulate(&cfg, &a, &ca, 20.0).unwrap();
    let rb = simulate(&cfg, &b, &cb, 20.0f32).unwrap();
    for (x, y) in ra.eta.iter().zip(&rb.eta) {
        assert!((x - *y as f64).abs() < 1e-4);
    }
}
