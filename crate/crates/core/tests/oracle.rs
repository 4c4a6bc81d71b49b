mod common;

use approx::assert_relative_eq;
use common::*;
use larva_core::oracle::{compare_with_transform, oracle_step, relative_l2, OracleSolver};
use larva_core::quadrature::trapezoid;
use larva_core::{scenarios, ControllerKind, ControllerSpec, DensityField};

#[test]
fn relative_error_basics() {
    let a = vec![1.0, 2.0, 3.0];
    assert_eq!(relative_l2(&a, &a, 0.5), 0.0);
    let b: Vec<f64> = a.iter().map(|x| 1.1 * x).collect();
    assert_close(relative_l2(&b, &a, 0.5), 0.1, 1e-14);
}

#[test]
fn equilibrium_drifts_at_most_first_order() {
    for n in [64, 128, 256] {
        let cfg = reference_config().with_intervals(n).unwrap();
        let st = steady(&cfg);
        let ctl = controller(&cfg, &st, ControllerKind::Static);
        let solver = OracleSolver::new(&st, &ctl, &cfg.env, &cfg.rates);
        let eq = DensityField::equilibrium(&st);
        let mut f = eq.clone();
        while f.t < 1.0 - 1e-12 {
            f = solver.step(&f).unwrap();
        }
        let da = st.grid.da();
        let drift = relative_l2(&f.aquatic, &eq.aquatic, da);
        assert!(drift <= da, "n = {n}: {drift}");
    }
}

fn without_reproduction(st: &larva_core::SteadyState<f64>) -> larva_core::SteadyState<f64> {
    let mut s = st.clone();
    let n = s.grid.len();
    s.rates.beta = vec![0.0; n];
    s.rates.w = vec![0.0; n];
    s.rates.mu_aquatic = vec![0.0; n];
    s
}

#[test]
fn single_cohort_moves_one_cell() {
    let cfg = reference_config();
    let st = without_reproduction(&steady(&cfg));
    let ctl = ControllerSpec::Static { p_star: 0.0 };
    let n = st.grid.len();
    let mut f = DensityField { t: 0.0, aquatic: vec![0.0; n], female: vec![0.0; n], male: vec![0.0; n] };
    f.aquatic[10] = 1.0;
    f.female[20] = 1.0;
    let next = oracle_step(&f, &ctl, &cfg.env, &st, &cfg.rates).unwrap();
    let da = st.grid.da();
    let m = st.means;
    let mass = trapezoid(&f.aquatic, da);
    let growth = (da * m.growth_rate * (1.0 - m.competition / m.carrying_capacity * mass)).exp();
    assert_relative_eq!(next.aquatic[11], growth, max_relative = 1e-14);
    assert_eq!(next.aquatic.iter().filter(|&&x| x != 0.0).count(), 1);
    assert_eq!(next.female.iter().filter(|&&x| x != 0.0).count(), 1);
    assert!(next.female[21] > 0.0 && next.female[21] < 1.0);
    assert_eq!(next.t, da);
}

#[test]
fn aquatic_mass_follows_logistic_harvest_ode() {
    let cfg = reference_config();
    let base = steady(&cfg);
    let st = without_reproduction(&base);
    let p = 5.7;
    let ctl = ControllerSpec::Static { p_star: p };
    let m = st.means;
    let rho = m.growth_rate - p;
    let cap = rho * m.carrying_capacity / (m.growth_rate * m.competition);
    let exact = |n0: f64, t: f64| cap / (1.0 + (cap / n0 - 1.0) * (-rho * t).exp());
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let cfg = reference_config().with_intervals(n).unwrap();
        let st = without_reproduction(&steady(&cfg));
        let nodes = st.grid.nodes();
        let bump: Vec<f64> = nodes
            .iter()
            .map(|&a| if a <= 1.0 { 3.0 * (std::f64::consts::PI * a).sin().powi(2) } else { 0.0 })
            .collect();
        let len = nodes.len();
        let mut f = DensityField { t: 0.0, aquatic: bump, female: vec![0.0; len], male: vec![0.0; len] };
        let da = st.grid.da();
        let n0 = trapezoid(&f.aquatic, da);
        let solver = OracleSolver::new(&st, &ctl, &cfg.env, &cfg.rates);
        while f.t < 2.0 - 1e-12 {
            f = solver.step(&f).unwrap();
        }
        let got = trapezoid(&f.aquatic, da);
        errs.push((got - exact(n0, 2.0)).abs() / exact(n0, 2.0));
    }
    assert!(errs[0] < 0.05, "{errs:?}");
    // First order in the step.
    assert!(errs[0] / errs[1] > 1.7 && errs[1] / errs[2] > 1.7, "{errs:?}");
}

#[test]
fn equilibrium_start_agrees_with_transform() {
    let cfg = reference_config().with_horizon(10.0).unwrap();
    let st = steady(&cfg);
    let ctl = controller(&cfg, &st, ControllerKind::Static);
    let cmp = compare_with_transform(&cfg, &st, &ctl, 10.0).unwrap();
    assert_eq!(cmp.err_aquatic[0], 0.0);
    assert!(cmp.max_aquatic() < 0.02, "{}", cmp.max_aquatic());
}

#[test]
fn perturbed_start_agrees_and_refines() {
    let mut prev = f64::INFINITY;
    for n in [64, 128] {
        let cfg = config(scenarios::oracle_perturbed()).with_intervals(n).unwrap();
        let st = steady(&cfg);
        let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
        let cmp = compare_with_transform(&cfg, &st, &ctl, cfg.horizon).unwrap();
        let e = cmp.max_aquatic();
        assert!(e <= 0.05 && e < prev, "n = {n}: {e}");
        assert!(cmp.max_output() <= 0.05);
        prev = e;
    }
}

#[test]
fn shaped_start_is_compared_too() {
    let mut f = scenarios::oracle_perturbed();
    f.initial.psi0 = Some(larva_core::config::HistorySpec {
        aquatic: "0.1*sin(pi*a/A)".into(),
        female: "0.05*cos(pi*a/A)".into(),
        male: "0.05*cos(pi*a/A)".into(),
    });
    let mut errs = Vec::new();
    for n in [64, 128] {
        let cfg = config(f.clone()).with_intervals(n).unwrap().with_horizon(20.0).unwrap();
        let st = steady(&cfg);
        let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
        errs.push(compare_with_transform(&cfg, &st, &ctl, 20.0).unwrap().max_aquatic());
    }
    assert!(errs.iter().all(|e| e.is_finite() && *e < 0.2), "{errs:?}");
}

/// Away from the adult balance the transformed representation keeps a fixed gap.
#[test]
fn off_balance_gap_does_not_refine_away() {
    let mut errs = Vec::new();
    for n in [64, 128] {
        let mut f = constant_env_file(6.0, 6.5, 0.14);
        f.initial.eta0 = Some(0.3);
        f.control.variant = ControllerKind::Stabilizing;
        let cfg = config(f).with_intervals(n).unwrap().with_horizon(40.0).unwrap();
        let st = steady(&cfg);
        let ctl = controller(&cfg, &st, ControllerKind::Stabilizing);
        errs.push(compare_with_transform(&cfg, &st, &ctl, 40.0).unwrap().max_aquatic());
    }
    assert!(errs[1] > 0.01, "{errs:?}");
    assert!(errs[1] > 0.8 * errs[0], "{errs:?}");
}

#[test]
fn heavy_control_suppresses_the_aquatic_stage() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let ctl = ControllerSpec::Static { p_star: 3.0 * (st.zeta_aquatic + st.means.growth_rate) };
    let solver = OracleSolver::new(&st, &ctl, &cfg.env, &cfg.rates);
    let da = st.grid.da();
    let mut f = DensityField::equilibrium(&st);
    let mut masses = vec![trapezoid(&f.aquatic, da)];
    for _ in 0..(20.0 / da) as usize {
        f = solver.step(&f).unwrap();
        assert!(f.aquatic.iter().chain(&f.female).chain(&f.male).all(|&x| x >= 0.0));
        masses.push(trapezoid(&f.aquatic, da));
    }
    let settle = (4.0 / da) as usize;
    assert!(masses[settle..].windows(2).all(|w| w[1] < w[0]));
    assert!(masses.last().unwrap() < &(1e-3 * masses[0]));
}
