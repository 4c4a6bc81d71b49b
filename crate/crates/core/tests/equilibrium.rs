mod common;

use approx::assert_relative_eq;
use common::*;
use larva_core::config::{sample_rates, AgeGrid, FunctionSpec};
use larva_core::equilibrium::{
    adjoint_eigenfunction, adjoint_profile, aquatic_births, characteristic_residual, residual_from_rates,
    solve_steady_state, survival_profile,
};
use larva_core::quadrature::trapezoid;
use larva_core::{scenarios, Error, ScenarioConfig};

fn mortality(a: f64) -> f64 {
    0.36 * (0.5 * a).exp()
}

fn fecundity(a: f64) -> f64 {
    3.68 * (-0.5 * a).exp()
}

#[test]
fn survival_without_hazard_is_one() {
    let grid = AgeGrid::<f64>::new(4.0, 16).unwrap();
    let s = survival_profile(0.0, &vec![0.0; grid.len()], &grid);
    assert!(s.iter().all(|&v| v == 1.0));
}

#[test]
fn survival_pure_exponential() {
    let grid = AgeGrid::<f64>::new(1.0, 8).unwrap();
    let s = survival_profile(1.0, &vec![0.0; grid.len()], &grid);
    assert_close(s[8], (-1f64).exp(), 1e-15);
}

#[test]
fn survival_matches_closed_form_antiderivative() {
    let grid = AgeGrid::<f64>::new(4.0, 1024).unwrap();
    let mu: Vec<f64> = grid.nodes().into_iter().map(mortality).collect();
    let s = survival_profile(0.01, &mu, &grid);
    let exact = (-0.04 - 0.72 * (2f64.exp() - 1.0)).exp();
    assert_relative_eq!(exact, 9.65e-3, max_relative = 1e-3);
    assert_relative_eq!(s[1024], exact, max_relative = 1e-5);
    assert_eq!(s[0], 1.0);
    assert!(s.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn residual_without_reproduction_is_minus_one() {
    let cfg = reference_config();
    let grid = cfg.grid;
    let mut rates = sample_rates(&cfg.rates, &grid, 0.0, 0.0).unwrap();
    rates.beta.iter_mut().for_each(|b| *b = 0.0);
    assert_eq!(residual_from_rates(0.01, 0.01, &rates, &grid, 0.5), -1.0);
}

#[test]
fn residual_is_linear_in_fecundity() {
    let cfg = reference_config();
    let grid = cfg.grid;
    let rates = sample_rates(&cfg.rates, &grid, 0.0, 0.0).unwrap();
    let base = residual_from_rates(0.01, 0.01, &rates, &grid, 0.5);
    let mut doubled = rates.clone();
    doubled.beta.iter_mut().for_each(|b| *b *= 2.0);
    let res = residual_from_rates(0.01, 0.01, &doubled, &grid, 0.5);
    assert_close(res, 2.0 * (base + 1.0) - 1.0, 1e-14);
    assert_close(characteristic_residual(0.01, 0.01, &cfg).unwrap(), base, 1e-15);
}

#[test]
fn steady_state_satisfies_its_defining_relations() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let da = cfg.grid.da();
    let res = residual_from_rates(st.zeta_aquatic, st.zeta_female, &st.rates, &st.grid, 0.5);
    assert!(res.abs() < 1e-9, "residual {res}");
    for kernel in [&st.female_kernel, &st.emergence_kernel, &st.aquatic_kernel, &st.p_tilde] {
        assert_close(trapezoid(kernel, da), 1.0, 1e-10);
    }
    assert_close(st.female_births, 0.5 * st.y_star, 1e-12);
    assert_close(st.male_births, 0.5 * st.y_star, 1e-12);
    assert_close(st.aquatic_profile[0], st.aquatic_births, 1e-12);
    assert_close(st.aquatic_mass, trapezoid(&st.aquatic_profile, da), 1e-12);
    assert_close(st.p_star_ratio, st.aquatic_mass / st.y_star, 1e-12);
    // Boundary birth of the aquatic cohort is the fecundity integral.
    let births: f64 = larva_core::quadrature::trapezoid_product(&st.rates.beta, &st.female_profile, da);
    assert_relative_eq!(births, st.aquatic_births, max_relative = 1e-10);
    // Logistic balance at the steady state.
    let balance = st.zeta_aquatic - st.p_star + st.means.growth_rate
        - st.logistic_coefficient() * st.aquatic_mass;
    assert!(balance.abs() < 1e-10, "balance {balance}");
    assert!(st.p_star < st.zeta_aquatic + st.means.growth_rate);
}

#[test]
fn single_precision_agrees_with_double() {
    let cfg = reference_config();
    let a = solve_steady_state::<f64>(cfg.p_star, &cfg).unwrap();
    let b = solve_steady_state::<f32>(cfg.p_star as f32, &cfg).unwrap();
    assert_relative_eq!(a.zeta_aquatic, b.zeta_aquatic as f64, max_relative = 1e-4);
    assert_relative_eq!(a.y_star, b.y_star as f64, max_relative = 1e-4);
}

#[test]
fn aquatic_births_vanish_at_the_admissible_edge_and_decrease() {
    let cfg = reference_config();
    let st = steady(&cfg);
    let si = survival_profile(st.zeta_aquatic, &st.rates.mu_aquatic, &st.grid);
    let integral = trapezoid(&si, st.grid.da());
    let edge = st.zeta_aquatic + st.means.growth_rate;
    let near = aquatic_births(st.zeta_aquatic, edge - 1e-6, &st.means, integral);
    assert!(near > 0.0 && near < 1e-4, "{near}");
    let mut prev = f64::INFINITY;
    for k in 1..50 {
        let p = edge * k as f64 / 50.0;
        let i0 = aquatic_births(st.zeta_aquatic, p, &st.means, integral);
        assert!(i0 < prev);
        prev = i0;
    }
}

#[test]
fn births_scale_together_across_control_levels() {
    let cfg = reference_config();
    let lo = solve_steady_state::<f64>(5.5, &cfg).unwrap();
    let hi = solve_steady_state::<f64>(5.75, &cfg).unwrap();
    assert!(hi.aquatic_births < lo.aquatic_births);
    for st in [&lo, &hi] {
        let si = survival_profile(st.zeta_aquatic, &st.rates.mu_aquatic, &st.grid);
        let emergence = larva_core::quadrature::trapezoid_product(&st.rates.w, &si, st.grid.da());
        assert_relative_eq!(st.female_births, 0.5 * st.aquatic_births * emergence, max_relative = 1e-10);
        assert_relative_eq!(st.male_births, st.female_births, max_relative = 1e-12);
    }
}

#[test]
fn excessive_control_has_no_positive_equilibrium() {
    let cfg = reference_config();
    let err = solve_steady_state::<f64>(7.5, &cfg).unwrap_err();
    assert!(matches!(err, Error::NegativeEquilibrium(_)), "{err}");
    assert!(solve_steady_state::<f64>(0.0, &cfg).is_err());
}

#[test]
fn exponent_refines_at_second_order() {
    let zeta = |n: usize| {
        let cfg = reference_config().with_intervals(n).unwrap();
        solve_steady_state::<f64>(cfg.p_star, &cfg).unwrap().zeta_aquatic
    };
    let (z1, z2, z3) = (zeta(64), zeta(128), zeta(256));
    let ratio = (z1 - z2).abs() / (z2 - z3).abs();
    assert!(ratio >= 3.0, "refinement ratio {ratio}");
}

#[test]
fn adjoint_vanishes_at_max_age_and_without_fecundity() {
    let st = steady(&reference_config());
    let pi = adjoint_eigenfunction(&st);
    assert_eq!(*pi.last().unwrap(), 0.0);
    assert!(pi[0] > 0.0);
    let zero = adjoint_profile(st.zeta_aquatic, &st.rates.mu_aquatic, &vec![0.0; st.grid.len()], &st.grid);
    assert!(zero.iter().all(|&v| v == 0.0));
}

/// RK4 on `pi' = (zeta + mu) pi - beta`, `pi(A) = 0`, integrated backward.
fn backward_adjoint(zeta: f64, max_age: f64, n: usize) -> Vec<f64> {
    let h = max_age / n as f64;
    let rhs = |a: f64, p: f64| (zeta + mortality(a)) * p - fecundity(a);
    let mut out = vec![0.0; n + 1];
    let mut p = 0.0;
    for j in (0..n).rev() {
        let a = (j + 1) as f64 * h;
        let k1 = rhs(a, p);
        let k2 = rhs(a - h / 2.0, p - h / 2.0 * k1);
        let k3 = rhs(a - h / 2.0, p - h / 2.0 * k2);
        let k4 = rhs(a - h, p - h * k3);
        p -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out[j] = p;
    }
    out
}

#[test]
fn adjoint_matches_backward_ode() {
    let n = 16384;
    let zeta = 0.01;
    let grid = AgeGrid::<f64>::new(4.0, n).unwrap();
    let nodes = grid.nodes();
    let mu: Vec<f64> = nodes.iter().map(|&a| mortality(a)).collect();
    let beta: Vec<f64> = nodes.iter().map(|&a| fecundity(a)).collect();
    let quad = adjoint_profile(zeta, &mu, &beta, &grid);
    let ode = backward_adjoint(zeta, 4.0, n);
    let scale = ode.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = quad.iter().zip(&ode).fold(0.0f64, |m, (q, o)| m.max((q - o).abs()));
    assert!(quad[0] > 0.0);
    assert!(err / scale < 1e-6, "relative error {}", err / scale);
    assert_relative_eq!(quad[0], ode[0], max_relative = 1e-6);
}

#[test]
fn adjoint_of_solved_state_matches_backward_ode() {
    let cfg = reference_config().with_intervals(4096).unwrap();
    let st = steady(&cfg);
    let pi = adjoint_eigenfunction(&st);
    let ode = backward_adjoint(st.zeta_aquatic, 4.0, 4096);
    assert_relative_eq!(pi[0], ode[0], max_relative = 1e-6);
}

#[test]
fn density_dependent_mortality_closes_the_loop() {
    let mut f = scenarios::reference();
    f.rates.density_coupling = 0.01;
    let cfg = ScenarioConfig::from_spec(f).unwrap();
    let st = steady(&cfg);
    let expected: Vec<f64> = cfg.grid.nodes().iter().map(|&a| mortality(a) * (1.0 + 0.01 * st.aquatic_mass)).collect();
    for (m, e) in st.rates.mu_aquatic.iter().zip(&expected) {
        assert_relative_eq!(*m, *e, max_relative = 1e-8);
    }
    let res = residual_from_rates(st.zeta_aquatic, st.zeta_female, &st.rates, &st.grid, 0.5);
    assert!(res.abs() < 1e-9);
}

#[test]
fn pressure_dependent_fecundity_closes_the_loop() {
    let mut f = scenarios::reference();
    f.rates.beta = "3.68*exp(-0.5*a)*(1+0.05*m/(1+m))".into();
    let cfg = ScenarioConfig::from_spec(f).unwrap();
    let st = steady(&cfg);
    let factor = st.m_star / (1.0 + st.m_star);
    assert_relative_eq!(st.rates.beta[0], 3.68 * (1.0 + 0.05 * factor), max_relative = 1e-8);
}

#[test]
fn no_reproduction_means_no_equilibrium() {
    let mut f = scenarios::reference();
    f.rates.beta = FunctionSpec::Constant(0.0);
    let cfg = ScenarioConfig::from_spec(f).unwrap();
    assert!(solve_steady_state::<f64>(cfg.p_star, &cfg).is_err());
}
