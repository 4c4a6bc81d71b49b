//! Direct solver for the age-structured system: exact one-cell shift along
//! characteristics, multiplicative sources, trapezoid boundary births.

use crate::config::{sample_rates, steps_for, EnvironmentSignal, ScenarioConfig, VitalRateSet};
use crate::control::ControllerSpec;
use crate::dynamics::{initial_state, reconstruct, DensityField, Stepper};
use crate::equilibrium::SteadyState;
use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, trapezoid_product, trapezoid_weights};
use crate::scalar::Scalar;

/// Densities on the age nodes at time `t`.
pub type GridField<S> = DensityField<S>;

/// Upwind solver state that does not change between steps.
pub struct OracleSolver<'a, S> {
    steady: &'a SteadyState<S>,
    controller: &'a ControllerSpec<S>,
    env: &'a EnvironmentSignal,
    rates: &'a VitalRateSet,
    omega: Vec<S>,
}

fn cell_average<S: Scalar>(v: &[S]) -> Vec<S> {
    v.windows(2).map(|w| S::half() * (w[0] + w[1])).collect()
}

impl<'a, S: Scalar> OracleSolver<'a, S> {
    pub fn new(
        steady: &'a SteadyState<S>,
        controller: &'a ControllerSpec<S>,
        env: &'a EnvironmentSignal,
        rates: &'a VitalRateSet,
    ) -> Self {
        OracleSolver {
            steady,
            controller,
            env,
            rates,
            omega: trapezoid_weights(steady.grid.len(), steady.grid.da()),
        }
    }

    /// One step of length `da`; mortality density and male pressure are lagged.
    pub fn step(&self, field: &GridField<S>) -> Result<GridField<S>> {
        let grid = &self.steady.grid;
        let da = grid.da();
        let n = grid.len();
        let total_aquatic = trapezoid(&field.aquatic, da);
        let total_female = trapezoid(&field.female, da);
        let total_male = trapezoid(&field.male, da);

        let coupled = self.rates.density_coupled() || self.rates.pressure_coupled();
        let resampled;
        let tab = if coupled {
            let m = trapezoid_product(&self.steady.rates.lambda, &field.male, da);
            resampled = sample_rates(self.rates, grid, total_aquatic, m)?;
            &resampled
        } else {
            &self.steady.rates
        };

        let env = self.env.at(field.t);
        let y = trapezoid_product(&tab.w, &field.aquatic, da);
        let control = self.controller.sample(field.t, &env, y)?;
        let r_aq = env.growth_rate * (S::one() - env.competition / env.carrying_capacity * total_aquatic) - control.total;
        let r_fe = -env.competition * total_female;
        let r_ma = -env.competition * total_male;

        let advect = |old: &[S], mu: &[S], r: S| -> Vec<S> {
            let mu_cell = cell_average(mu);
            let mut out = vec![S::zero(); n];
            for j in 0..n - 1 {
                out[j + 1] = old[j] * (da * (r - mu_cell[j])).exp();
            }
            out
        };
        let mut aquatic = advect(&field.aquatic, &tab.mu_aquatic, r_aq);
        let mut female = advect(&field.female, &tab.mu_female, r_fe);
        let mut male = advect(&field.male, &tab.mu_male, r_ma);

        let r = self.steady.sex_ratio;
        let (mut c_aq, mut c_fe) = (S::zero(), S::zero());
        for j in 1..n {
            c_aq = c_aq + self.omega[j] * tab.beta[j] * female[j];
            c_fe = c_fe + self.omega[j] * tab.w[j] * aquatic[j];
        }
        let b_fe = self.omega[0] * tab.beta[0];
        let b_aq = self.omega[0] * tab.w[0];
        let births = (c_aq + b_fe * r * c_fe) / (S::one() - b_fe * r * b_aq);
        let emergence = c_fe + b_aq * births;
        aquatic[0] = births;
        female[0] = r * emergence;
        male[0] = (S::one() - r) * emergence;

        let t = field.t + da;
        for (name, v) in [("I", &aquatic), ("F", &female), ("M", &male)] {
            if let Some(x) = v.iter().find(|x| !(**x >= S::zero()) || !x.is_finite()) {
                return Err(Error::Positivity {
                    t: t.as_f64(),
                    detail: format!("direct solver produced {name} = {x}"),
                });
            }
        }
        Ok(GridField { t, aquatic, female, male })
    }
}

/// One direct-solver step.
pub fn oracle_step<S: Scalar>(
    field: &GridField<S>,
    controller: &ControllerSpec<S>,
    env: &EnvironmentSignal,
    steady: &SteadyState<S>,
    rates: &VitalRateSet,
) -> Result<GridField<S>> {
    OracleSolver::new(steady, controller, env, rates).step(field)
}

/// Relative errors of the transformed run against the direct solver.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison<S> {
    pub times: Vec<S>,
    pub err_aquatic: Vec<S>,
    pub err_female: Vec<S>,
    pub err_male: Vec<S>,
    pub err_output: Vec<S>,
}

impl<S: Scalar> OracleComparison<S> {
    fn max_of(v: &[S]) -> S {
        v.iter().fold(S::zero(), |m, &x| m.max(x))
    }

    pub fn max_aquatic(&self) -> S {
        Self::max_of(&self.err_aquatic)
    }

    pub fn max_female(&self) -> S {
        Self::max_of(&self.err_female)
    }

    pub fn max_male(&self) -> S {
        Self::max_of(&self.err_male)
    }

    pub fn max_output(&self) -> S {
        Self::max_of(&self.err_output)
    }
}

/// Relative L2-in-age error of `x` against `reference`.
pub fn relative_l2<S: Scalar>(x: &[S], reference: &[S], da: S) -> S {
    let diff: Vec<S> = x.iter().zip(reference).map(|(&a, &b)| (a - b) * (a - b)).collect();
    let norm: Vec<S> = reference.iter().map(|&b| b * b).collect();
    let den = trapezoid(&norm, da);
    if den == S::zero() {
        return trapezoid(&diff, da).sqrt();
    }
    (trapezoid(&diff, da) / den).sqrt()
}

/// Runs the transformed dynamics and the direct solver from the same initial
/// densities and records their discrepancy at every step.
pub fn compare_with_transform<S: Scalar>(
    config: &ScenarioConfig,
    steady: &SteadyState<S>,
    controller: &ControllerSpec<S>,
    horizon: S,
) -> Result<OracleComparison<S>> {
    let steps = steps_for(horizon.as_f64(), steady.grid.da().as_f64())?;
    let da = steady.grid.da();
    let mut state = initial_state(config, steady, controller)?;
    let stepper = Stepper::new(steady, controller, &config.env);
    let solver = OracleSolver::new(steady, controller, &config.env, &config.rates);
    let mut field = reconstruct(&state, steady);
    let mut out = OracleComparison {
        times: Vec::with_capacity(steps + 1),
        err_aquatic: Vec::with_capacity(steps + 1),
        err_female: Vec::with_capacity(steps + 1),
        err_male: Vec::with_capacity(steps + 1),
        err_output: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let transformed = reconstruct(&state, steady);
        out.times.push(state.t);
        out.err_aquatic.push(relative_l2(&transformed.aquatic, &field.aquatic, da));
        out.err_female.push(relative_l2(&transformed.female, &field.female, da));
        out.err_male.push(relative_l2(&transformed.male, &field.male, da));
        let y_tr = trapezoid_product(&steady.rates.w, &transformed.aquatic, da);
        let y_or = trapezoid_product(&steady.rates.w, &field.aquatic, da);
        out.err_output.push(((y_tr - y_or) / y_or).abs());
        if k < steps {
            stepper.step(&mut state)?;
            field = solver.step(&field)?;
        }
    }
    Ok(out)
}
