//! Reduced dynamics: a scalar log-amplitude ODE driven by age-lagged shape
//! deviations that obey renewal equations, plus reconstruction of densities
//! and the emergence output.
//!
//! The time step equals the age step, so every lagged value is an exact
//! read from a ring buffer.

use crate::config::{steps_for, ControllerKind, EnvSample, EnvironmentSignal, InitialCondition, ScenarioConfig};
use crate::control::{ControlSample, ControllerSpec};
use crate::equilibrium::SteadyState;
use crate::error::{Error, Result};
use crate::quadrature::{trapezoid_product, trapezoid_weights};
use crate::scalar::Scalar;

/// Overflow guard on the log-amplitude.
pub const DIVERGENCE_LIMIT: f64 = 700.0;

/// Fixed-length history indexed by lag: `lag(j)` is the value at `t - a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine<S> {
    data: Vec<S>,
    head: usize,
}

impl<S: Scalar> DelayLine<S> {
    /// Builds a line from values ordered by increasing lag.
    pub fn from_lags(values: Vec<S>) -> Self {
        assert!(!values.is_empty(), "delay line needs at least one slot");
        DelayLine { data: values, head: 0 }
    }

    pub fn constant(len: usize, value: S) -> Self {
        Self::from_lags(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn lag(&self, j: usize) -> S {
        let n = self.data.len();
        self.data[(self.head + j) % n]
    }

    /// Inserts the value at lag 0; the oldest lag drops out.
    pub fn push(&mut self, value: S) {
        let n = self.data.len();
        self.head = (self.head + n - 1) % n;
        self.data[self.head] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.data.len()).map(move |j| self.lag(j))
    }

    pub fn to_vec(&self) -> Vec<S> {
        self.iter().collect()
    }

    pub fn shift_values(&mut self, offset: S) {
        for v in &mut self.data {
            *v = *v - offset;
        }
    }

    pub fn min(&self) -> S {
        self.data.iter().fold(S::infinity(), |m, &v| m.min(v))
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Coordinates of the scalar amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame<S> {
    /// Amplitude relative to the equilibrium profile.
    Equilibrium,
    /// Amplitude relative to the reference field `p(a) y_d(t)`; holds the current `y_d`.
    Reference { y_d: S },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedState<S> {
    pub t: S,
    pub eta: S,
    pub aquatic: DelayLine<S>,
    pub female: DelayLine<S>,
    pub male: DelayLine<S>,
    pub frame: Frame<S>,
}

impl<S: Scalar> TransformedState<S> {
    /// Equilibrium-frame state with amplitude `eta` and zero histories.
    pub fn with_amplitude(eta: S, len: usize) -> Self {
        TransformedState {
            t: S::zero(),
            eta,
            aquatic: DelayLine::constant(len, S::zero()),
            female: DelayLine::constant(len, S::zero()),
            male: DelayLine::constant(len, S::zero()),
            frame: Frame::Equilibrium,
        }
    }

    /// Equilibrium-frame state from lag histories.
    pub fn from_histories(eta: S, aquatic: Vec<S>, female: Vec<S>, male: Vec<S>) -> Self {
        TransformedState {
            t: S::zero(),
            eta,
            aquatic: DelayLine::from_lags(aquatic),
            female: DelayLine::from_lags(female),
            male: DelayLine::from_lags(male),
            frame: Frame::Equilibrium,
        }
    }

    /// Amplitude relative to the equilibrium profile, whatever the frame.
    pub fn equilibrium_amplitude(&self, y_star: S) -> S {
        match self.frame {
            Frame::Equilibrium => self.eta,
            Frame::Reference { y_d } => self.eta + (y_d / y_star).ln(),
        }
    }

    /// Re-expresses the amplitude relative to the reference value `y_d`.
    pub fn into_reference_frame(mut self, y_d: S, y_star: S) -> Self {
        let eta = self.equilibrium_amplitude(y_star);
        self.eta = eta + (y_star / y_d).ln();
        self.frame = Frame::Reference { y_d };
        self
    }

    pub fn into_equilibrium_frame(mut self, y_star: S) -> Self {
        self.eta = self.equilibrium_amplitude(y_star);
        self.frame = Frame::Equilibrium;
        self
    }

    /// Smallest `1 + psi` over all stored lags and cohorts.
    pub fn positivity_margin(&self) -> S {
        S::one() + self.aquatic.min().min(self.female.min()).min(self.male.min())
    }
}

/// Densities of the three cohorts on the age grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField<S> {
    pub t: S,
    pub aquatic: Vec<S>,
    pub female: Vec<S>,
    pub male: Vec<S>,
}

impl<S: Scalar> DensityField<S> {
    pub fn equilibrium(steady: &SteadyState<S>) -> Self {
        DensityField {
            t: S::zero(),
            aquatic: steady.aquatic_profile.clone(),
            female: steady.female_profile.clone(),
            male: steady.male_profile.clone(),
        }
    }

    pub fn scaled(&self, c: S) -> Self {
        let s = |v: &Vec<S>| v.iter().map(|&x| x * c).collect();
        DensityField {
            t: self.t,
            aquatic: s(&self.aquatic),
            female: s(&self.female),
            male: s(&self.male),
        }
    }
}

/// Projects densities onto the neutral mode and the lagged shape deviations.
pub fn init_from_density<S: Scalar>(field: &DensityField<S>, steady: &SteadyState<S>) -> Result<TransformedState<S>> {
    let n = steady.grid.len();
    if field.aquatic.len() != n || field.female.len() != n || field.male.len() != n {
        return Err(Error::InvalidInitialCondition(format!(
            "density arrays must have {n} nodes"
        )));
    }
    let num = steady.project(&field.aquatic);
    let den = steady.project(&steady.aquatic_profile);
    if !(num > S::zero()) || !num.is_finite() {
        return Err(Error::InvalidInitialCondition(format!(
            "nonpositive projection <pi0, I0> = {num}"
        )));
    }
    let ratio = num / den;
    let shape = |density: &[S], profile: &[S]| -> Result<Vec<S>> {
        density
            .iter()
            .zip(profile)
            .enumerate()
            .map(|(j, (&d, &p))| {
                let psi = d / (p * ratio) - S::one();
                if psi.is_finite() && psi > -S::one() {
                    Ok(psi)
                } else {
                    Err(Error::InvalidInitialCondition(format!(
                        "density {d} at a = {} gives 1 + psi = {}",
                        steady.grid.node(j),
                        psi + S::one()
                    )))
                }
            })
            .collect()
    };
    let mut state = TransformedState::from_histories(
        ratio.ln(),
        shape(&field.aquatic, &steady.aquatic_profile)?,
        shape(&field.female, &steady.female_profile)?,
        shape(&field.male, &steady.male_profile)?,
    );
    state.t = field.t;
    Ok(state)
}

/// `i(a) = i*(a) (1 + psi_i(t - a)) e^eta`, with `eta` taken relative to equilibrium.
pub fn reconstruct<S: Scalar>(state: &TransformedState<S>, steady: &SteadyState<S>) -> DensityField<S> {
    let amp = state.equilibrium_amplitude(steady.y_star).exp();
    let build = |profile: &[S], hist: &DelayLine<S>| -> Vec<S> {
        profile
            .iter()
            .zip(hist.iter())
            .map(|(&p, psi)| p * (S::one() + psi) * amp)
            .collect()
    };
    DensityField {
        t: state.t,
        aquatic: build(&steady.aquatic_profile, &state.aquatic),
        female: build(&steady.female_profile, &state.female),
        male: build(&steady.male_profile, &state.male),
    }
}

/// Emergence output `∫ w I` by direct quadrature.
pub fn output_y<S: Scalar>(field: &DensityField<S>, steady: &SteadyState<S>) -> S {
    trapezoid_product(&steady.rates.w, &field.aquatic, steady.grid.da())
}

/// `q(psi) = 1 + ∫ p̃(a) psi(t - a) da`.
pub fn output_shape_factor<S: Scalar>(history: &DelayLine<S>, steady: &SteadyState<S>) -> S {
    S::one() + trapezoid_product(&steady.p_tilde, &history.to_vec(), steady.grid.da())
}

/// Emergence output from transformed coordinates, `e^eta y* q` or `e^v y_d q`.
pub fn output_from_state<S: Scalar>(state: &TransformedState<S>, steady: &SteadyState<S>) -> S {
    let scale = match state.frame {
        Frame::Equilibrium => steady.y_star,
        Frame::Reference { y_d } => y_d,
    };
    state.eta.exp() * scale * output_shape_factor(&state.aquatic, steady)
}

/// Trapezoid-weighted kernels of the discrete renewal map.
#[derive(Debug, Clone)]
pub struct RenewalWeights<S> {
    /// `omega_j g_F(a_j)`.
    pub female: Vec<S>,
    /// `omega_j g_I(a_j)`.
    pub emergence: Vec<S>,
    /// `omega_j I*(a_j)`.
    pub aquatic_mass: Vec<S>,
    /// `omega_j p̃(a_j)`.
    pub output: Vec<S>,
}

impl<S: Scalar> RenewalWeights<S> {
    pub fn new(steady: &SteadyState<S>) -> Self {
        let omega = trapezoid_weights(steady.grid.len(), steady.grid.da());
        let weigh = |v: &[S]| v.iter().zip(&omega).map(|(&x, &o)| x * o).collect();
        RenewalWeights {
            female: weigh(&steady.female_kernel),
            emergence: weigh(&steady.emergence_kernel),
            aquatic_mass: weigh(&steady.aquatic_profile),
            output: weigh(&steady.p_tilde),
        }
    }

    /// New boundary values `(psi_I(t), psi_F(t))` after one shift.
    ///
    /// The lag-0 trapezoid weights couple the two, so a 2x2 system is solved.
    pub fn boundary(&self, aquatic: &DelayLine<S>, female: &DelayLine<S>) -> (S, S) {
        let n = self.female.len();
        let mut c_aq = S::zero();
        let mut c_fe = S::zero();
        for j in 1..n {
            c_aq = c_aq + self.female[j] * female.lag(j - 1);
            c_fe = c_fe + self.emergence[j] * aquatic.lag(j - 1);
        }
        let (u0, v0) = (self.female[0], self.emergence[0]);
        let x_aq = (c_aq + u0 * c_fe) / (S::one() - u0 * v0);
        (x_aq, c_fe + v0 * x_aq)
    }

    /// `∫ (1 + psi) I*` for the current history and for the history after pushing `next`.
    fn mass_pair(&self, hist: &DelayLine<S>, next: S) -> (S, S) {
        weighted_pair(&self.aquatic_mass, hist, next)
    }

    fn output_pair(&self, hist: &DelayLine<S>, next: S) -> (S, S) {
        weighted_pair(&self.output, hist, next)
    }

    fn tails(weights: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); weights.len()];
        let mut acc = S::zero();
        for j in (0..weights.len()).rev() {
            out[j] = acc;
            acc = acc + weights[j];
        }
        out
    }

    /// Quantity conserved exactly by the discrete renewal map.
    pub fn invariant(&self, aquatic: &DelayLine<S>, female: &DelayLine<S>) -> S {
        let tf = Self::tails(&self.female);
        let te = Self::tails(&self.emergence);
        (0..tf.len()).fold(S::zero(), |acc, j| acc + tf[j] * female.lag(j) + te[j] * aquatic.lag(j))
    }

    /// Constant the histories converge to: the invariant over its value for unit histories.
    pub fn limit(&self, aquatic: &DelayLine<S>, female: &DelayLine<S>) -> S {
        let tf = Self::tails(&self.female);
        let te = Self::tails(&self.emergence);
        let unit = tf.iter().chain(te.iter()).fold(S::zero(), |a, &x| a + x);
        self.invariant(aquatic, female) / unit
    }
}

fn weighted_pair<S: Scalar>(weights: &[S], hist: &DelayLine<S>, next: S) -> (S, S) {
    let n = weights.len();
    let mut now = S::zero();
    let mut after = weights[0] * (S::one() + next);
    for j in 0..n {
        let one_plus = S::one() + hist.lag(j);
        now = now + weights[j] * one_plus;
        if j + 1 < n {
            after = after + weights[j + 1] * one_plus;
        }
    }
    (now, after)
}

/// Constant the shape deviations settle to under the renewal map alone.
pub fn renewal_limit<S: Scalar>(state: &TransformedState<S>, steady: &SteadyState<S>) -> S {
    RenewalWeights::new(steady).limit(&state.aquatic, &state.female)
}

/// Subtracts the neutral constant from every history, leaving decaying deviations.
pub fn remove_neutral_mode<S: Scalar>(state: &mut TransformedState<S>, steady: &SteadyState<S>) -> S {
    let c = renewal_limit(state, steady);
    state.aquatic.shift_values(c);
    state.female.shift_values(c);
    state.male.shift_values(c);
    c
}

/// Advances transformed states by one age step under a control law.
pub struct Stepper<'a, S> {
    steady: &'a SteadyState<S>,
    controller: &'a ControllerSpec<S>,
    env: &'a EnvironmentSignal,
    weights: RenewalWeights<S>,
}

impl<'a, S: Scalar> Stepper<'a, S> {
    pub fn new(steady: &'a SteadyState<S>, controller: &'a ControllerSpec<S>, env: &'a EnvironmentSignal) -> Self {
        Stepper {
            steady,
            controller,
            env,
            weights: RenewalWeights::new(steady),
        }
    }

    pub fn steady(&self) -> &SteadyState<S> {
        self.steady
    }

    pub fn controller(&self) -> &ControllerSpec<S> {
        self.controller
    }

    pub fn weights(&self) -> &RenewalWeights<S> {
        &self.weights
    }

    fn divergence(&self, t: S, detail: String) -> Error {
        Error::Divergence {
            controller: self.controller.name().to_string(),
            t: t.as_f64(),
            detail,
        }
    }

    fn amplitude(&self, t: S, x: S) -> Result<S> {
        let e = x.exp();
        if x > S::lit(DIVERGENCE_LIMIT) || !e.is_finite() || x.is_nan() {
            return Err(self.divergence(t, format!("log-amplitude {x} overflows")));
        }
        Ok(e)
    }

    fn reference_at(&self, t: S) -> Option<(S, S)> {
        self.controller
            .tracking()
            .map(|spec| (spec.reference.value(t), spec.reference.rate(t)))
    }

    /// Control and output at the current state, without advancing it.
    pub fn observe(&self, state: &TransformedState<S>) -> Result<(ControlSample<S>, S)> {
        let env = self.env.at(state.t);
        self.amplitude(state.t, state.eta)?;
        let y = output_from_state(state, self.steady);
        Ok((self.controller.sample(state.t, &env, y)?, y))
    }

    /// One step of length `da`; returns the control applied at the start of the step.
    pub fn step(&self, state: &mut TransformedState<S>) -> Result<ControlSample<S>> {
        let h = self.steady.grid.da();
        let t0 = state.t;
        let (x_aq, x_fe) = self.weights.boundary(&state.aquatic, &state.female);
        let (m0, m2) = self.weights.mass_pair(&state.aquatic, x_aq);
        let (o0, o2) = self.weights.output_pair(&state.aquatic, x_aq);
        let half = S::half();
        let times = [t0, t0 + half * h, t0 + h];
        let masses = [m0, half * (m0 + m2), m2];
        let outputs = [o0, half * (o0 + o2), o2];
        let envs: [EnvSample<S>; 3] = [self.env.at(times[0]), self.env.at(times[1]), self.env.at(times[2])];
        let refs = [self.reference_at(times[0]), self.reference_at(times[1]), self.reference_at(times[2])];
        let tracking_frame = matches!(state.frame, Frame::Reference { .. });
        let zeta = self.steady.zeta_aquatic;
        let y_star = self.steady.y_star;

        let rhs = |k: usize, x: S| -> Result<(S, ControlSample<S>)> {
            let e = self.amplitude(times[k], x)?;
            let env = &envs[k];
            let lc = env.logistic_coefficient();
            let (scale, drift) = match (tracking_frame, refs[k]) {
                (true, Some((y_d, rate))) => (y_d, rate / y_d),
                _ => (y_star, S::zero()),
            };
            // masses are ∫(1+psi)I*; in the reference frame the profile is p = I*/y*.
            let y = e * scale * outputs[k];
            let sample = self.controller.sample(times[k], env, y)?;
            let pressure = if tracking_frame {
                lc * e * scale * masses[k] / y_star
            } else {
                lc * e * masses[k]
            };
            Ok((zeta - sample.total - drift + env.growth_rate - pressure, sample))
        };

        let x = state.eta;
        let (k1, sample) = rhs(0, x)?;
        let (k2, _) = rhs(1, x + half * h * k1)?;
        let (k3, _) = rhs(1, x + half * h * k2)?;
        let (k4, _) = rhs(2, x + h * k3)?;
        let next = x + h / S::lit(6.0) * (k1 + S::two() * (k2 + k3) + k4);
        self.amplitude(times[2], next)?;

        if !(S::one() + x_aq > S::zero() && S::one() + x_fe > S::zero()) {
            return Err(Error::Positivity {
                t: times[2].as_f64(),
                detail: format!("boundary shape values psi_I = {x_aq}, psi_F = {x_fe}"),
            });
        }
        state.aquatic.push(x_aq);
        state.female.push(x_fe);
        state.male.push(x_fe);
        state.eta = next;
        state.t = times[2];
        if let (true, Some((y_d, _))) = (tracking_frame, refs[2]) {
            state.frame = Frame::Reference { y_d };
        }
        Ok(sample)
    }
}

/// Single step with a freshly built [`Stepper`].
pub fn step<S: Scalar>(
    state: &mut TransformedState<S>,
    controller: &ControllerSpec<S>,
    steady: &SteadyState<S>,
    env: &EnvironmentSignal,
) -> Result<ControlSample<S>> {
    Stepper::new(steady, controller, env).step(state)
}

/// Recorded trajectory on the uniform time grid `t_k = k da`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSeries<S> {
    pub controller: ControllerKind,
    pub times: Vec<S>,
    /// Log-amplitude in the run's frame (relative to `y_d` for tracking runs).
    pub eta: Vec<S>,
    pub y: Vec<S>,
    /// `y_d(t)` for tracking runs, empty otherwise.
    pub reference: Vec<S>,
    pub control: Vec<ControlSample<S>>,
    pub warnings: Vec<String>,
}

impl<S: Scalar> OutputSeries<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn saturation_fraction(&self) -> f64 {
        if self.control.is_empty() {
            return 0.0;
        }
        self.control.iter().filter(|c| c.saturated).count() as f64 / self.control.len() as f64
    }

    /// `|ln(y / y_d)|` per sample, for tracking runs.
    pub fn tracking_error(&self) -> Vec<S> {
        self.y
            .iter()
            .zip(&self.reference)
            .map(|(&y, &r)| (y / r).ln().abs())
            .collect()
    }
}

/// Initial transformed state of a scenario, in the controller's frame.
pub fn initial_state<S: Scalar>(
    config: &ScenarioConfig,
    steady: &SteadyState<S>,
    controller: &ControllerSpec<S>,
) -> Result<TransformedState<S>> {
    let grid = steady.grid;
    let state = match &config.initial {
        InitialCondition::Transformed { eta0, .. } => {
            let eta = S::lit(*eta0);
            match config.initial_history(&grid)? {
                Some(h) => TransformedState::from_histories(eta, h.aquatic, h.female, h.male),
                None => TransformedState::with_amplitude(eta, grid.len()),
            }
        }
        InitialCondition::Densities(_) => {
            let d = config
                .initial_densities(&grid)?
                .expect("density initial condition tabulates");
            init_from_density(
                &DensityField {
                    t: S::zero(),
                    aquatic: d.aquatic,
                    female: d.female,
                    male: d.male,
                },
                steady,
            )?
        }
    };
    Ok(match controller.tracking() {
        Some(spec) => {
            let y_d = spec.reference.value(S::zero());
            if !(y_d > S::zero()) {
                return Err(Error::InvalidReference(format!("y_d(0) = {y_d} is not positive")));
            }
            state.into_reference_frame(y_d, steady.y_star)
        }
        None => state,
    })
}

/// Runs `steps` steps from `state`, calling `observer` on every recorded sample.
pub fn simulate_from<S: Scalar, F>(
    mut state: TransformedState<S>,
    stepper: &Stepper<'_, S>,
    steps: usize,
    mut observer: F,
) -> Result<OutputSeries<S>>
where
    F: FnMut(&TransformedState<S>, &ControlSample<S>) -> Result<()>,
{
    let tracking = stepper.controller().tracking().is_some();
    let mut out = OutputSeries {
        controller: stepper.controller().kind(),
        times: Vec::with_capacity(steps + 1),
        eta: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        reference: Vec::new(),
        control: Vec::with_capacity(steps + 1),
        warnings: Vec::new(),
    };
    let mut warned_nonpositive = false;
    for k in 0..=steps {
        let (sample, y) = stepper.observe(&state)?;
        if !warned_nonpositive && sample.total <= S::zero() {
            warned_nonpositive = true;
            out.warnings.push(format!(
                "{} control nonpositive (P = {}) at t = {}",
                stepper.controller().name(),
                sample.total,
                state.t
            ));
        }
        out.times.push(state.t);
        out.eta.push(state.eta);
        out.y.push(y);
        if tracking {
            if let Frame::Reference { y_d } = state.frame {
                out.reference.push(y_d);
            }
        }
        out.control.push(sample);
        observer(&state, &sample)?;
        if k < steps {
            stepper.step(&mut state)?;
        }
    }
    if tracking && out.control.iter().any(|c| c.feedforward_infeasible) {
        out.warnings
            .push("feedforward left [P_min, P_max]; total control clamped to the band".into());
    }
    Ok(out)
}

/// Full closed-loop run of a scenario over `horizon`.
pub fn simulate<S: Scalar>(
    config: &ScenarioConfig,
    steady: &SteadyState<S>,
    controller: &ControllerSpec<S>,
    horizon: S,
) -> Result<OutputSeries<S>> {
    let steps = steps_for(horizon.as_f64(), steady.grid.da().as_f64())?;
    let state = initial_state(config, steady, controller)?;
    let stepper = Stepper::new(steady, controller, &config.env);
    simulate_from(state, &stepper, steps, |_, _| Ok(()))
}

/// Least-squares exponential decay rate of positive samples: `-slope` of `ln(values)`.
pub fn fit_decay_rate<S: Scalar>(times: &[S], values: &[S]) -> Option<S> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > S::zero())
        .map(|(t, v)| (t.as_f64(), v.as_f64().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    Some(S::lit(-sxy / sxx))
}
