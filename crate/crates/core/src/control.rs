//! Control laws: static level, stabilizing feedback on the logistic pressure,
//! and saturated feedforward plus feedback tracking of the emergence output.

use crate::config::{Constants, ControllerKind, EnvSample, ScalarFn, ScenarioConfig};
use crate::equilibrium::SteadyState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reference output `y_d(t)` with its time derivative.
#[derive(Debug, Clone)]
pub struct Reference {
    value: ScalarFn,
    rate: Option<ScalarFn>,
    y_star: f64,
    consts: Constants,
    step: f64,
}

impl Reference {
    /// `step` is the half-width of the centered difference used when no
    /// closed-form derivative is given.
    pub fn new(value: ScalarFn, rate: Option<ScalarFn>, y_star: f64, consts: Constants, step: f64) -> Self {
        Reference {
            value,
            rate,
            y_star,
            consts,
            step,
        }
    }

    /// Constant reference.
    pub fn constant(level: f64) -> Self {
        Reference::new(ScalarFn::Constant(level), Some(ScalarFn::Constant(0.0)), level, Constants::new(), 1e-3)
    }

    fn eval(&self, f: &ScalarFn, t: f64) -> f64 {
        f.eval("t", t, &[("y_star", self.y_star)], &self.consts)
            .unwrap_or(f64::NAN)
    }

    pub fn value<S: Scalar>(&self, t: S) -> S {
        S::lit(self.eval(&self.value, t.as_f64()))
    }

    pub fn rate<S: Scalar>(&self, t: S) -> S {
        let t = t.as_f64();
        let r = match &self.rate {
            Some(f) => self.eval(f, t),
            None => {
                let h = self.step;
                (self.eval(&self.value, t + h) - self.eval(&self.value, t - h)) / (2.0 * h)
            }
        };
        S::lit(r)
    }

    pub fn has_closed_form_rate(&self) -> bool {
        self.rate.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct TrackingSpec<S> {
    pub alpha: S,
    pub p_min: S,
    pub p_max: S,
    pub reference: Reference,
    pub zeta_aquatic: S,
    /// `p* = k_I / y*`.
    pub p_star_ratio: S,
}

#[derive(Debug, Clone)]
pub enum ControllerSpec<S> {
    Static {
        p_star: S,
    },
    Stabilizing {
        p_star: S,
        aquatic_mass: S,
        means: EnvSample<S>,
    },
    Tracking(TrackingSpec<S>),
}

/// One evaluation of a control law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample<S> {
    pub t: S,
    pub total: S,
    pub feedforward: S,
    pub feedback_raw: S,
    pub feedback: S,
    pub saturated: bool,
    /// Tracking only: the feedforward left the band, so the total was clamped directly.
    pub feedforward_infeasible: bool,
}

impl<S: Scalar> ControlSample<S> {
    fn open_loop(t: S, p: S) -> Self {
        ControlSample {
            t,
            total: p,
            feedforward: p,
            feedback_raw: S::zero(),
            feedback: S::zero(),
            saturated: false,
            feedforward_infeasible: false,
        }
    }
}

/// `P(t) = P*`.
pub fn static_control<S: Scalar>(p_star: S) -> S {
    p_star
}

/// `P* + (Gamma - Gamma*) + k_I (Gamma* gamma*/K* - Gamma gamma/K)`.
pub fn stabilizing_control<S: Scalar>(p_star: S, aquatic_mass: S, means: &EnvSample<S>, env: &EnvSample<S>) -> S {
    p_star
        + (env.growth_rate - means.growth_rate)
        + aquatic_mass * (means.logistic_coefficient() - env.logistic_coefficient())
}

/// Model-inversion term `zeta_I - y_d'/y_d + Gamma - p* (Gamma gamma / K) y_d`.
pub fn feedforward<S: Scalar>(zeta_aquatic: S, p_star_ratio: S, env: &EnvSample<S>, y_d: S, y_d_rate: S) -> Result<S> {
    if !(y_d > S::zero()) {
        return Err(Error::InvalidReference(format!("y_d = {y_d} is not positive")));
    }
    Ok(zeta_aquatic - y_d_rate / y_d + env.growth_rate - p_star_ratio * env.logistic_coefficient() * y_d)
}

/// `alpha ln(y / y_d)`.
pub fn feedback<S: Scalar>(y: S, y_d: S, alpha: S) -> Result<S> {
    if !(y > S::zero()) {
        return Err(Error::InvalidState(format!("output y = {y} is not positive")));
    }
    if !(y_d > S::zero()) {
        return Err(Error::InvalidReference(format!("y_d = {y_d} is not positive")));
    }
    Ok(alpha * (y / y_d).ln())
}

fn clamp_feedback<S: Scalar>(raw: S, p_ff: S, p_min: S, p_max: S) -> (S, bool) {
    let lo = p_min - p_ff;
    let hi = p_max - p_ff;
    if raw < lo {
        (lo, true)
    } else if raw > hi {
        (hi, true)
    } else {
        (raw, false)
    }
}

/// Clamps the feedback to `[P_min - P_FF, P_max - P_FF]`; the flag reports clamping.
pub fn saturate<S: Scalar>(raw: S, p_ff: S, p_min: S, p_max: S) -> Result<(S, bool)> {
    if !(p_min <= p_ff && p_ff <= p_max) {
        return Err(Error::InfeasibleFeedforward {
            p_ff: p_ff.as_f64(),
            p_min: p_min.as_f64(),
            p_max: p_max.as_f64(),
        });
    }
    Ok(clamp_feedback(raw, p_ff, p_min, p_max))
}

impl<S: Scalar> TrackingSpec<S> {
    pub fn feedforward(&self, t: S, env: &EnvSample<S>) -> Result<S> {
        feedforward(
            self.zeta_aquatic,
            self.p_star_ratio,
            env,
            self.reference.value(t),
            self.reference.rate(t),
        )
    }

    /// Upper bound on admissible references, `(min(2, alpha) / 4p*) min(1, (P_max - P_min)/2)`.
    pub fn reference_bound(&self) -> S {
        let two = S::two();
        self.alpha.min(two) / (S::lit(4.0) * self.p_star_ratio) * S::one().min((self.p_max - self.p_min) / two)
    }

    /// Band `[c y_d + P_min, P_max - c y_d]` with `c = 4p*/min(2, alpha)` required of the feedforward.
    pub fn feedforward_band(&self, y_d: S) -> (S, S) {
        let c = S::lit(4.0) * self.p_star_ratio / self.alpha.min(S::two());
        (c * y_d + self.p_min, self.p_max - c * y_d)
    }
}

impl<S: Scalar> ControllerSpec<S> {
    /// Builds the law of kind `kind` from the scenario's control section.
    pub fn from_config(kind: ControllerKind, config: &ScenarioConfig, steady: &SteadyState<S>) -> Result<Self> {
        let p_star = steady.p_star;
        Ok(match kind {
            ControllerKind::Static => ControllerSpec::Static { p_star },
            ControllerKind::Stabilizing => ControllerSpec::Stabilizing {
                p_star,
                aquatic_mass: steady.aquatic_mass,
                means: steady.means,
            },
            ControllerKind::Tracking => {
                let c = &config.control;
                let (Some(p_min), Some(p_max), Some(value)) = (c.p_min, c.p_max, c.reference.clone()) else {
                    return Err(Error::InvalidParameter(
                        "tracking control needs y_d, P_min and P_max in the scenario".into(),
                    ));
                };
                ControllerSpec::Tracking(TrackingSpec {
                    alpha: S::lit(c.alpha),
                    p_min: S::lit(p_min),
                    p_max: S::lit(p_max),
                    reference: Reference::new(
                        value,
                        c.reference_rate.clone(),
                        steady.y_star.as_f64(),
                        config.constants().clone(),
                        config.grid.da(),
                    ),
                    zeta_aquatic: steady.zeta_aquatic,
                    p_star_ratio: steady.p_star_ratio,
                })
            }
        })
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerSpec::Static { .. } => ControllerKind::Static,
            ControllerSpec::Stabilizing { .. } => ControllerKind::Stabilizing,
            ControllerSpec::Tracking(_) => ControllerKind::Tracking,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().as_str()
    }

    pub fn tracking(&self) -> Option<&TrackingSpec<S>> {
        match self {
            ControllerSpec::Tracking(t) => Some(t),
            _ => None,
        }
    }

    /// Evaluates the law at time `t`; `y` is the current emergence output.
    ///
    /// When the tracking feedforward leaves `[P_min, P_max]` the total is
    /// clamped to the band and `feedforward_infeasible` is set.
    pub fn sample(&self, t: S, env: &EnvSample<S>, y: S) -> Result<ControlSample<S>> {
        match self {
            ControllerSpec::Static { p_star } => Ok(ControlSample::open_loop(t, static_control(*p_star))),
            ControllerSpec::Stabilizing {
                p_star,
                aquatic_mass,
                means,
            } => Ok(ControlSample::open_loop(
                t,
                stabilizing_control(*p_star, *aquatic_mass, means, env),
            )),
            ControllerSpec::Tracking(spec) => {
                let y_d = spec.reference.value(t);
                let p_ff = spec.feedforward(t, env)?;
                let raw = feedback(y, y_d, spec.alpha)?;
                let infeasible = !(spec.p_min <= p_ff && p_ff <= spec.p_max);
                let (fb, saturated) = clamp_feedback(raw, p_ff, spec.p_min, spec.p_max);
                Ok(ControlSample {
                    t,
                    total: p_ff + fb,
                    feedforward: p_ff,
                    feedback_raw: raw,
                    feedback: fb,
                    saturated,
                    feedforward_infeasible: infeasible,
                })
            }
        }
    }
}

/// Outcome of checking a reference against the admissible interval and band.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceReport {
    pub samples: usize,
    /// `(min(2, alpha) / 4p*) min(1, (P_max - P_min)/2)`.
    pub reference_bound: f64,
    pub bound_violations: usize,
    pub band_violations: usize,
    pub first_violation: Option<(f64, String)>,
}

impl ReferenceReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Samples `y_d` and `P_FF` at `times` against the admissibility conditions.
pub fn validate_reference<S: Scalar, E: Fn(S) -> EnvSample<S>>(
    spec: &TrackingSpec<S>,
    env: E,
    times: &[S],
) -> ReferenceReport {
    let bound = spec.reference_bound();
    let mut report = ReferenceReport {
        samples: times.len(),
        reference_bound: bound.as_f64(),
        bound_violations: 0,
        band_violations: 0,
        first_violation: None,
    };
    for &t in times {
        let y_d = spec.reference.value(t);
        let mut note = None;
        if !(y_d > S::zero() && y_d <= bound) {
            report.bound_violations += 1;
            note = Some(format!("y_d = {y_d} outside (0, {bound}]"));
        }
        match spec.feedforward(t, &env(t)) {
            Ok(p_ff) => {
                let (lo, hi) = spec.feedforward_band(y_d);
                if !(lo <= p_ff && p_ff <= hi) {
                    report.band_violations += 1;
                    note.get_or_insert_with(|| format!("P_FF = {p_ff} outside [{lo}, {hi}]"));
                }
            }
            Err(e) => {
                report.band_violations += 1;
                note.get_or_insert_with(|| e.to_string());
            }
        }
        if let Some(n) = note {
            report.first_violation.get_or_insert((t.as_f64(), n));
        }
    }
    report
}
