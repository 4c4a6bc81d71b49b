//! Lyapunov functionals, stability-condition checks and decay envelopes,
//! evaluated numerically along recorded runs.

use crate::config::{EnvSample, EnvironmentSignal};
use crate::control::TrackingSpec;
use crate::dynamics::{DelayLine, OutputSeries, TransformedState};
use crate::equilibrium::SteadyState;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, cumulative_trapezoid, trapezoid, trapezoid_product};
use crate::scalar::Scalar;

/// Relative slack for continuous-time envelope statements.
pub const ENVELOPE_SLACK: f64 = 1e-2;
/// Default decay weight when the kernel search finds nothing feasible.
pub const FALLBACK_SIGMA: f64 = 0.05;

/// `k_I (e^eta - eta - 1)`.
pub fn lyapunov_vi<S: Scalar>(eta: S, aquatic_mass: S) -> S {
    aquatic_mass * (eta.exp_m1() - eta)
}

/// `k_I (e^eta - 1)`.
pub fn lyapunov_phi<S: Scalar>(eta: S, aquatic_mass: S) -> S {
    aquatic_mass * eta.exp_m1()
}

/// Symmetric 2x2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2<S> {
    pub a: S,
    pub b: S,
    pub d: S,
}

impl<S: Scalar> Sym2<S> {
    pub fn quadratic(&self, x: S, y: S) -> S {
        self.a * x * x + S::two() * self.b * x * y + self.d * y * y
    }
}

/// The matrix whose quadratic form in `(phi, phi)` gives `-dV_I/dt`, and its
/// closed-form smallest eigenvalue.
pub fn q_and_lambda_min<S: Scalar>(env: &EnvSample<S>) -> Result<(Sym2<S>, S)> {
    let (k, g, c) = (env.carrying_capacity, env.growth_rate, env.competition);
    let denom = g + c - S::two() * k;
    if denom == S::zero() || !denom.is_finite() {
        return Err(Error::DegenerateQ(denom.as_f64()));
    }
    let q = Sym2 {
        a: g * g * c / (k * denom),
        b: -(g * c) / denom,
        d: g * c * c / (k * denom),
    };
    let gc = g * c;
    let spread = (g - c) * (g - c) + S::lit(4.0) * k * k;
    let lambda = S::two() * gc / k * (gc - k * k) / (denom * (g + c) + (denom * denom * spread).sqrt());
    Ok((q, lambda))
}

/// `K^2 < Gamma gamma` and `2K < Gamma + gamma`.
pub fn positive_definite_conditions<S: Scalar>(env: &EnvSample<S>) -> (bool, bool) {
    let (k, g, c) = (env.carrying_capacity, env.growth_rate, env.competition);
    (k * k < g * c, S::two() * k < g + c)
}

/// `K / (sqrt(Gamma) + 1) < sqrt(gamma + 1)`.
pub fn capacity_relation<S: Scalar>(env: &EnvSample<S>) -> bool {
    env.carrying_capacity / (env.growth_rate.sqrt() + S::one()) < (env.competition + S::one()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSample<S> {
    pub t: S,
    pub env: EnvSample<S>,
    pub product_condition: bool,
    pub sum_condition: bool,
    pub relation: bool,
    /// `None` where `Gamma + gamma - 2K = 0`.
    pub lambda_min: Option<S>,
}

impl<S> ConditionSample<S> {
    pub fn positive_definite(&self) -> bool {
        self.product_condition && self.sum_condition
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<S> {
    pub samples: Vec<ConditionSample<S>>,
    pub all_positive_definite: bool,
    /// Positive definiteness implied the capacity relation at every sample.
    pub implication_holds: bool,
    /// `min_t lambda_min`, when the matrix is positive definite everywhere.
    pub delta_lambda: Option<S>,
    /// `max_t lambda_min`, when the matrix is positive definite everywhere.
    pub lambda_max: Option<S>,
    /// Sup norms over the samples and the smallest carrying capacity.
    pub sup_capacity: S,
    pub sup_growth: S,
    pub sup_competition: S,
    pub capacity_floor: S,
}

impl<S: Scalar> ConditionReport<S> {
    pub fn verdict(&self) -> bool {
        self.all_positive_definite && self.implication_holds
    }

    /// `(||K|| c + ||Gamma|| ||gamma||) / (2 eps)`, with `c` the largest
    /// sampled `lambda_min` (taken as 0 when no sample is positive).
    pub fn region_constant(&self) -> S {
        let c = self
            .samples
            .iter()
            .filter_map(|s| s.lambda_min)
            .fold(S::zero(), |m, l| m.max(l));
        (self.sup_capacity * c + self.sup_growth * self.sup_competition) / (S::two() * self.capacity_floor)
    }
}

/// Samples the positive-definiteness conditions along `times`.
pub fn check_conditions<S: Scalar>(env: &EnvironmentSignal, times: &[S]) -> ConditionReport<S> {
    let mut samples = Vec::with_capacity(times.len());
    let (mut sk, mut sg, mut sc, mut floor) = (S::zero(), S::zero(), S::zero(), S::infinity());
    for &t in times {
        let e = env.at(t);
        let (product_condition, sum_condition) = positive_definite_conditions(&e);
        sk = sk.max(e.carrying_capacity.abs());
        sg = sg.max(e.growth_rate.abs());
        sc = sc.max(e.competition.abs());
        floor = floor.min(e.carrying_capacity);
        samples.push(ConditionSample {
            t,
            env: e,
            product_condition,
            sum_condition,
            relation: capacity_relation(&e),
            lambda_min: q_and_lambda_min(&e).ok().map(|(_, l)| l),
        });
    }
    let all_pd = !samples.is_empty() && samples.iter().all(|s| s.positive_definite());
    let implication_holds = samples.iter().all(|s| !s.positive_definite() || s.relation);
    let lambdas: Vec<S> = samples.iter().filter_map(|s| s.lambda_min).collect();
    let (delta_lambda, lambda_max) = if all_pd && lambdas.len() == samples.len() {
        (
            Some(lambdas.iter().fold(S::infinity(), |m, &l| m.min(l))),
            Some(lambdas.iter().fold(S::neg_infinity(), |m, &l| m.max(l))),
        )
    } else {
        (None, None)
    };
    ConditionReport {
        samples,
        all_positive_definite: all_pd,
        implication_holds,
        delta_lambda,
        lambda_max,
        sup_capacity: sk,
        sup_growth: sg,
        sup_competition: sc,
        capacity_floor: floor,
    }
}

/// `max_a |psi(t-a)| e^{-sigma a} / (1 + max(0, min_a psi(t-a)))`.
pub fn g_i_functional<S: Scalar>(history: &DelayLine<S>, sigma: S, da: S) -> S {
    let weighted = weighted_sup(history, sigma, da);
    weighted / (S::one() + S::zero().max(history.min()))
}

/// `max_a e^{-sigma a} |psi(t-a)| / (1 + min(min_a psi(t-a), 0))`.
pub fn tracking_functional<S: Scalar>(history: &DelayLine<S>, sigma: S, da: S) -> S {
    let weighted = weighted_sup(history, sigma, da);
    weighted / (S::one() + history.min().min(S::zero()))
}

fn weighted_sup<S: Scalar>(history: &DelayLine<S>, sigma: S, da: S) -> S {
    history
        .iter()
        .enumerate()
        .fold(S::zero(), |m, (j, v)| m.max(v.abs() * (-sigma * S::from_usize_lossy(j) * da).exp()))
}

/// `h(p) = ∫_0^p (e^z - 1)^2 / z dz`.
pub fn h_function<S: Scalar>(p: S) -> S {
    if p == S::zero() {
        return S::zero();
    }
    let cutoff = S::lit(1e-8);
    let integrand = move |z: S| {
        if z.abs() < cutoff {
            z
        } else {
            let e = z.exp_m1();
            e * e / z
        }
    };
    let tol = S::lit(1e-13).max(S::epsilon() * S::lit(8.0)) * (S::one() + p * p);
    adaptive_simpson(integrand, S::zero(), p, tol)
}

/// `(h(G), V_I + (gamma1 / sigma) h(G))`.
pub fn h_and_v<S: Scalar>(g: S, v_i: S, gamma1: S, sigma: S) -> (S, S) {
    let h = h_function(g);
    (h, v_i + gamma1 / sigma * h)
}

/// Membership in the region where the stabilizing control provably stays positive.
pub fn region_a_check<S: Scalar>(eta: S, aquatic_mass: S, gamma1: S, region_constant: S, control_positive: bool) -> bool {
    let ck = region_constant * aquatic_mass;
    if !(gamma1 > ck) {
        return false;
    }
    let threshold = (gamma1 / ck).sqrt().ln();
    eta <= threshold && control_positive
}

/// `∫ |g(a) - z kappa ∫_a^A g| e^{sigma a} da` with `z = 1 / ∫ a g`.
pub fn h6_integral<S: Scalar>(kernel: &[S], kappa: S, sigma: S, da: S) -> S {
    let n = kernel.len();
    let ages: Vec<S> = (0..n).map(|j| S::from_usize_lossy(j) * da).collect();
    let z = S::one() / trapezoid_product(&ages, kernel, da);
    let cum = cumulative_trapezoid(kernel, da);
    let total = cum[n - 1];
    let integrand: Vec<S> = (0..n)
        .map(|j| (kernel[j] - z * kappa * (total - cum[j])).abs() * (sigma * ages[j]).exp())
        .collect();
    trapezoid(&integrand, da)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H6Report<S> {
    pub kappa_aquatic: S,
    pub kappa_female: S,
    pub sigma: S,
    /// Integral built on the female kernel `g_F` with `kappa_I`.
    pub aquatic_plain: S,
    /// Integral built on the emergence kernel `g_I` with `kappa_F`.
    pub female_plain: S,
    pub aquatic_weighted: S,
    pub female_weighted: S,
}

impl<S: Scalar> H6Report<S> {
    pub fn plain_feasible(&self) -> bool {
        self.aquatic_plain < S::one() && self.female_plain < S::one()
    }

    pub fn weighted_feasible(&self) -> bool {
        self.aquatic_weighted < S::one() && self.female_weighted < S::one()
    }

    pub fn feasible(&self) -> bool {
        self.kappa_aquatic > S::zero() && self.kappa_female > S::zero() && self.plain_feasible() && self.weighted_feasible()
    }
}

pub fn check_h6<S: Scalar>(
    female_kernel: &[S],
    emergence_kernel: &[S],
    kappa_aquatic: S,
    kappa_female: S,
    sigma: S,
    da: S,
) -> H6Report<S> {
    H6Report {
        kappa_aquatic,
        kappa_female,
        sigma,
        aquatic_plain: h6_integral(female_kernel, kappa_aquatic, S::zero(), da),
        female_plain: h6_integral(emergence_kernel, kappa_female, S::zero(), da),
        aquatic_weighted: h6_integral(female_kernel, kappa_aquatic, sigma, da),
        female_weighted: h6_integral(emergence_kernel, kappa_female, sigma, da),
    }
}

const SIGMA_RANGE: (f64, f64) = (1e-4, 2.0);

fn kappa_grid<S: Scalar>() -> impl Iterator<Item = S> {
    (1..=300).map(|k| S::lit(k as f64 * 0.01))
}

fn best_kappa<S: Scalar>(kernel: &[S], sigma: S, da: S) -> (S, S) {
    kappa_grid()
        .map(|k| (k, h6_integral(kernel, k, sigma, da)))
        .fold((S::zero(), S::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn largest_sigma<S: Scalar>(kernel: &[S], da: S) -> Option<S> {
    let (lo0, hi0) = (S::lit(SIGMA_RANGE.0), S::lit(SIGMA_RANGE.1));
    let ok = |s: S| best_kappa(kernel, s, da).1 < S::one();
    if !ok(lo0) {
        return None;
    }
    if ok(hi0) {
        return Some(hi0);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..60 {
        let mid = S::half() * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Largest decay weight in `[1e-4, 2]` admitting constants that satisfy the
/// kernel conditions, with the constants found on a grid of `kappa` values.
pub fn search_h6<S: Scalar>(female_kernel: &[S], emergence_kernel: &[S], da: S) -> Option<H6Report<S>> {
    let sa = largest_sigma(female_kernel, da)?;
    let sf = largest_sigma(emergence_kernel, da)?;
    let sigma = sa.min(sf);
    let (ka, _) = best_kappa(female_kernel, sigma, da);
    let (kf, _) = best_kappa(emergence_kernel, sigma, da);
    Some(check_h6(female_kernel, emergence_kernel, ka, kf, sigma, da))
}

/// Decay weight for the diagnostics: configured, else the search result, else the fallback.
pub fn default_sigma<S: Scalar>(steady: &SteadyState<S>, configured: Option<f64>) -> S {
    if let Some(s) = configured {
        return S::lit(s);
    }
    search_h6(&steady.female_kernel, &steady.emergence_kernel, steady.grid.da())
        .map(|r| r.sigma)
        .unwrap_or(S::lit(FALLBACK_SIGMA))
}

/// Per-sample diagnostic channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSample<S> {
    pub t: S,
    pub v_i: S,
    pub phi_i: S,
    pub q: Option<Sym2<S>>,
    pub lambda_min: Option<S>,
    pub g_i: S,
    pub h_of_g: S,
    pub v_total: S,
    pub f_func: S,
    /// `v^2 + delta F`, tracking runs only.
    pub w: Option<S>,
    pub region_a_member: bool,
}

/// Constants the per-sample diagnostics need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticParams<S> {
    pub sigma: S,
    pub gamma1: S,
    pub region_constant: S,
    pub delta: Option<S>,
    /// The stabilizing control stayed positive over the run.
    pub control_positive: bool,
}

pub fn lyapunov_sample<S: Scalar>(
    state: &TransformedState<S>,
    steady: &SteadyState<S>,
    env: &EnvSample<S>,
    params: &DiagnosticParams<S>,
) -> LyapunovSample<S> {
    let da = steady.grid.da();
    let eta = state.equilibrium_amplitude(steady.y_star);
    let k = steady.aquatic_mass;
    let v_i = lyapunov_vi(eta, k);
    let qm = q_and_lambda_min(env).ok();
    let g = g_i_functional(&state.aquatic, params.sigma, da);
    let (h, v_total) = h_and_v(g, v_i, params.gamma1, params.sigma);
    let f = tracking_functional(&state.aquatic, params.sigma, da);
    LyapunovSample {
        t: state.t,
        v_i,
        phi_i: lyapunov_phi(eta, k),
        q: qm.map(|x| x.0),
        lambda_min: qm.map(|x| x.1),
        g_i: g,
        h_of_g: h,
        v_total,
        f_func: f,
        w: params.delta.map(|d| state.eta * state.eta + d * f),
        region_a_member: region_a_check(eta, k, params.gamma1, params.region_constant, params.control_positive),
    }
}

/// Constants of the tracking estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingConstants<S> {
    pub sigma: S,
    pub delta: S,
    pub mu1: S,
    pub mu2: S,
    /// `min(mu1, mu2 / delta)` as in the proof.
    pub l_proof: S,
    /// Rate actually used for the envelope.
    pub l_used: S,
    /// The proof's rate was not positive and the zero-history rate was used instead.
    pub fallback: bool,
    pub min_band_distance: S,
    pub max_band_distance: S,
    pub max_reference: S,
}

impl<S: Scalar> TrackingConstants<S> {
    /// Evaluates the constants over a recorded tracking run.
    ///
    /// Band distances are `|P_FF - P_min|` and `|P_max - P_FF|`; `delta` is
    /// 1.1 times its lower bound unless given.
    pub fn compute(
        spec: &TrackingSpec<S>,
        run: &OutputSeries<S>,
        sigma: S,
        max_age: S,
        delta: Option<S>,
    ) -> Result<Self> {
        if run.reference.is_empty() {
            return Err(Error::InvalidParameter("tracking constants need a tracking run".into()));
        }
        let (mut dmin, mut dmax) = (S::infinity(), S::zero());
        for c in &run.control {
            let lo = (c.feedforward - spec.p_min).abs();
            let hi = (spec.p_max - c.feedforward).abs();
            dmin = dmin.min(lo.min(hi));
            dmax = dmax.max(lo.max(hi));
        }
        let y_max = run.reference.iter().fold(S::zero(), |m, &y| m.max(y));
        let p = spec.p_star_ratio;
        let e = S::one().exp();
        let growth = (sigma * max_age).exp();
        let four = S::lit(4.0);
        let eight = S::lit(8.0);
        let delta_bound = growth / sigma * (eight * dmax + S::two() * e * y_max * p);
        let delta = delta.unwrap_or(S::lit(1.1) * delta_bound);
        let gain = spec.alpha.min(S::two());
        let mu1 = gain * S::one().min(dmin) - four * y_max * p;
        let mu2 = sigma * delta - eight * dmax * growth - S::two() * growth * e * y_max * p;
        let l_proof = mu1.min(mu2 / delta);
        let (l_used, fallback) = if mu1 > S::zero() {
            (l_proof, false)
        } else {
            ((gain * S::one().min(dmin)).min(mu2 / delta), true)
        };
        Ok(TrackingConstants {
            sigma,
            delta,
            mu1,
            mu2,
            l_proof,
            l_used,
            fallback,
            min_band_distance: dmin,
            max_band_distance: dmax,
            max_reference: y_max,
        })
    }

    /// `(sqrt(s) + e^{sigma A} s / delta) e^{max(0, s - 1)}`.
    pub fn kappa_w(&self, s: S, max_age: S) -> S {
        (s.sqrt() + (self.sigma * max_age).exp() / self.delta * s) * (s - S::one()).max(S::zero()).exp()
    }
}

/// Per-sample observables of a tracking run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingRecord<S> {
    pub t: S,
    pub v: S,
    pub f_func: S,
    /// `max_a |ln(I / I_d)| = max_a |v + ln(1 + psi_I(t - a))|`.
    pub log_error_sup: S,
}

pub fn tracking_record<S: Scalar>(state: &TransformedState<S>, sigma: S, da: S) -> TrackingRecord<S> {
    let log_error_sup = state
        .aquatic
        .iter()
        .fold(S::zero(), |m, psi| m.max((state.eta + psi.ln_1p()).abs()));
    TrackingRecord {
        t: state.t,
        v: state.eta,
        f_func: tracking_functional(&state.aquatic, sigma, da),
        log_error_sup,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingCertificate<S> {
    pub constants: TrackingConstants<S>,
    /// `W(0)`.
    pub w0: S,
    pub kappa_w0: S,
    pub w: Vec<S>,
    /// `kappa_W(W0) e^{-L t / 4}` per sample.
    pub envelope: Vec<S>,
    pub envelope_holds: bool,
    pub first_envelope_violation: Option<S>,
    /// Largest per-step increase of `W`.
    pub max_w_increase: S,
    /// `v^2 <= W0 e^{max(0, W0 - 1)} e^{-L t / 2}` at every sample.
    pub amplitude_envelope_holds: bool,
}

/// Checks the tracking envelopes on recorded samples. Unavailable when `mu2 <= 0`
/// or no positive rate is available.
pub fn tracking_certificates<S: Scalar>(
    records: &[TrackingRecord<S>],
    constants: &TrackingConstants<S>,
    max_age: S,
) -> Result<TrackingCertificate<S>> {
    if !(constants.mu2 > S::zero()) || !(constants.l_used > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "tracking certificate unavailable: mu2 = {}, L = {}",
            constants.mu2, constants.l_used
        )));
    }
    if records.is_empty() {
        return Err(Error::InvalidParameter("no tracking samples".into()));
    }
    let slack = S::one() + S::lit(ENVELOPE_SLACK);
    let w: Vec<S> = records.iter().map(|r| r.v * r.v + constants.delta * r.f_func).collect();
    let w0 = w[0];
    let kappa_w0 = constants.kappa_w(w0, max_age);
    let four = S::lit(4.0);
    let t0 = records[0].t;
    let envelope: Vec<S> = records
        .iter()
        .map(|r| kappa_w0 * (-constants.l_used * (r.t - t0) / four).exp())
        .collect();
    let first_envelope_violation = records
        .iter()
        .zip(&envelope)
        .find(|(r, &b)| r.log_error_sup > b * slack)
        .map(|(r, _)| r.t);
    let max_w_increase = w
        .windows(2)
        .fold(S::neg_infinity(), |m, p| m.max(p[1] - p[0]));
    let amp0 = w0 * (w0 - S::one()).max(S::zero()).exp();
    let amplitude_envelope_holds = records
        .iter()
        .all(|r| r.v * r.v <= amp0 * (-constants.l_used * (r.t - t0) / S::two()).exp() * slack);
    Ok(TrackingCertificate {
        constants: *constants,
        w0,
        kappa_w0,
        w,
        envelope,
        envelope_holds: first_envelope_violation.is_none(),
        first_envelope_violation,
        max_w_increase,
        amplitude_envelope_holds,
    })
}

/// Checks `G(t) <= G(0) e^{-sigma t} (1 + slack)` on a sampled series.
pub fn g_envelope_holds<S: Scalar>(times: &[S], values: &[S], sigma: S, slack: S) -> bool {
    let (Some(&t0), Some(&g0)) = (times.first(), values.first()) else {
        return true;
    };
    times
        .iter()
        .zip(values)
        .all(|(&t, &g)| g <= g0 * (-sigma * (t - t0)).exp() * (S::one() + slack))
}
