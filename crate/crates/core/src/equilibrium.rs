//! Steady state of the age-structured model: growth exponents, boundary
//! births, equilibrium profiles, renewal kernels and the adjoint weight.

use crate::config::{sample_rates, AgeGrid, EnvSample, ScenarioConfig, TabulatedRates};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, trapezoid, trapezoid_product};
use crate::scalar::Scalar;

const MAX_ITER: usize = 200;
const DAMPING: f64 = 0.5;

/// Equilibrium of the model together with every derived kernel and scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState<S> {
    pub grid: AgeGrid<S>,
    pub p_star: S,
    pub means: EnvSample<S>,
    pub sex_ratio: S,
    /// Rates sampled at the equilibrium density and male pressure.
    pub rates: TabulatedRates<S>,
    pub zeta_aquatic: S,
    pub zeta_female: S,
    pub zeta_male: S,
    pub aquatic_births: S,
    pub female_births: S,
    pub male_births: S,
    pub aquatic_profile: Vec<S>,
    pub female_profile: Vec<S>,
    pub male_profile: Vec<S>,
    /// `∫ I*`.
    pub aquatic_mass: S,
    /// `∫ w I*`, the equilibrium emergence output.
    pub y_star: S,
    /// `I*(a) / y*`.
    pub p_profile: Vec<S>,
    /// `w(a) I*(a) / y*`.
    pub p_tilde: Vec<S>,
    /// `∫ p = k_I / y*`.
    pub p_star_ratio: S,
    /// Normalized `beta F*`: weights female histories in aquatic births.
    pub female_kernel: Vec<S>,
    /// Normalized `w I*`: weights aquatic histories in adult births.
    pub emergence_kernel: Vec<S>,
    /// `I* / k_I`.
    pub aquatic_kernel: Vec<S>,
    pub adjoint: Vec<S>,
    /// `∫ lambda M*`.
    pub m_star: S,
}

impl<S: Scalar> SteadyState<S> {
    /// `Gamma* gamma* / K*`.
    pub fn logistic_coefficient(&self) -> S {
        self.means.logistic_coefficient()
    }

    /// `<pi0, I>` for a profile on the same grid.
    pub fn project(&self, aquatic: &[S]) -> S {
        trapezoid_product(&self.adjoint, aquatic, self.grid.da())
    }
}

/// `exp(-∫_0^a (mu + zeta))` on the grid, by cumulative trapezoid.
pub fn survival_profile<S: Scalar>(zeta: S, mu: &[S], grid: &AgeGrid<S>) -> Vec<S> {
    let cum = cumulative_trapezoid(mu, grid.da());
    cum.iter()
        .enumerate()
        .map(|(j, &c)| (-(c + zeta * grid.node(j))).exp())
        .collect()
}

/// `r ∫ w Ĩ ∫ beta F̃ - 1` for given exponents and tabulated rates.
pub fn residual_from_rates<S: Scalar>(
    zeta_aquatic: S,
    zeta_female: S,
    rates: &TabulatedRates<S>,
    grid: &AgeGrid<S>,
    sex_ratio: S,
) -> S {
    let da = grid.da();
    let si = survival_profile(zeta_aquatic, &rates.mu_aquatic, grid);
    let sf = survival_profile(zeta_female, &rates.mu_female, grid);
    sex_ratio * trapezoid_product(&rates.w, &si, da) * trapezoid_product(&rates.beta, &sf, da) - S::one()
}

/// Characteristic residual with the scenario's rates at zero density and pressure.
pub fn characteristic_residual<S: Scalar>(zeta_aquatic: S, zeta_female: S, config: &ScenarioConfig) -> Result<S> {
    let grid = config.grid_as::<S>();
    let rates = sample_rates(&config.rates, &grid, S::zero(), S::zero())?;
    Ok(residual_from_rates(
        zeta_aquatic,
        zeta_female,
        &rates,
        &grid,
        S::lit(config.rates.sex_ratio()),
    ))
}

/// Aquatic boundary births `K*(zeta_I + Gamma* - P*) / (Gamma* gamma* ∫Ĩ)`.
pub fn aquatic_births<S: Scalar>(zeta_aquatic: S, p_star: S, means: &EnvSample<S>, survival_integral: S) -> S {
    means.carrying_capacity * (zeta_aquatic + means.growth_rate - p_star)
        / (means.growth_rate * means.competition * survival_integral)
}

/// Adjoint weight `pi0(a) = ∫_a^A beta(s) exp(-∫_a^s (zeta + mu)) ds`, trapezoid on the grid.
pub fn adjoint_profile<S: Scalar>(zeta_aquatic: S, mu: &[S], beta: &[S], grid: &AgeGrid<S>) -> Vec<S> {
    let n = grid.len();
    let da = grid.da();
    let cum = cumulative_trapezoid(mu, da);
    let hazard: Vec<S> = (0..n).map(|j| cum[j] + zeta_aquatic * grid.node(j)).collect();
    // tail[j] = sum_{i >= j} c_i beta_i exp(-(C_i - C_j)), with c_n = 1/2.
    let mut out = vec![S::zero(); n];
    let mut tail = S::half() * beta[n - 1];
    for j in (0..n - 1).rev() {
        tail = beta[j] + (hazard[j] - hazard[j + 1]).exp() * tail;
        out[j] = da * (tail - S::half() * beta[j]);
    }
    out
}

/// Adjoint weight of a solved steady state.
pub fn adjoint_eigenfunction<S: Scalar>(steady: &SteadyState<S>) -> Vec<S> {
    adjoint_profile(steady.zeta_aquatic, &steady.rates.mu_aquatic, &steady.rates.beta, &steady.grid)
}

fn tolerance<S: Scalar>() -> S {
    S::lit(1e-12).max(S::epsilon() * S::lit(16.0))
}

/// Solves `z = c ∫ exp(-∫mu - z a)`, the adult exponent closure, for `c >= 0`.
fn adult_exponent<S: Scalar>(c: S, mu: &[S], grid: &AgeGrid<S>) -> Result<S> {
    let da = grid.da();
    let mass = |z: S| trapezoid(&survival_profile(z, mu, grid), da);
    if c == S::zero() {
        return Ok(S::zero());
    }
    let tol = tolerance::<S>();
    let damping = S::lit(DAMPING);
    let mut z = S::zero();
    for _ in 0..MAX_ITER {
        let next = damping * z + (S::one() - damping) * c * mass(z);
        if !next.is_finite() {
            break;
        }
        if (next - z).abs() <= tol * (S::one() + next.abs()) {
            return Ok(next);
        }
        z = next;
    }
    // z - c * mass(z) is increasing and changes sign on [0, c * mass(0)].
    let (mut lo, mut hi) = (S::zero(), c * mass(S::zero()));
    if !hi.is_finite() {
        return Err(Error::InnerDivergence(format!("adult exponent closure with c = {c}")));
    }
    for _ in 0..MAX_ITER {
        let mid = S::half() * (lo + hi);
        if mid - c * mass(mid) > S::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol * (S::one() + mid.abs()) {
            break;
        }
    }
    Ok(S::half() * (lo + hi))
}

struct Branch<S> {
    survival_aquatic: Vec<S>,
    births: S,
    zeta_female: S,
}

fn branch<S: Scalar>(
    zeta_aquatic: S,
    p_star: S,
    means: &EnvSample<S>,
    rates: &TabulatedRates<S>,
    grid: &AgeGrid<S>,
    sex_ratio: S,
) -> Result<Branch<S>> {
    let da = grid.da();
    let survival_aquatic = survival_profile(zeta_aquatic, &rates.mu_aquatic, grid);
    let births = aquatic_births(zeta_aquatic, p_star, means, trapezoid(&survival_aquatic, da));
    let female_births = sex_ratio * births * trapezoid_product(&rates.w, &survival_aquatic, da);
    let zeta_female = adult_exponent(means.competition * female_births, &rates.mu_female, grid)?;
    Ok(Branch {
        survival_aquatic,
        births,
        zeta_female,
    })
}

fn residual_on_branch<S: Scalar>(
    zeta_aquatic: S,
    p_star: S,
    means: &EnvSample<S>,
    rates: &TabulatedRates<S>,
    grid: &AgeGrid<S>,
    sex_ratio: S,
) -> Result<S> {
    let b = branch(zeta_aquatic, p_star, means, rates, grid, sex_ratio)?;
    Ok(residual_from_rates(zeta_aquatic, b.zeta_female, rates, grid, sex_ratio))
}

/// Root of the characteristic residual along the closure branch, for fixed rates.
fn solve_aquatic_exponent<S: Scalar>(
    p_star: S,
    means: &EnvSample<S>,
    rates: &TabulatedRates<S>,
    grid: &AgeGrid<S>,
    sex_ratio: S,
) -> Result<S> {
    let res = |z: S| residual_on_branch(z, p_star, means, rates, grid, sex_ratio);
    // Below P* - Gamma* the aquatic births would be negative.
    let lo0 = p_star - means.growth_rate;
    let r_lo = res(lo0)?;
    if !(r_lo > S::zero()) {
        return Err(Error::NegativeEquilibrium(format!(
            "characteristic residual {r_lo} <= 0 at zeta_I = P* - Gamma* = {lo0}; \
             an equilibrium would need P* >= zeta_I + Gamma*"
        )));
    }
    let mut hi = lo0.max(S::zero()) + S::lit(10.0);
    let mut r_hi = res(hi)?;
    let mut expansions = 0;
    while r_hi > S::zero() {
        expansions += 1;
        if expansions > 40 || !hi.is_finite() {
            return Err(Error::NoEquilibrium(format!(
                "characteristic residual stays positive up to zeta_I = {hi}"
            )));
        }
        hi = hi + (hi - lo0);
        r_hi = res(hi)?;
    }
    let mut lo = lo0;
    let tol = tolerance::<S>();
    for _ in 0..400 {
        let mid = S::half() * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if res(mid)? > S::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * (S::one() + mid.abs()) {
            break;
        }
    }
    Ok(S::half() * (lo + hi))
}

fn normalized<S: Scalar>(values: Vec<S>, da: S) -> Vec<S> {
    let mass = trapezoid(&values, da);
    values.into_iter().map(|v| v / mass).collect()
}

fn assemble<S: Scalar>(
    p_star: S,
    means: EnvSample<S>,
    rates: TabulatedRates<S>,
    grid: AgeGrid<S>,
    sex_ratio: S,
) -> Result<SteadyState<S>> {
    let da = grid.da();
    let zeta_aquatic = solve_aquatic_exponent(p_star, &means, &rates, &grid, sex_ratio)?;
    let b = branch(zeta_aquatic, p_star, &means, &rates, &grid, sex_ratio)?;
    let aquatic_profile: Vec<S> = b.survival_aquatic.iter().map(|&s| b.births * s).collect();
    let y_star = trapezoid_product(&rates.w, &aquatic_profile, da);
    let female_births = sex_ratio * y_star;
    let male_births = (S::one() - sex_ratio) * y_star;
    let zeta_female = b.zeta_female;
    let zeta_male = adult_exponent(means.competition * male_births, &rates.mu_male, &grid)?;
    let female_profile: Vec<S> = survival_profile(zeta_female, &rates.mu_female, &grid)
        .into_iter()
        .map(|s| female_births * s)
        .collect();
    let male_profile: Vec<S> = survival_profile(zeta_male, &rates.mu_male, &grid)
        .into_iter()
        .map(|s| male_births * s)
        .collect();
    let aquatic_mass = trapezoid(&aquatic_profile, da);
    if !(aquatic_mass > S::zero() && y_star > S::zero()) {
        return Err(Error::NegativeEquilibrium(format!(
            "degenerate equilibrium: k_I = {aquatic_mass}, y* = {y_star}"
        )));
    }
    let p_profile: Vec<S> = aquatic_profile.iter().map(|&i| i / y_star).collect();
    let p_tilde: Vec<S> = p_profile.iter().zip(&rates.w).map(|(&p, &w)| p * w).collect();
    let female_kernel = normalized(
        rates.beta.iter().zip(&female_profile).map(|(&b, &f)| b * f).collect(),
        da,
    );
    let emergence_kernel = normalized(
        rates.w.iter().zip(&aquatic_profile).map(|(&w, &i)| w * i).collect(),
        da,
    );
    let aquatic_kernel = aquatic_profile.iter().map(|&i| i / aquatic_mass).collect();
    let adjoint = adjoint_profile(zeta_aquatic, &rates.mu_aquatic, &rates.beta, &grid);
    let m_star = trapezoid_product(&rates.lambda, &male_profile, da);
    Ok(SteadyState {
        grid,
        p_star,
        means,
        sex_ratio,
        zeta_aquatic,
        zeta_female,
        zeta_male,
        aquatic_births: b.births,
        female_births,
        male_births,
        aquatic_profile,
        female_profile,
        male_profile,
        aquatic_mass,
        y_star,
        p_profile,
        p_tilde,
        p_star_ratio: aquatic_mass / y_star,
        female_kernel,
        emergence_kernel,
        aquatic_kernel,
        adjoint,
        m_star,
        rates,
    })
}

/// Computes the equilibrium for control level `p_star`.
///
/// Outer bisection on `zeta_I`; the adult exponents follow from their
/// self-consistency relations. When mortality depends on the aquatic density
/// or egg laying on the male pressure, a relaxed fixed point closes the loop.
pub fn solve_steady_state<S: Scalar>(p_star: S, config: &ScenarioConfig) -> Result<SteadyState<S>> {
    let grid = config.grid_as::<S>();
    let means = config.env.means::<S>();
    let sex_ratio = S::lit(config.rates.sex_ratio());
    if !(p_star > S::zero()) {
        return Err(Error::InvalidParameter(format!("P* must be positive, got {p_star}")));
    }
    if !(means.growth_rate > S::zero() && means.competition > S::zero()) {
        return Err(Error::InvalidParameter(
            "Gamma* and gamma* must be positive for a logistic equilibrium".into(),
        ));
    }
    let coupled = config.rates.density_coupled() || config.rates.pressure_coupled();
    // Fecundity may vanish without males, so the pressure loop starts from unit pressure.
    let m0 = if config.rates.pressure_coupled() { S::one() } else { S::zero() };
    let rates = sample_rates(&config.rates, &grid, S::zero(), m0)?;
    let mut steady = assemble(p_star, means, rates, grid, sex_ratio)?;
    if !coupled {
        return Ok(steady);
    }
    let relax = S::lit(DAMPING);
    let tol = S::lit(1e-10).max(S::epsilon() * S::lit(64.0));
    let (mut p, mut m) = (S::zero(), m0);
    for _ in 0..MAX_ITER {
        let p_next = relax * p + (S::one() - relax) * steady.aquatic_mass;
        let m_next = relax * m + (S::one() - relax) * steady.m_star;
        let done = (p_next - p).abs() <= tol * (S::one() + p_next.abs())
            && (m_next - m).abs() <= tol * (S::one() + m_next.abs());
        p = p_next;
        m = m_next;
        let rates = sample_rates(&config.rates, &grid, p, m)?;
        steady = assemble(p_star, means, rates, grid, sex_ratio)?;
        if done {
            return Ok(steady);
        }
    }
    Err(Error::InnerDivergence(format!(
        "density/pressure fixed point did not settle in {MAX_ITER} iterations (p = {p}, m = {m})"
    )))
}
