//! Scenario ingestion: age grid, vital rates, environment signals and the
//! standing hypotheses on them.

mod formula;
mod schema;

use std::path::Path;

pub use formula::{Constants, Formula, FunctionSpec, ScalarFn};
pub use schema::{
    AgeGridSpec, ControlSpec, ControllerKind, DiagnosticsSpec, EnvSpec, HistorySpec, InitialSpec,
    OutputSpec, RatesSpec, ScenarioFile, SCHEMA_VERSION,
};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;
use crate::scalar::Scalar;

/// Uniform age grid on `[0, A]` with nodes `a_j = j * da`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid<S> {
    max_age: S,
    intervals: usize,
}

impl<S: Scalar> AgeGrid<S> {
    pub const MIN_INTERVALS: usize = 8;

    pub fn new(max_age: S, intervals: usize) -> Result<Self> {
        if !(max_age > S::zero()) || !max_age.is_finite() {
            return Err(Error::InvalidParameter(format!("max age must be positive, got {max_age}")));
        }
        if intervals < Self::MIN_INTERVALS {
            return Err(Error::InvalidParameter(format!(
                "age grid needs at least {} intervals, got {intervals}",
                Self::MIN_INTERVALS
            )));
        }
        Ok(AgeGrid { max_age, intervals })
    }

    pub fn max_age(&self) -> S {
        self.max_age
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Number of nodes, `intervals + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn da(&self) -> S {
        self.max_age / S::from_usize_lossy(self.intervals)
    }

    pub fn node(&self, j: usize) -> S {
        S::from_usize_lossy(j) * self.da()
    }

    pub fn nodes(&self) -> Vec<S> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    pub fn cast<T: Scalar>(&self) -> AgeGrid<T> {
        AgeGrid {
            max_age: T::lit(self.max_age.as_f64()),
            intervals: self.intervals,
        }
    }
}

/// Demographic rates of the three cohorts.
#[derive(Debug, Clone)]
pub struct VitalRateSet {
    mu_aquatic: ScalarFn,
    density_coupling: f64,
    mu_female: ScalarFn,
    mu_male: ScalarFn,
    beta: ScalarFn,
    w: ScalarFn,
    lambda: ScalarFn,
    sex_ratio: f64,
    consts: Constants,
}

fn nan_on_err(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

impl VitalRateSet {
    fn from_spec(spec: &RatesSpec, consts: &Constants) -> Result<Self> {
        if !(spec.sex_ratio > 0.0 && spec.sex_ratio < 1.0) {
            return Err(Error::SexRatio(spec.sex_ratio));
        }
        if !(spec.density_coupling.is_finite() && spec.density_coupling >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu_I_density_coupling must be a nonnegative number, got {}",
                spec.density_coupling
            )));
        }
        Ok(VitalRateSet {
            mu_aquatic: ScalarFn::from_spec(&spec.mu_aquatic)?,
            density_coupling: spec.density_coupling,
            mu_female: ScalarFn::from_spec(&spec.mu_female)?,
            mu_male: ScalarFn::from_spec(&spec.mu_male)?,
            beta: ScalarFn::from_spec(&spec.beta)?,
            w: ScalarFn::from_spec(&spec.w)?,
            lambda: ScalarFn::from_spec(&spec.lambda)?,
            sex_ratio: spec.sex_ratio,
            consts: consts.clone(),
        })
    }

    pub fn sex_ratio(&self) -> f64 {
        self.sex_ratio
    }

    pub fn density_coupling(&self) -> f64 {
        self.density_coupling
    }

    /// True when the egg-laying rate depends on the male pressure `m`.
    pub fn pressure_coupled(&self) -> bool {
        self.beta.references("m")
    }

    /// True when aquatic mortality depends on the aquatic density `p`.
    pub fn density_coupled(&self) -> bool {
        self.density_coupling != 0.0
    }

    pub fn mu_aquatic(&self, a: f64, p: f64) -> f64 {
        nan_on_err(self.mu_aquatic.eval("a", a, &[], &self.consts)) * (1.0 + self.density_coupling * p)
    }

    pub fn mu_female(&self, a: f64) -> f64 {
        nan_on_err(self.mu_female.eval("a", a, &[], &self.consts))
    }

    pub fn mu_male(&self, a: f64) -> f64 {
        nan_on_err(self.mu_male.eval("a", a, &[], &self.consts))
    }

    pub fn beta(&self, a: f64, m: f64) -> f64 {
        nan_on_err(self.beta.eval("a", a, &[("m", m)], &self.consts))
    }

    pub fn w(&self, a: f64) -> f64 {
        nan_on_err(self.w.eval("a", a, &[], &self.consts))
    }

    pub fn lambda(&self, a: f64) -> f64 {
        nan_on_err(self.lambda.eval("a", a, &[], &self.consts))
    }

    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mu_I", self.mu_aquatic.describe()),
            ("mu_F", self.mu_female.describe()),
            ("mu_M", self.mu_male.describe()),
            ("beta", self.beta.describe()),
            ("w", self.w.describe()),
            ("lambda", self.lambda.describe()),
            ("r", format!("{}", self.sex_ratio)),
        ]
    }
}

/// Vital rates sampled on the age grid at fixed `(p, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRates<S> {
    pub mu_aquatic: Vec<S>,
    pub mu_female: Vec<S>,
    pub mu_male: Vec<S>,
    pub beta: Vec<S>,
    pub w: Vec<S>,
    pub lambda: Vec<S>,
    pub density: S,
    pub pressure: S,
}

/// Samples every rate at the grid nodes; rejects NaN or negative samples.
pub fn sample_rates<S: Scalar>(rates: &VitalRateSet, grid: &AgeGrid<S>, p: S, m: S) -> Result<TabulatedRates<S>> {
    let (pf, mf) = (p.as_f64(), m.as_f64());
    let nodes: Vec<f64> = grid.nodes().iter().map(|a| a.as_f64()).collect();
    let tab = |name: &str, f: &dyn Fn(f64) -> f64| -> Result<Vec<S>> {
        nodes
            .iter()
            .map(|&a| {
                let v = f(a);
                if v.is_finite() && v >= 0.0 {
                    Ok(S::lit(v))
                } else {
                    Err(Error::InvalidRate {
                        name: name.to_string(),
                        age: a,
                        value: v,
                    })
                }
            })
            .collect()
    };
    Ok(TabulatedRates {
        mu_aquatic: tab("mu_I", &|a| rates.mu_aquatic(a, pf))?,
        mu_female: tab("mu_F", &|a| rates.mu_female(a))?,
        mu_male: tab("mu_M", &|a| rates.mu_male(a))?,
        beta: tab("beta", &|a| rates.beta(a, mf))?,
        w: tab("w", &|a| rates.w(a))?,
        lambda: tab("lambda", &|a| rates.lambda(a))?,
        density: p,
        pressure: m,
    })
}

/// Pointwise values of carrying capacity `K`, growth rate `Gamma` and competition `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample<S> {
    pub carrying_capacity: S,
    pub growth_rate: S,
    pub competition: S,
}

impl<S: Scalar> EnvSample<S> {
    pub fn new(carrying_capacity: S, growth_rate: S, competition: S) -> Self {
        EnvSample {
            carrying_capacity,
            growth_rate,
            competition,
        }
    }

    /// `Gamma * gamma / K`, the coefficient of the logistic term.
    pub fn logistic_coefficient(&self) -> S {
        self.growth_rate * self.competition / self.carrying_capacity
    }

    pub fn cast<T: Scalar>(&self) -> EnvSample<T> {
        EnvSample::new(
            T::lit(self.carrying_capacity.as_f64()),
            T::lit(self.growth_rate.as_f64()),
            T::lit(self.competition.as_f64()),
        )
    }
}

#[derive(Debug, Clone)]
pub struct EnvironmentSignal {
    carrying_capacity: ScalarFn,
    growth_rate: ScalarFn,
    competition: ScalarFn,
    means: EnvSample<f64>,
    consts: Constants,
}

impl EnvironmentSignal {
    /// Autonomous environment equal to its means.
    pub fn constant(carrying_capacity: f64, growth_rate: f64, competition: f64) -> Self {
        EnvironmentSignal {
            carrying_capacity: ScalarFn::Constant(carrying_capacity),
            growth_rate: ScalarFn::Constant(growth_rate),
            competition: ScalarFn::Constant(competition),
            means: EnvSample::new(carrying_capacity, growth_rate, competition),
            consts: Constants::new(),
        }
    }

    pub fn means<S: Scalar>(&self) -> EnvSample<S> {
        self.means.cast()
    }

    pub fn at<S: Scalar>(&self, t: S) -> EnvSample<S> {
        let t = t.as_f64();
        let ev = |f: &ScalarFn| S::lit(nan_on_err(f.eval("t", t, &[], &self.consts)));
        EnvSample::new(ev(&self.carrying_capacity), ev(&self.growth_rate), ev(&self.competition))
    }

    /// True when none of the signals depends on time.
    pub fn is_autonomous(&self) -> bool {
        [&self.carrying_capacity, &self.growth_rate, &self.competition]
            .iter()
            .all(|f| match f {
                ScalarFn::Constant(_) => true,
                ScalarFn::Expression(_) => !f.references("t"),
                ScalarFn::Table(t) => t.len() == 1,
            })
    }

    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("K", self.carrying_capacity.describe()),
            ("Gamma", self.growth_rate.describe()),
            ("gamma", self.competition.describe()),
            ("K_star", format!("{}", self.means.carrying_capacity)),
            ("Gamma_star", format!("{}", self.means.growth_rate)),
            ("gamma_star", format!("{}", self.means.competition)),
        ]
    }
}

/// Pointwise evaluation of `(K, Gamma, gamma)` at time `t`.
pub fn env_at<S: Scalar>(env: &EnvironmentSignal, t: S) -> EnvSample<S> {
    env.at(t)
}

/// Resolved control section of a scenario.
#[derive(Debug, Clone)]
pub struct ControlSection {
    pub p_star: f64,
    pub variant: ControllerKind,
    pub alpha: f64,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub reference: Option<ScalarFn>,
    pub reference_rate: Option<ScalarFn>,
}

/// Initial data, either in transformed coordinates or as densities.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Transformed {
        eta0: f64,
        /// Lag histories `psi_i(-a)` for I, F, M; zero when absent.
        history: Option<[ScalarFn; 3]>,
    },
    Densities([ScalarFn; 3]),
}

/// Three age profiles sampled on a grid (used for histories and densities).
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles<S> {
    pub aquatic: Vec<S>,
    pub female: Vec<S>,
    pub male: Vec<S>,
}

fn tabulate_triple<S: Scalar>(fs: &[ScalarFn; 3], grid: &AgeGrid<S>, consts: &Constants) -> Result<Profiles<S>> {
    let tab = |f: &ScalarFn| -> Result<Vec<S>> {
        grid.nodes()
            .iter()
            .map(|a| f.eval("a", a.as_f64(), &[], consts).map(S::lit))
            .collect()
    };
    Ok(Profiles {
        aquatic: tab(&fs[0])?,
        female: tab(&fs[1])?,
        male: tab(&fs[2])?,
    })
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub description: Vec<String>,
    pub grid: AgeGrid<f64>,
    pub rates: VitalRateSet,
    pub env: EnvironmentSignal,
    pub p_star: f64,
    pub horizon: f64,
    pub initial: InitialCondition,
    pub control: ControlSection,
    pub diagnostics: DiagnosticsSpec,
    pub output: OutputSpec,
    /// Non-fatal findings of the hypothesis checks.
    pub warnings: Vec<String>,
    /// Smallest sampled carrying capacity (the H1 lower bound).
    pub capacity_floor: f64,
    constants: Constants,
    spec: ScenarioFile,
}

const RESERVED: [&str; 8] = ["A", "T", "P_star", "K_star", "Gamma_star", "gamma_star", "y_star", "t"];

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn from_spec(spec: ScenarioFile) -> Result<Self> {
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                spec.schema_version
            )));
        }
        let grid = AgeGrid::new(spec.age_grid.max_age, spec.age_grid.intervals)?;
        if !(spec.horizon.is_finite() && spec.horizon >= 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {}", spec.horizon)));
        }
        if !(spec.rates.sex_ratio > 0.0 && spec.rates.sex_ratio < 1.0) {
            return Err(Error::SexRatio(spec.rates.sex_ratio));
        }
        let p_star = spec.control.p_star;
        if !p_star.is_finite() {
            return Err(Error::InvalidParameter("P_star must be finite".into()));
        }

        let mut consts = Constants::new();
        for (k, v) in &spec.constants {
            if RESERVED.contains(&k.as_str()) || k == "a" || k == "m" {
                return Err(Error::InvalidParameter(format!("constant name `{k}` is reserved")));
            }
            consts.insert(k.clone(), *v);
        }
        consts.insert("A".into(), grid.max_age());
        consts.insert("T".into(), spec.horizon);
        consts.insert("P_star".into(), p_star);

        let mut warnings = Vec::new();
        let times = sample_times(spec.horizon, grid.da());
        let (env, capacity_floor) = build_environment(&spec.env, &times, &mut consts)?;
        let rates = VitalRateSet::from_spec(&spec.rates, &consts)?;
        check_rates(&rates, &grid, &mut warnings)?;
        let control = build_control(&spec.control, &consts)?;
        let initial = build_initial(&spec.initial, &grid, &consts)?;

        for (name, v) in [
            ("sigma_I", spec.diagnostics.sigma),
            ("gamma1", spec.diagnostics.gamma1),
            ("kappa_I", spec.diagnostics.kappa_aquatic),
            ("kappa_F", spec.diagnostics.kappa_female),
            ("delta", spec.diagnostics.delta),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!("diagnostics.{name} must be positive, got {v}")));
                }
            }
        }

        Ok(ScenarioConfig {
            name: spec.name.clone(),
            description: spec.description.clone(),
            grid,
            rates,
            env,
            p_star,
            horizon: spec.horizon,
            initial,
            control,
            diagnostics: spec.diagnostics,
            output: spec.output.clone(),
            warnings,
            capacity_floor,
            constants: consts,
            spec,
        })
    }

    /// The file-level description this config was built from.
    pub fn spec(&self) -> &ScenarioFile {
        &self.spec
    }

    /// Named constants visible to expressions (including `A`, `T`, the means and `P_star`).
    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    /// Rebuilds the scenario on a grid with `intervals` age cells.
    pub fn with_intervals(&self, intervals: usize) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.age_grid.intervals = intervals;
        Self::from_spec(spec)
    }

    /// Rebuilds the scenario with another horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.horizon = horizon;
        Self::from_spec(spec)
    }

    pub fn grid_as<S: Scalar>(&self) -> AgeGrid<S> {
        self.grid.cast()
    }

    /// Number of time steps of size `da` covering the horizon.
    pub fn steps(&self) -> Result<usize> {
        steps_for(self.horizon, self.grid.da())
    }

    /// Samples the lag histories of a transformed initial condition (zero when absent).
    pub fn initial_history<S: Scalar>(&self, grid: &AgeGrid<S>) -> Result<Option<Profiles<S>>> {
        match &self.initial {
            InitialCondition::Transformed { history: Some(h), .. } => tabulate_triple(h, grid, &self.constants).map(Some),
            _ => Ok(None),
        }
    }

    /// Samples initial densities, when given as densities.
    pub fn initial_densities<S: Scalar>(&self, grid: &AgeGrid<S>) -> Result<Option<Profiles<S>>> {
        match &self.initial {
            InitialCondition::Densities(d) => tabulate_triple(d, grid, &self.constants).map(Some),
            _ => Ok(None),
        }
    }
}

/// `T / da` as an integer, requiring `T` to be a multiple of `da`.
pub fn steps_for(horizon: f64, da: f64) -> Result<usize> {
    let ratio = horizon / da;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is not a multiple of the age step {da}"
        )));
    }
    Ok(n as usize)
}

fn sample_times(horizon: f64, da: f64) -> Vec<f64> {
    let n = (horizon / da).ceil() as usize;
    (0..=n).map(|k| (k as f64 * da).min(horizon)).collect()
}

fn build_environment(spec: &EnvSpec, times: &[f64], consts: &mut Constants) -> Result<(EnvironmentSignal, f64)> {
    let k = ScalarFn::from_spec(&spec.carrying_capacity)?;
    let g = ScalarFn::from_spec(&spec.growth_rate)?;
    let c = ScalarFn::from_spec(&spec.competition)?;
    let named = [
        ("K", "K_star", &k, spec.carrying_capacity_mean),
        ("Gamma", "Gamma_star", &g, spec.growth_rate_mean),
        ("gamma", "gamma_star", &c, spec.competition_mean),
    ];
    for (_, mean_name, _, mean) in &named {
        if let Some(v) = mean {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{mean_name} must be finite")));
            }
            consts.insert((*mean_name).to_string(), *v);
        }
    }
    for (sig, mean_name, f, mean) in &named {
        if mean.is_none() {
            if f.references(mean_name) {
                return Err(Error::InvalidParameter(format!(
                    "{sig} references {mean_name}, which must then be given explicitly"
                )));
            }
            let samples: Vec<f64> = times
                .iter()
                .map(|&t| f.eval("t", t, &[], consts))
                .collect::<Result<_>>()?;
            let avg = if samples.len() < 2 {
                samples[0]
            } else {
                let span = times[times.len() - 1] - times[0];
                time_average(times, &samples, span)
            };
            consts.insert((*mean_name).to_string(), avg);
        }
    }
    let means = EnvSample::new(consts["K_star"], consts["Gamma_star"], consts["gamma_star"]);

    let mut floor = f64::INFINITY;
    for &t in times {
        let kv = k.eval("t", t, &[], consts)?;
        let gv = g.eval("t", t, &[], consts)?;
        let cv = c.eval("t", t, &[], consts)?;
        if !(kv.is_finite() && gv.is_finite() && cv.is_finite()) {
            return Err(Error::Hypothesis(format!("environment unbounded at t = {t}")));
        }
        if kv <= 0.0 {
            return Err(Error::Hypothesis(format!("K(t) = {kv} <= 0 at t = {t}")));
        }
        if gv < 0.0 {
            return Err(Error::Hypothesis(format!("Gamma(t) = {gv} < 0 at t = {t}")));
        }
        if cv < 0.0 {
            return Err(Error::Hypothesis(format!("gamma(t) = {cv} < 0 at t = {t}")));
        }
        floor = floor.min(kv);
    }
    if !(means.carrying_capacity > 0.0 && means.growth_rate >= 0.0 && means.competition >= 0.0) {
        return Err(Error::Hypothesis(format!(
            "nominal means must satisfy K* > 0, Gamma* >= 0, gamma* >= 0 (got {}, {}, {})",
            means.carrying_capacity, means.growth_rate, means.competition
        )));
    }
    Ok((
        EnvironmentSignal {
            carrying_capacity: k,
            growth_rate: g,
            competition: c,
            means,
            consts: consts.clone(),
        },
        floor,
    ))
}

/// Trapezoid average over possibly non-uniform sample times.
fn time_average(times: &[f64], values: &[f64], span: f64) -> f64 {
    if span <= 0.0 {
        return values[0];
    }
    let uniform = times.windows(2).all(|w| (w[1] - w[0] - (times[1] - times[0])).abs() < 1e-12);
    let integral = if uniform {
        trapezoid(values, times[1] - times[0])
    } else {
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    };
    integral / span
}

fn check_rates(rates: &VitalRateSet, grid: &AgeGrid<f64>, warnings: &mut Vec<String>) -> Result<()> {
    let tab = sample_rates(rates, grid, 0.0, 0.0)?;
    let da = grid.da();
    let mut finite = Vec::new();
    for (name, mu) in [("mu_I", &tab.mu_aquatic), ("mu_F", &tab.mu_female), ("mu_M", &tab.mu_male)] {
        finite.push(format!("{name}: {:.4}", trapezoid(mu, da)));
    }
    warnings.push(format!(
        "H2: mortality integrals over (0, A) are finite on the grid ({}); divergence at A is not verifiable at grid scale",
        finite.join(", ")
    ));
    Ok(())
}

fn build_control(spec: &ControlSpec, consts: &Constants) -> Result<ControlSection> {
    let alpha = spec.alpha.unwrap_or(1.0);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if let (Some(lo), Some(hi)) = (spec.p_min, spec.p_max) {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("P_min = {lo} must be below P_max = {hi}")));
        }
    }
    let parse = |s: &Option<String>| -> Result<Option<ScalarFn>> {
        s.as_deref()
            .map(|s| Formula::parse(s).map(ScalarFn::Expression))
            .transpose()
    };
    let reference = parse(&spec.y_d)?;
    let reference_rate = parse(&spec.y_d_dot)?;
    for f in reference.iter().chain(reference_rate.iter()) {
        f.eval("t", 0.0, &[("y_star", 1.0)], consts)?;
    }
    if spec.variant == ControllerKind::Tracking {
        if reference.is_none() {
            return Err(Error::InvalidParameter("tracking control needs y_d".into()));
        }
        if spec.p_min.is_none() || spec.p_max.is_none() {
            return Err(Error::InvalidParameter("tracking control needs P_min and P_max".into()));
        }
    }
    Ok(ControlSection {
        p_star: spec.p_star,
        variant: spec.variant,
        alpha,
        p_min: spec.p_min,
        p_max: spec.p_max,
        reference,
        reference_rate,
    })
}

fn triple(h: &HistorySpec) -> Result<[ScalarFn; 3]> {
    Ok([
        ScalarFn::from_spec(&h.aquatic)?,
        ScalarFn::from_spec(&h.female)?,
        ScalarFn::from_spec(&h.male)?,
    ])
}

fn build_initial(spec: &InitialSpec, grid: &AgeGrid<f64>, consts: &Constants) -> Result<InitialCondition> {
    if let Some(d) = &spec.densities {
        if spec.eta0.is_some() || spec.psi0.is_some() {
            return Err(Error::InvalidInitialCondition(
                "give either densities or eta0/psi0, not both".into(),
            ));
        }
        let fs = triple(d)?;
        let tab = tabulate_triple(&fs, grid, consts)?;
        for (name, v) in [("I", &tab.aquatic), ("F", &tab.female), ("M", &tab.male)] {
            if let Some((j, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidInitialCondition(format!(
                    "{name}0({}) = {x} is not a nonnegative number",
                    grid.node(j)
                )));
            }
        }
        return Ok(InitialCondition::Densities(fs));
    }
    let eta0 = spec.eta0.unwrap_or(0.0);
    if !eta0.is_finite() {
        return Err(Error::InvalidInitialCondition("eta0 must be finite".into()));
    }
    let history = spec.psi0.as_ref().map(triple).transpose()?;
    if let Some(h) = &history {
        let tab = tabulate_triple(h, grid, consts)?;
        for (name, v) in [("I", &tab.aquatic), ("F", &tab.female), ("M", &tab.male)] {
            if let Some((j, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > -1.0)) {
                return Err(Error::InvalidInitialCondition(format!(
                    "psi_{name}(-{}) = {x} violates 1 + psi > 0",
                    grid.node(j)
                )));
            }
        }
    }
    Ok(InitialCondition::Transformed { eta0, history })
}
