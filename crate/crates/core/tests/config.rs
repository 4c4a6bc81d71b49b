mod common;

use std::io::Write;

use common::*;
use larva_core::config::{load_scenario, sample_rates, AgeGrid, FunctionSpec, ScenarioConfig};
use larva_core::{env_at, scenarios, EnvSample, Error};

fn write_json(file: &larva_core::config::ScenarioFile) -> tempfile::NamedTempFile {
    let mut tmp = tempfile::NamedTempFile::new().unwrap();
    tmp.write_all(serde_json::to_string_pretty(file).unwrap().as_bytes()).unwrap();
    tmp
}

#[test]
fn reference_file_loads_with_expected_rates() {
    let tmp = write_json(&scenarios::reference());
    let cfg = load_scenario(tmp.path()).unwrap();
    assert_eq!(cfg.grid.max_age(), 4.0);
    let r = &cfg.rates;
    assert_close(r.mu_aquatic(1.0, 0.0), 0.36 * 0.5f64.exp(), 1e-15);
    assert_close(r.mu_female(2.0), 0.36 * 1f64.exp(), 1e-15);
    assert_close(r.beta(2.0, 0.0), 3.68 * (-1f64).exp(), 1e-15);
    assert_close(r.w(1.0), 3.0 / 16.0, 1e-15);
    assert_eq!(r.sex_ratio(), 0.5);
    assert!(cfg.warnings.iter().any(|w| w.starts_with("H2")));
}

#[test]
fn sex_ratio_out_of_range_is_rejected() {
    let mut f = scenarios::reference();
    f.rates.sex_ratio = 1.2;
    let err = ScenarioConfig::from_spec(f).unwrap_err();
    assert!(matches!(err, Error::SexRatio(_)));
    assert!(err.to_string().contains("sex ratio out of range"));
}

#[test]
fn zero_capacity_violates_h1() {
    let f = constant_env_file(0.0, 6.5, 0.14);
    let err = ScenarioConfig::from_spec(f).unwrap_err();
    assert!(err.to_string().contains("H1 violated"), "{err}");
}

#[test]
fn capacity_dipping_to_zero_violates_h1() {
    let mut f = scenarios::reference();
    f.env.carrying_capacity = "K_star*sin(pi*t/40)".into();
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::Hypothesis(_))));
}

#[test]
fn negative_rate_sample_is_rejected() {
    let mut f = scenarios::reference();
    f.rates.w = "(a-1)/16".into();
    match ScenarioConfig::from_spec(f) {
        Err(Error::InvalidRate { name, age, value }) => {
            assert_eq!(name, "w");
            assert_eq!(age, 0.0);
            assert!(value < 0.0);
        }
        other => panic!("expected invalid rate, got {other:?}"),
    }
}

#[test]
fn malformed_json_and_missing_file() {
    assert!(matches!(ScenarioConfig::from_json("{ not json"), Err(Error::Parse(_))));
    assert!(matches!(load_scenario("/nonexistent/scenario.json"), Err(Error::Io { .. })));
    let mut f = scenarios::reference();
    f.schema_version = 7;
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::Parse(_))));
}

#[test]
fn unknown_identifier_in_expression_is_rejected() {
    let mut f = scenarios::reference();
    f.rates.beta = "3.68*exp(-0.5*a)*q".into();
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::InvalidRate { .. })));
    let mut f = scenarios::reference();
    f.env.growth_rate = "Gamma_star*(1+zz)".into();
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::Expression { .. })));
}

#[test]
fn unknown_fields_are_rejected() {
    let mut v = serde_json::to_value(scenarios::reference()).unwrap();
    v["rates"]["mu_X"] = serde_json::json!(1.0);
    assert!(matches!(ScenarioConfig::from_json(&v.to_string()), Err(Error::Parse(_))));
}

#[test]
fn grid_needs_eight_intervals() {
    let mut f = scenarios::reference();
    f.age_grid.intervals = 7;
    assert!(ScenarioConfig::from_spec(f).is_err());
    let g = AgeGrid::<f64>::new(4.0, 8).unwrap();
    assert_eq!(g.len(), 9);
    assert_eq!(g.da(), 0.5);
    assert_eq!(g.node(8), 4.0);
}

#[test]
fn constant_environment_returns_means() {
    let cfg = reference_config();
    for t in [0.0, 1.0, 17.3, 40.0] {
        let e: EnvSample<f64> = env_at(&cfg.env, t);
        assert_eq!(e, cfg.env.means());
    }
    assert!(cfg.env.is_autonomous());
}

#[test]
fn periodic_caption_formulas_evaluate() {
    let cfg = config(scenarios::periodic_static());
    let t_end = cfg.horizon;
    let m = cfg.env.means::<f64>();
    let e0 = env_at::<f64>(&cfg.env, 0.0);
    assert_close(e0.carrying_capacity, m.carrying_capacity, 1e-12);
    let e = env_at::<f64>(&cfg.env, t_end / 8.0);
    assert_close(e.growth_rate, 1.3 * m.growth_rate, 1e-12);
    assert!(!cfg.env.is_autonomous());
}

#[test]
fn missing_means_default_to_time_averages() {
    let mut f = scenarios::reference();
    f.horizon = 40.0;
    f.env.growth_rate = "6.5*(1+0.3*sin(2*pi*t/T))".into();
    f.env.growth_rate_mean = None;
    f.env.carrying_capacity = "55.74+t".into();
    f.env.carrying_capacity_mean = None;
    let cfg = config(f);
    let m = cfg.env.means::<f64>();
    // Trapezoid over a whole period of a sampled sine is exact up to roundoff.
    assert_close(m.growth_rate, 6.5, 1e-12);
    assert_close(m.carrying_capacity, 55.74 + 20.0, 1e-9);
}

#[test]
fn self_referencing_missing_mean_is_rejected() {
    let mut f = scenarios::reference();
    f.env.carrying_capacity_mean = None;
    f.env.carrying_capacity = "K_star*2".into();
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::InvalidParameter(_))));
}

#[test]
fn sampled_rates_match_closed_forms() {
    let cfg = reference_config();
    let grid = AgeGrid::<f64>::new(4.0, 8).unwrap();
    let tab = sample_rates(&cfg.rates, &grid, 0.0, 0.0).unwrap();
    assert_close(tab.w[4], 0.25, 1e-15);
    assert_eq!(tab.w[0], 0.0);
    assert_eq!(tab.w[8], 0.0);
    assert_close(tab.mu_aquatic[0], 0.36, 1e-15);
    assert!(tab.lambda.iter().all(|&l| l == 1.0));
}

#[test]
fn density_coupling_scales_aquatic_mortality() {
    let mut f = scenarios::reference();
    f.rates.density_coupling = 0.5;
    let cfg = config(f);
    let grid = cfg.grid;
    let tab = sample_rates(&cfg.rates, &grid, 2.0, 0.0).unwrap();
    assert_close(tab.mu_aquatic[0], 0.36 * 2.0, 1e-15);
    assert_close(tab.mu_female[0], 0.36, 1e-15);
}

#[test]
fn tabulated_rates_interpolate() {
    let mut f = scenarios::reference();
    f.rates.w = FunctionSpec::Table {
        table: vec![[0.0, 0.0], [2.0, 0.25], [4.0, 0.0]],
    };
    let cfg = config(f);
    assert_close(cfg.rates.w(1.0), 0.125, 1e-15);
    assert_close(cfg.rates.w(3.0), 0.125, 1e-15);
}

#[test]
fn loading_is_deterministic() {
    let tmp = write_json(&scenarios::periodic_stabilizing());
    let a = load_scenario(tmp.path()).unwrap();
    let b = load_scenario(tmp.path()).unwrap();
    let ta = sample_rates(&a.rates, &a.grid, 0.0, 0.0).unwrap();
    let tb = sample_rates(&b.rates, &b.grid, 0.0, 0.0).unwrap();
    assert_eq!(ta, tb);
    let bits = |c: &ScenarioConfig| -> Vec<u64> {
        (0..200).map(|k| env_at::<f64>(&c.env, k as f64 * 0.4).growth_rate.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn all_builtin_scenarios_round_trip_through_json() {
    for f in scenarios::all() {
        let text = serde_json::to_string(&f).unwrap();
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(cfg.spec(), &f);
        assert_eq!(cfg.name, f.name);
    }
}

#[test]
fn tracking_requires_band_and_reference() {
    let mut f = scenarios::tracking_wide();
    f.control.p_min = None;
    assert!(ScenarioConfig::from_spec(f).is_err());
    let mut f = scenarios::tracking_wide();
    f.control.p_min = Some(6.0);
    f.control.p_max = Some(5.0);
    assert!(ScenarioConfig::from_spec(f).is_err());
}

#[test]
fn initial_conditions_validate() {
    let mut f = scenarios::reference();
    f.initial.psi0 = Some(larva_core::config::HistorySpec {
        aquatic: "-1.5".into(),
        female: 0.0.into(),
        male: 0.0.into(),
    });
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::InvalidInitialCondition(_))));
    let mut f = scenarios::reference();
    f.initial.densities = Some(larva_core::config::HistorySpec {
        aquatic: 1.0.into(),
        female: 1.0.into(),
        male: 1.0.into(),
    });
    assert!(matches!(ScenarioConfig::from_spec(f), Err(Error::InvalidInitialCondition(_))));
}

#[test]
fn horizon_must_align_with_age_step() {
    let cfg = reference_config().with_horizon(1.01).unwrap();
    assert!(cfg.steps().is_err());
    let cfg = reference_config().with_horizon(1.0).unwrap();
    assert_eq!(cfg.steps().unwrap(), 32);
}
