use larva_core::control::validate_reference;
use larva_core::diagnostics::{check_conditions, check_h6, search_h6, FALLBACK_SIGMA};
use larva_core::{solve_steady_state, ControllerKind, ControllerSpec};

use super::manifest_for;
use crate::pipeline::load;
use crate::table::Table;
use crate::{CheckArgs, CliResult};

fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn run(args: &CheckArgs) -> CliResult<()> {
    let cfg = load(&args.scenario, None, None)?;
    let st = solve_steady_state::<f64>(cfg.p_star, &cfg)?;
    let da = cfg.grid.da();
    let times: Vec<f64> = (0..=cfg.steps()?).map(|k| k as f64 * da).collect();
    let report = check_conditions::<f64>(&cfg.env, &times);
    let n = report.samples.len();
    let count = |f: &dyn Fn(&larva_core::diagnostics::ConditionSample<f64>) -> bool| {
        report.samples.iter().filter(|s| f(s)).count()
    };

    println!("scenario: {} ({})", cfg.name, args.scenario.display());
    for w in &cfg.warnings {
        println!("warning: {w}");
    }
    println!(
        "equilibrium: zeta_I = {:.6}, zeta_F = {:.6}, y* = {:.6}, k_I = {:.6}, P* = {} (admissible below {:.6})",
        st.zeta_aquatic,
        st.zeta_female,
        st.y_star,
        st.aquatic_mass,
        st.p_star,
        st.zeta_aquatic + st.means.growth_rate
    );
    println!("samples: {n} on [0, {}]", cfg.horizon);
    println!("  K^2 < Gamma gamma:      {}/{n}", count(&|s| s.product_condition));
    println!("  2K < Gamma + gamma:     {}/{n}", count(&|s| s.sum_condition));
    println!("  capacity relation:      {}/{n}", count(&|s| s.relation));
    println!("  implication holds:      {}", flag(report.implication_holds));
    println!("  positive definite:      {}", flag(report.all_positive_definite));
    match (report.delta_lambda, report.lambda_max) {
        (Some(lo), Some(hi)) => println!("  lambda_min range:       [{lo:.6e}, {hi:.6e}]"),
        _ => println!("  lambda_min range:       undefined (not positive definite everywhere)"),
    }
    println!("  region constant C:      {:.6e}", report.region_constant());
    println!("verdict: {}", if report.verdict() { "PASS" } else { "FAIL" });

    let d = &cfg.diagnostics;
    if let (Some(ki), Some(kf)) = (d.kappa_aquatic, d.kappa_female) {
        let sigma = d.sigma.unwrap_or(FALLBACK_SIGMA);
        let h = check_h6(&st.female_kernel, &st.emergence_kernel, ki, kf, sigma, da);
        println!(
            "kernel conditions (kappa_I = {ki}, kappa_F = {kf}, sigma = {sigma}): plain {:.6}/{:.6}, weighted {:.6}/{:.6} -> {}",
            h.aquatic_plain,
            h.female_plain,
            h.aquatic_weighted,
            h.female_weighted,
            if h.feasible() { "feasible" } else { "infeasible" }
        );
    }
    if args.h6_search {
        match search_h6(&st.female_kernel, &st.emergence_kernel, da) {
            Some(h) => println!(
                "kernel search: sigma = {:.6}, kappa_I = {:.2}, kappa_F = {:.2}, weighted {:.6}/{:.6}",
                h.sigma, h.kappa_aquatic, h.kappa_female, h.aquatic_weighted, h.female_weighted
            ),
            None => println!("kernel search: no feasible constants; fallback sigma = {FALLBACK_SIGMA}"),
        }
    }
    if cfg.control.variant == ControllerKind::Tracking {
        let ctl = ControllerSpec::from_config(ControllerKind::Tracking, &cfg, &st)?;
        let spec = ctl.tracking().expect("tracking controller");
        let r = validate_reference(spec, |t| cfg.env.at(t), &times);
        println!(
            "reference: bound {:.6e}, {} bound violations, {} band violations of {}",
            r.reference_bound, r.bound_violations, r.band_violations, r.samples
        );
        if let Some((t, why)) = &r.first_violation {
            println!("  first violation at t = {t}: {why}");
        }
    }

    if let Some(path) = &args.out {
        let mut m = manifest_for(&args.scenario, &cfg, "check");
        m.outputs.push(path.clone());
        m.field("verdict", report.verdict())
            .field("region_constant", report.region_constant());
        let mut t = Table::new();
        let s = &report.samples;
        t.push("t", s.iter().map(|x| x.t))
            .push("K", s.iter().map(|x| x.env.carrying_capacity))
            .push("Gamma", s.iter().map(|x| x.env.growth_rate))
            .push("gamma", s.iter().map(|x| x.env.competition))
            .push("product_condition", s.iter().map(|x| u8::from(x.product_condition)))
            .push("sum_condition", s.iter().map(|x| u8::from(x.sum_condition)))
            .push("relation", s.iter().map(|x| u8::from(x.relation)))
            .push(
                "lambda_min",
                s.iter().map(|x| x.lambda_min.map_or("nan".to_string(), |l| l.to_string())),
            );
        t.write(&m, Some(path))?;
    }
    Ok(())
}
