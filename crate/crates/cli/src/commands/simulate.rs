use std::path::{Path, PathBuf};

use larva_core::{ControllerKind, Scalar, ScenarioConfig};

use super::{manifest_for, precision_name};
use crate::pipeline::{load, run_closed_loop, RunReport};
use crate::svg::{emit_svg, Channel};
use crate::table::Table;
use crate::{CliResult, Precision, RunOptions, SimulateArgs, TrackArgs};

pub fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    execute(&args.run, args.controller, "simulate")
}

pub fn run_track(args: &TrackArgs) -> CliResult<()> {
    execute(&args.run, Some(ControllerKind::Tracking), "track")
}

fn execute(opts: &RunOptions, controller: Option<ControllerKind>, subcommand: &'static str) -> CliResult<()> {
    let cfg = load(&opts.scenario, opts.intervals, opts.horizon)?;
    let kind = controller.unwrap_or(cfg.control.variant);
    match opts.precision {
        Precision::F64 => execute_as::<f64>(opts, &cfg, kind, subcommand),
        Precision::F32 => execute_as::<f32>(opts, &cfg, kind, subcommand),
    }
}

fn resolve(flag: &Option<PathBuf>, configured: &Option<String>, scenario: &Path) -> Option<PathBuf> {
    flag.clone().or_else(|| {
        configured.as_ref().map(|p| {
            let p = PathBuf::from(p);
            match scenario.parent() {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            }
        })
    })
}

fn execute_as<S: Scalar>(opts: &RunOptions, cfg: &ScenarioConfig, kind: ControllerKind, subcommand: &'static str) -> CliResult<()> {
    let diag = opts.diag || cfg.output.diag;
    let out = resolve(&opts.out, &cfg.output.csv, &opts.scenario);
    let svg = resolve(&opts.svg, &cfg.output.svg, &opts.scenario);
    let report = run_closed_loop::<S>(cfg, kind, diag)?;

    let mut m = manifest_for(&opts.scenario, cfg, subcommand);
    m.controller = Some(kind.as_str().to_string());
    m.precision = precision_name(opts.precision);
    m.outputs.extend(out.clone());
    m.outputs.extend(svg.clone());
    let st = &report.steady;
    m.field("zeta_I", st.zeta_aquatic)
        .field("y_star", st.y_star)
        .field("k_I", st.aquatic_mass)
        .field("P_star", st.p_star)
        .field("horizon", cfg.horizon)
        .field("da", st.grid.da());
    for w in &report.series.warnings {
        m.field("warning", w);
    }
    if let Some(d) = &report.diagnostics {
        m.field("sigma_I", d.sigma)
            .field("gamma1", d.gamma1)
            .field("region_constant", d.region_constant)
            .field("positive_definite_everywhere", d.positive_definite)
            .field("control_positive", d.control_positive);
    }
    if let Some(t) = &report.tracking {
        let c = &t.constants;
        m.field("saturation_fraction", report.series.saturation_fraction())
            .field("delta", c.delta)
            .field("mu1", c.mu1)
            .field("mu2", c.mu2)
            .field("L_proof", c.l_proof)
            .field("L_used", c.l_used)
            .field("L_fallback", c.fallback);
        match &t.certificate {
            Ok(cert) => {
                m.field("envelope_holds", cert.envelope_holds)
                    .field("amplitude_envelope_holds", cert.amplitude_envelope_holds)
                    .field("max_W_increase", cert.max_w_increase);
            }
            Err(e) => {
                m.field("certificate", e);
            }
        }
    }

    let table = build_table(&report);
    table.write(&m, out.as_deref())?;
    if let Some(path) = &svg {
        let times: Vec<f64> = report.series.times.iter().map(|t| t.as_f64()).collect();
        let to_f64 = |v: &[S]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        let channels = if report.tracking.is_some() {
            vec![
                Channel::new("y", to_f64(&report.series.y)),
                Channel::new("y_d", to_f64(&report.series.reference)),
            ]
        } else {
            vec![Channel::new("eta", to_f64(&report.series.eta))]
        };
        let title = format!("{} ({} control)", cfg.name, kind.as_str());
        emit_svg(path, &title, "t", &times, &channels)?;
    }
    if out.is_some() {
        summarize(cfg, kind, &report);
    }
    Ok(())
}

fn build_table<S: Scalar>(r: &RunReport<S>) -> Table {
    let s = &r.series;
    let mut t = Table::new();
    t.push("t", &s.times)
        .push("eta", &s.eta)
        .push("y", &s.y)
        .push("P", s.control.iter().map(|c| c.total));
    if r.tracking.is_some() {
        t.push("y_d", &s.reference)
            .push("P_FF", s.control.iter().map(|c| c.feedforward))
            .push("P_FB_raw", s.control.iter().map(|c| c.feedback_raw))
            .push("P_FB_sat", s.control.iter().map(|c| c.feedback))
            .push("saturated", s.control.iter().map(|c| u8::from(c.saturated)));
    }
    if let Some(d) = &r.diagnostics {
        t.push("V_I", d.samples.iter().map(|x| x.v_i))
            .push("G_I", d.samples.iter().map(|x| x.g_i))
            .push("V_total", d.samples.iter().map(|x| x.v_total))
            .push(
                "lambda_min",
                d.samples.iter().map(|x| x.lambda_min.map_or("nan".to_string(), |l| l.to_string())),
            )
            .push("region_A", d.samples.iter().map(|x| u8::from(x.region_a_member)));
        if r.tracking.is_some() {
            t.push("W", d.samples.iter().map(|x| x.w.map_or("nan".to_string(), |w| w.to_string())));
        }
    }
    t
}

fn summarize<S: Scalar>(cfg: &ScenarioConfig, kind: ControllerKind, r: &RunReport<S>) {
    let s = &r.series;
    let last = s.len() - 1;
    print!(
        "{} [{}]: {} steps, eta(T) = {:.6e}, y(T) = {:.6e}",
        cfg.name,
        kind.as_str(),
        last,
        s.eta[last].as_f64(),
        s.y[last].as_f64()
    );
    if r.tracking.is_some() {
        let err = s.tracking_error();
        print!(
            ", |ln(y/y_d)|(T) = {:.6e}, saturated {:.1}%",
            err[last].as_f64(),
            100.0 * s.saturation_fraction()
        );
    }
    println!();
    for w in cfg.warnings.iter().chain(&s.warnings) {
        println!("  warning: {w}");
    }
}
