use larva_core::oracle::compare_with_transform;
use larva_core::{solve_steady_state, ControllerSpec};

use super::manifest_for;
use crate::pipeline::load;
use crate::table::Table;
use crate::{CliResult, OracleArgs};

pub fn run(args: &OracleArgs) -> CliResult<()> {
    let cfg = load(&args.scenario, args.intervals, args.horizon)?;
    let kind = args.controller.unwrap_or(cfg.control.variant);
    let st = solve_steady_state::<f64>(cfg.p_star, &cfg)?;
    let ctl = ControllerSpec::from_config(kind, &cfg, &st)?;
    let cmp = compare_with_transform(&cfg, &st, &ctl, cfg.horizon)?;

    let mut m = manifest_for(&args.scenario, &cfg, "oracle-compare");
    m.controller = Some(kind.as_str().to_string());
    m.outputs.extend(args.out.clone());
    m.field("intervals", cfg.grid.len() - 1)
        .field("max_errI", cmp.max_aquatic())
        .field("max_errF", cmp.max_female())
        .field("max_errM", cmp.max_male())
        .field("max_err_y", cmp.max_output());
    let mut t = Table::new();
    t.push("t", &cmp.times)
        .push("errI", &cmp.err_aquatic)
        .push("errF", &cmp.err_female)
        .push("errM", &cmp.err_male)
        .push("err_y", &cmp.err_output);
    t.write(&m, args.out.as_deref())?;
    if args.out.is_some() {
        println!(
            "{} [{}] n_a = {}: max relative L2 error I {:.3e}, F {:.3e}, M {:.3e}, y {:.3e}",
            cfg.name,
            kind.as_str(),
            cfg.grid.len() - 1,
            cmp.max_aquatic(),
            cmp.max_female(),
            cmp.max_male(),
            cmp.max_output()
        );
    }
    Ok(())
}
