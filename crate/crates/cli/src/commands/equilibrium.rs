use larva_core::equilibrium::{adjoint_eigenfunction, solve_steady_state};
use larva_core::Scalar;

use super::{manifest_for, precision_name};
use crate::pipeline::load;
use crate::table::Table;
use crate::{CliResult, EquilibriumArgs, Precision};

pub fn run(args: &EquilibriumArgs) -> CliResult<()> {
    match args.precision {
        Precision::F64 => run_as::<f64>(args),
        Precision::F32 => run_as::<f32>(args),
    }
}

fn run_as<S: Scalar>(args: &EquilibriumArgs) -> CliResult<()> {
    let cfg = load(&args.scenario, args.intervals, None)?;
    let st = solve_steady_state::<S>(S::lit(cfg.p_star), &cfg)?;
    let mut m = manifest_for(&args.scenario, &cfg, "equilibrium");
    m.precision = precision_name(args.precision);
    m.outputs.extend(args.out.clone());
    m.field("zeta_I", st.zeta_aquatic)
        .field("zeta_F", st.zeta_female)
        .field("zeta_M", st.zeta_male)
        .field("I0", st.aquatic_births)
        .field("F0", st.female_births)
        .field("M0", st.male_births)
        .field("k_I", st.aquatic_mass)
        .field("y_star", st.y_star)
        .field("p_star", st.p_star_ratio)
        .field("P_star", st.p_star)
        .field("admissible_P_star_bound", st.zeta_aquatic + st.means.growth_rate);

    let mut t = Table::new();
    t.push("a", st.grid.nodes())
        .push("I_star", &st.aquatic_profile)
        .push("F_star", &st.female_profile)
        .push("M_star", &st.male_profile)
        .push("g_F", &st.female_kernel)
        .push("g_I", &st.emergence_kernel)
        .push("g", &st.aquatic_kernel)
        .push("pi0_I", adjoint_eigenfunction(&st));
    t.write(&m, args.out.as_deref())?;
    if let Some(p) = &args.out {
        println!(
            "{}: zeta_I = {:.6}, zeta_F = {:.6}, y* = {:.6}, k_I = {:.6} -> {}",
            cfg.name,
            st.zeta_aquatic,
            st.zeta_female,
            st.y_star,
            st.aquatic_mass,
            p.display()
        );
    }
    Ok(())
}
