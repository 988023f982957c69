//! The 16x16 benchmark: track the state of a two-disk reference control,
//! starting from the zero control.

use std::f64::consts::PI;
use std::time::Instant;

use slip::control::{ControlField, LabelSet};
use slip::grid::GridSpec;
use slip::objective::Problem;
use slip::pde::PdeSetup;
use slip::slip::{run, SlipConfig};

fn main() -> slip::Result<()> {
    let control = GridSpec::unit(16, 16)?;
    let labels = LabelSet::new(vec![0, 1, 2])?;
    let reference = ControlField::from_fn(control, labels.clone(), |p| {
        if (p[0] - 0.3).hypot(p[1] - 0.35) < 0.15 {
            2
        } else if (p[0] - 0.65).hypot(p[1] - 0.65) < 0.2 {
            1
        } else {
            0
        }
    })?;
    let pde = PdeSetup::new(1.5e-2, [(PI / 32.0).cos(), (PI / 32.0).sin()], GridSpec::unit(64, 64)?)?;
    let alpha = 1e-4;
    let prob = Problem::with_reference(&pde, &reference, alpha)?;
    let v0 = ControlField::constant(control, labels, 0)?;
    let cfg = SlipConfig {
        delta0: 0.125,
        sigma: 1e-4,
        delta_min: 1.0 / 256.0,
        max_outer: 200,
        node_limit: 100_000,
        seed: 0,
    };
    let start = Instant::now();
    let trace = run(&prob, alpha, &v0, &cfg)?;
    println!("outer inner    delta        pred        ared  acc           J");
    for r in &trace.records {
        println!(
            "{:5} {:5} {:8.5} {:11.3e} {:11.3e}  {:3} {:11.4e}",
            r.outer, r.inner, r.delta, r.pred, r.ared, if r.accepted { "yes" } else { "no" }, r.j_value
        );
    }
    println!(
        "{}: J {:.4e} -> {:.4e} (F = {:.3e}, TV = {}) in {:.1?}",
        trace.termination.as_str(),
        trace.initial_j,
        trace.final_j,
        trace.final_f,
        trace.final_tv,
        start.elapsed()
    );
    println!("L1 distance to reference = {}", trace.final_control.l1_dist(&reference)?);
    print!("{}", trace.final_control.to_csv_string());
    Ok(())
}
