//! Compares the adjoint gradient of the tracking functional with central
//! finite differences along random directions.

use std::f64::consts::PI;

use slip::control::{ControlField, LabelSet};
use slip::grid::GridSpec;
use slip::objective::{check_gradient, Problem};
use slip::pde::PdeSetup;

fn main() -> slip::Result<()> {
    let control = GridSpec::unit(16, 16)?;
    let labels = LabelSet::new(vec![0, 1, 2])?;
    let pde = PdeSetup::without_peclet_guard(1.5e-2, [(PI / 32.0).cos(), (PI / 32.0).sin()], GridSpec::unit(32, 32)?)?;
    let reference = ControlField::from_fn(control, labels.clone(), |p| i64::from(p[0] > 0.5) + i64::from(p[1] > 0.5))?;
    let prob = Problem::with_reference(&pde, &reference, 1e-4)?;
    let report = check_gradient(&prob, &labels, 20, &[1e-3, 1e-4, 1e-5], 42)?;
    for (k, s) in report.samples.iter().enumerate() {
        println!("sample {k:2}: <g, d> = {:+.6e}  best rel. error = {:.2e}", s.directional, s.best_relative_error);
    }
    println!("max relative error = {:.3e}", report.max_relative_error);
    Ok(())
}
