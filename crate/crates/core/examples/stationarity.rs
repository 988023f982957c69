//! Stationarity residuals of the reference control and of a shifted copy for
//! the tracking problem generated by the reference itself.

use std::f64::consts::PI;

use slip::control::{ControlField, LabelSet};
use slip::geometry::{default_dictionary, stationarity_residual, CellInterpolant};
use slip::grid::GridSpec;
use slip::objective::{Problem, SmoothObjective};
use slip::pde::PdeSetup;

fn main() -> slip::Result<()> {
    let control = GridSpec::unit(16, 16)?;
    let labels = LabelSet::new(vec![0, 1])?;
    let disk = |cx: f64| {
        ControlField::from_fn(control, labels.clone(), move |p| i64::from((p[0] - cx).hypot(p[1] - 0.5) < 0.25))
    };
    let reference = disk(0.5)?;
    let pde = PdeSetup::new(1.5e-2, [(PI / 32.0).cos(), (PI / 32.0).sin()], GridSpec::unit(64, 64)?)?;
    let alpha = 1e-4;
    let prob = Problem::with_reference(&pde, &reference, alpha)?;
    for (name, v) in [("reference", reference.clone()), ("shifted", disk(0.5625)?)] {
        let g = CellInterpolant::from_gradient(&prob.gradient(&v)?);
        let dict = default_dictionary(&v);
        let report = stationarity_residual(&v, &|p| g.eval(p), alpha, &dict);
        println!(
            "{name:9}: {} test fields, max normalized residual {:.3e}",
            dict.len(),
            report.max_normalized_residual
        );
    }
    Ok(())
}
