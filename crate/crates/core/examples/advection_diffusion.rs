//! Solves the advection-diffusion state equation for a manufactured
//! solution and prints the L2 error on three grids.

use std::f64::consts::PI;

use slip::grid::GridSpec;
use slip::pde::{PdeSetup, ScalarField};

fn main() -> slip::Result<()> {
    let eps = 1.5e-2;
    let b = [(PI / 32.0).cos(), (PI / 32.0).sin()];
    let exact = |p: [f64; 2]| (PI * p[0] / 2.0).sin() * (PI * p[1]).sin();
    // -eps Lap y + b . grad y for the exact solution.
    let source = |p: [f64; 2]| {
        let (sx, cx) = ((PI * p[0] / 2.0).sin(), (PI * p[0] / 2.0).cos());
        let (sy, cy) = ((PI * p[1]).sin(), (PI * p[1]).cos());
        eps * (PI * PI / 4.0 + PI * PI) * sx * sy + b[0] * PI / 2.0 * cx * sy + b[1] * PI * sx * cy
    };
    let mut prev: Option<f64> = None;
    for n in [16, 32, 64] {
        let grid = GridSpec::unit(n, n)?;
        let setup = PdeSetup::without_peclet_guard(eps, b, grid)?;
        let system = setup.assemble()?;
        let w = ScalarField::from_fn(grid, source)?;
        let y = system.solve_nodal(w.values());
        let err = ScalarField::from_fn(grid, exact)?
            .values()
            .iter()
            .zip(y.values())
            .zip(system.mass())
            .map(|((a, b), m)| m * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let order = prev.map(|e| (e / err).log2());
        println!("n = {n:3}  Peclet = {:.3}  L2 error = {err:.3e}  order = {order:.3?}", setup.peclet());
        prev = Some(err);
    }
    Ok(())
}
