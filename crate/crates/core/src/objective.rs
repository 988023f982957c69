//! Reduced tracking objective `F(v) = 1/2 ||S v - y_d||^2`, its cellwise
//! gradient through the discrete adjoint, and `J = F + alpha TV`.

use crate::control::ControlField;
use crate::error::{Result, SlipError};
use crate::grid::GridSpec;
use crate::pde::{LinearSystem, PdeSetup, Prolongation, ScalarField};

/// Cell-integrated gradient values `c_P`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GradientField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SlipError::Usage(format!(
                "gradient has {} values for {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SlipError::Usage("gradient contains non-finite values".into()));
        }
        Ok(GradientField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        GradientField {
            grid,
            values: vec![0.0; grid.num_cells()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum_P c_P d_P`.
    pub fn dot(&self, direction: &[f64]) -> f64 {
        self.values.iter().zip(direction).map(|(c, d)| c * d).sum()
    }

    /// Point values `c_P / lambda(P)`, the cell averages of the gradient density.
    pub fn densities(&self) -> Vec<f64> {
        let m = self.grid.cell_measure();
        self.values.iter().map(|c| c / m).collect()
    }
}

/// The smooth part `F` of the objective as seen by the trust-region loop.
pub trait SmoothObjective {
    fn control_grid(&self) -> &GridSpec;
    fn f_value(&self, v: &ControlField) -> Result<f64>;
    fn gradient(&self, v: &ControlField) -> Result<GradientField>;
}

/// Tracking-type problem constrained by the advection-diffusion equation.
#[derive(Debug, Clone)]
pub struct Problem {
    system: LinearSystem,
    prolongation: Prolongation,
    control_grid: GridSpec,
    y_d: ScalarField,
    alpha: f64,
}

impl Problem {
    pub fn new(pde: &PdeSetup, control_grid: GridSpec, y_d: ScalarField, alpha: f64) -> Result<Self> {
        Problem::from_system(pde.assemble()?, control_grid, y_d, alpha)
    }

    /// Builds the problem on an already assembled system.
    pub fn from_system(
        system: LinearSystem,
        control_grid: GridSpec,
        y_d: ScalarField,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SlipError::Usage(format!("alpha must be nonnegative, got {alpha}")));
        }
        if y_d.grid() != system.state_grid() {
            return Err(SlipError::Usage("target state is not on the state grid".into()));
        }
        let prolongation = Prolongation::new(&control_grid, system.state_grid())?;
        Ok(Problem {
            system,
            prolongation,
            control_grid,
            y_d,
            alpha,
        })
    }

    /// Problem whose target is the state of a reference control, `y_d = S w`.
    pub fn with_reference(pde: &PdeSetup, reference: &ControlField, alpha: f64) -> Result<Self> {
        let system = pde.assemble()?;
        let y_d = system.solve_state(reference)?;
        Problem::from_system(system, *reference.grid(), y_d, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn target(&self) -> &ScalarField {
        &self.y_d
    }

    fn check(&self, v: &ControlField) -> Result<()> {
        if v.grid() != &self.control_grid {
            return Err(SlipError::Usage("control lives on a different grid".into()));
        }
        Ok(())
    }

    /// State `y = S w` for real-valued cell sources.
    pub fn state_reals(&self, cells: &[f64]) -> ScalarField {
        self.system.solve_nodal(&self.prolongation.apply(cells))
    }

    pub fn state(&self, v: &ControlField) -> Result<ScalarField> {
        self.check(v)?;
        Ok(self.state_reals(&v.as_reals()))
    }

    fn tracking(&self, y: &ScalarField) -> f64 {
        let m = self.system.mass();
        0.5 * y
            .values()
            .iter()
            .zip(self.y_d.values())
            .zip(m)
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum::<f64>()
    }

    /// `F` for real-valued cell sources.
    pub fn f_value_reals(&self, cells: &[f64]) -> f64 {
        self.tracking(&self.state_reals(cells))
    }

    /// `grad F` for real-valued cell sources: `P^T M p` with `A^T p = M (y - y_d)`.
    pub fn gradient_reals(&self, cells: &[f64]) -> Vec<f64> {
        let y = self.state_reals(cells);
        let m = self.system.mass();
        let residual: Vec<f64> = y
            .values()
            .iter()
            .zip(self.y_d.values())
            .zip(m)
            .map(|((a, b), w)| w * (a - b))
            .collect();
        let p = self.system.solve_transposed(&residual);
        let weighted: Vec<f64> = p.iter().zip(m).map(|(p, w)| p * w).collect();
        self.prolongation.apply_transpose(&weighted)
    }

    pub fn j_value(&self, v: &ControlField) -> Result<f64> {
        Ok(self.f_value(v)? + self.alpha * v.tv())
    }
}

impl SmoothObjective for Problem {
    fn control_grid(&self) -> &GridSpec {
        &self.control_grid
    }

    fn f_value(&self, v: &ControlField) -> Result<f64> {
        self.check(v)?;
        Ok(self.f_value_reals(&v.as_reals()))
    }

    fn gradient(&self, v: &ControlField) -> Result<GradientField> {
        self.check(v)?;
        GradientField::new(self.control_grid, self.gradient_reals(&v.as_reals()))
    }
}

/// Linear surrogate `F(v) = sum_P c_P v_P`, with constant gradient `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    c: GradientField,
}

impl LinearObjective {
    pub fn new(c: GradientField) -> Self {
        LinearObjective { c }
    }
}

impl SmoothObjective for LinearObjective {
    fn control_grid(&self) -> &GridSpec {
        self.c.grid()
    }

    fn f_value(&self, v: &ControlField) -> Result<f64> {
        Ok(self.c.dot(&v.as_reals()))
    }

    fn gradient(&self, _v: &ControlField) -> Result<GradientField> {
        Ok(self.c.clone())
    }
}

/// Finite-difference check of `grad F` along one direction.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradientSample {
    pub directional: f64,
    /// Central differences for each step.
    pub finite_differences: Vec<(f64, f64)>,
    pub best_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradientCheck {
    pub samples: Vec<GradientSample>,
    pub max_relative_error: f64,
}

/// Compares `<grad F(v), d>` with central differences of `F(v + h d)` over
/// `steps`, for `count` seeded random labelings `v` and directions
/// `d ~ U[-1, 1]`. Each sample keeps the step with the smallest error.
pub fn check_gradient(
    prob: &Problem,
    labels: &crate::control::LabelSet,
    count: usize,
    steps: &[f64],
    seed: u64,
) -> Result<GradientCheck> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = prob.control_grid.num_cells();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let v: Vec<f64> = (0..n)
            .map(|_| labels.get(rng.gen_range(0..labels.len())) as f64)
            .collect();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let directional: f64 = prob.gradient_reals(&v).iter().zip(&d).map(|(g, d)| g * d).sum();
        let mut fds = Vec::with_capacity(steps.len());
        let mut best = f64::INFINITY;
        for &h in steps {
            let shifted = |k: f64| -> Vec<f64> { v.iter().zip(&d).map(|(a, b)| a + k * b).collect() };
            let fd = (prob.f_value_reals(&shifted(h)) - prob.f_value_reals(&shifted(-h))) / (2.0 * h);
            let err = (fd - directional).abs() / directional.abs().max(f64::MIN_POSITIVE);
            best = best.min(err);
            fds.push((h, fd));
        }
        samples.push(GradientSample {
            directional,
            finite_differences: fds,
            best_relative_error: best,
        });
    }
    let max_relative_error = samples.iter().map(|s| s.best_relative_error).fold(0.0, f64::max);
    Ok(GradientCheck {
        samples,
        max_relative_error,
    })
}

pub fn f_value(prob: &Problem, v: &ControlField) -> Result<f64> {
    prob.f_value(v)
}

pub fn gradient(prob: &Problem, v: &ControlField) -> Result<GradientField> {
    prob.gradient(v)
}

pub fn j_value(prob: &Problem, v: &ControlField) -> Result<f64> {
    prob.j_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::LabelSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels() -> LabelSet {
        LabelSet::new(vec![0, 1, 2]).unwrap()
    }

    fn small_problem(b: [f64; 2], y_d: Option<&ControlField>) -> Problem {
        let state = GridSpec::unit(16, 16).unwrap();
        let pde = PdeSetup::new(0.1, b, state).unwrap();
        match y_d {
            Some(w) => Problem::with_reference(&pde, w, 1e-4).unwrap(),
            None => Problem::new(&pde, GridSpec::unit(4, 4).unwrap(), ScalarField::zeros(state), 1e-4)
                .unwrap(),
        }
    }

    fn random_control(rng: &mut ChaCha8Rng, grid: GridSpec) -> ControlField {
        let values = (0..grid.num_cells()).map(|_| rng.gen_range(0..3)).collect();
        ControlField::new(grid, labels(), values).unwrap()
    }

    #[test]
    fn exact_fit_has_zero_value_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_control(&mut rng, GridSpec::unit(4, 4).unwrap());
        let prob = small_problem([0.6, 0.2], Some(&w));
        assert_eq!(prob.f_value(&w).unwrap(), 0.0);
        assert!(prob.gradient(&w).unwrap().values().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_target_zero_control() {
        let prob = small_problem([0.6, 0.2], None);
        let v = ControlField::constant(GridSpec::unit(4, 4).unwrap(), labels(), 0).unwrap();
        assert_eq!(prob.f_value(&v).unwrap(), 0.0);
        assert_eq!(prob.j_value(&v).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_scaling() {
        let prob = small_problem([0.6, 0.2], None);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(0..2) as f64).collect();
        let twice: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let f1 = prob.f_value_reals(&v);
        assert!(f1 > 0.0);
        assert!((prob.f_value_reals(&twice) - 4.0 * f1).abs() <= 1e-12 * f1);
    }

    #[test]
    fn j_adds_weighted_tv() {
        let prob = small_problem([0.6, 0.2], None);
        let grid = GridSpec::unit(4, 4).unwrap();
        let v = ControlField::from_fn(grid, labels(), |p| if p[0] < 0.5 { 0 } else { 1 }).unwrap();
        let f = prob.f_value(&v).unwrap();
        assert!((prob.j_value(&v).unwrap() - (f + 1e-4 * v.tv())).abs() < 1e-18);
        assert!(prob.j_value(&v).unwrap() > f);
    }

    #[test]
    fn directional_derivative_matches_central_differences() {
        let prob = small_problem([0.6, 0.2], None);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let v: Vec<f64> = (0..16).map(|_| rng.gen_range(0..3) as f64).collect();
            let d: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: f64 = prob.gradient_reals(&v).iter().zip(&d).map(|(a, b)| a * b).sum();
            let t = 1e-3;
            let at = |s: f64| {
                let x: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                prob.f_value_reals(&x)
            };
            let fd = (at(t) - at(-t)) / (2.0 * t);
            assert!((fd - g).abs() <= 1e-8 * g.abs().max(1e-12), "{fd} vs {g}");
        }
    }

    #[test]
    fn gradient_is_reflection_symmetric_without_advection() {
        // Target from a control symmetric under y -> 1 - y.
        let grid = GridSpec::unit(4, 4).unwrap();
        let w = ControlField::from_fn(grid, labels(), |p| if (p[1] - 0.5).abs() < 0.25 { 2 } else { 0 })
            .unwrap();
        let prob = small_problem([0.0, 0.0], Some(&w));
        let v = ControlField::from_fn(grid, labels(), |p| if p[0] > 0.5 { 1 } else { 0 }).unwrap();
        let c = prob.gradient(&v).unwrap();
        let scale = c.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(scale > 0.0);
        for j in 0..4 {
            for i in 0..4 {
                let a = c.values()[grid.index(i, j)];
                let b = c.values()[grid.index(i, 3 - j)];
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn f_is_exactly_quadratic_along_lines() {
        let prob = small_problem([0.6, 0.2], None);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..16).map(|_| rng.gen_range(0..3) as f64).collect();
        let d: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let at = |s: f64| {
            let x: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            prob.f_value_reals(&x)
        };
        let (f0, f1, f2) = (at(0.0), at(1.0), at(2.0));
        // Newton form through t = 0, 1, 2, evaluated at t = 3.
        let predicted = f0 + 3.0 * (f1 - f0) + 3.0 * (f2 - 2.0 * f1 + f0);
        let actual = at(3.0);
        assert!((predicted - actual).abs() <= 1e-9 * actual.abs());
    }

    #[test]
    fn linear_objective() {
        let grid = GridSpec::unit(2, 1).unwrap();
        let c = GradientField::new(grid, vec![1.0, -2.0]).unwrap();
        let lin = LinearObjective::new(c.clone());
        let v = ControlField::new(grid, labels(), vec![2, 1]).unwrap();
        assert_eq!(lin.f_value(&v).unwrap(), 0.0);
        assert_eq!(lin.gradient(&v).unwrap(), c);
        assert!(GradientField::new(grid, vec![1.0]).is_err());
    }
}
