//! Stationary advection-diffusion `-eps Lap y + b . grad y = w` on a
//! rectangle, discretized by centered finite differences.
//!
//! The state lives on the nodes of a [`GridSpec`] lattice. Homogeneous
//! Dirichlet conditions hold on `y = 0`, `y = ly` and `x = 0`; on `x = lx` the
//! natural condition `eps dy/dn = 0` is closed with a mirror ghost node. The
//! unknowns are the nodes with `1 <= i <= nx` and `1 <= j <= ny - 1`.
//!
//! Each row is scaled by the trapezoid weight of its node (`hx hy`, halved on
//! the Neumann side), so the discrete system reads `A y = M w` with `M` the
//! diagonal quadrature weights. With this scaling `A` is symmetric when
//! `b = 0` and the tracking functional `1/2 (y - y_d)^T M (y - y_d)` is the
//! trapezoid rule for `1/2 ||y - y_d||^2`.

use std::fmt::Write as _;

use crate::control::ControlField;
use crate::error::{Result, SlipError};
use crate::grid::{GridSpec, Point};

/// Physical parameters and state resolution of the advection-diffusion problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSetup {
    eps: f64,
    b: [f64; 2],
    state_grid: GridSpec,
}

impl PdeSetup {
    /// Validates parameters and enforces mesh Peclet number `|b| h / (2 eps) < 1`.
    pub fn new(eps: f64, b: [f64; 2], state_grid: GridSpec) -> Result<Self> {
        let setup = PdeSetup::without_peclet_guard(eps, b, state_grid)?;
        let peclet = setup.peclet();
        if peclet >= 1.0 {
            return Err(SlipError::Peclet {
                peclet,
                speed: setup.speed(),
                h: setup.mesh_width(),
                eps,
            });
        }
        Ok(setup)
    }

    /// Like [`PdeSetup::new`] but accepts meshes whose Peclet number is at
    /// least one. Centered differences stay consistent there but lose the
    /// discrete maximum principle.
    pub fn without_peclet_guard(eps: f64, b: [f64; 2], state_grid: GridSpec) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(SlipError::Usage(format!("eps must be positive, got {eps}")));
        }
        if !(b[0].is_finite() && b[1].is_finite()) {
            return Err(SlipError::Usage("velocity must be finite".into()));
        }
        if state_grid.ny() < 2 {
            return Err(SlipError::Usage(
                "state grid needs ny >= 2 to have interior nodes".into(),
            ));
        }
        Ok(PdeSetup { eps, b, state_grid })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.b
    }

    pub fn state_grid(&self) -> &GridSpec {
        &self.state_grid
    }

    fn speed(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    fn mesh_width(&self) -> f64 {
        self.state_grid.hx().max(self.state_grid.hy())
    }

    pub fn peclet(&self) -> f64 {
        self.speed() * self.mesh_width() / (2.0 * self.eps)
    }

    pub fn assemble(&self) -> Result<LinearSystem> {
        LinearSystem::assemble(*self)
    }
}

/// Nodal values at the unknown nodes of a state grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_unknowns(&grid) {
            return Err(SlipError::Usage(format!(
                "scalar field has {} values, state grid has {} unknowns",
                values.len(),
                num_unknowns(&grid)
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SlipError::Usage("scalar field contains non-finite values".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; num_unknowns(&grid)],
        }
    }

    /// Samples `f` at the unknown nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = unknown_nodes(&grid).map(|(i, j)| f(node_point(&grid, i, j))).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at lattice node `(i, j)`; Dirichlet nodes are zero.
    pub fn node(&self, i: usize, j: usize) -> f64 {
        match unknown_index(&self.grid, i, j) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    /// Bilinear interpolation of the nodal values, clamped to the domain.
    pub fn eval(&self, p: Point) -> f64 {
        let g = &self.grid;
        let fx = (p[0] / g.hx()).clamp(0.0, g.nx() as f64);
        let fy = (p[1] / g.hy()).clamp(0.0, g.ny() as f64);
        let i = (fx.floor() as usize).min(g.nx() - 1);
        let j = (fy.floor() as usize).min(g.ny() - 1);
        let (sx, sy) = (fx - i as f64, fy - j as f64);
        (1.0 - sx) * (1.0 - sy) * self.node(i, j)
            + sx * (1.0 - sy) * self.node(i + 1, j)
            + (1.0 - sx) * sy * self.node(i, j + 1)
            + sx * sy * self.node(i + 1, j + 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// CSV of all lattice nodes: header `nx,ny,lx,ly`, then rows `j = 0..=ny`
    /// of `nx + 1` values each, Dirichlet nodes included as zeros.
    pub fn to_csv_string(&self) -> String {
        let g = &self.grid;
        let mut out = format!("{},{},{},{}\n", g.nx(), g.ny(), g.lx(), g.ly());
        for j in 0..=g.ny() {
            let row: Vec<String> = (0..=g.nx()).map(|i| self.node(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Reads the format written by [`ScalarField::to_csv_string`]. Values on
    /// Dirichlet nodes are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let ctx = "scalar field csv";
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| SlipError::parse(ctx, "empty file"))?;
        let h: Vec<&str> = header.split(',').map(str::trim).collect();
        if h.len() != 4 {
            return Err(SlipError::parse(ctx, "header must be `nx,ny,lx,ly`"));
        }
        let nx: usize = h[0].parse().map_err(|_| SlipError::parse(ctx, "bad nx"))?;
        let ny: usize = h[1].parse().map_err(|_| SlipError::parse(ctx, "bad ny"))?;
        let lx: f64 = h[2].parse().map_err(|_| SlipError::parse(ctx, "bad lx"))?;
        let ly: f64 = h[3].parse().map_err(|_| SlipError::parse(ctx, "bad ly"))?;
        let grid = GridSpec::new(nx, ny, lx, ly)?;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for (lineno, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| SlipError::parse(ctx, format!("line {}: {e}", lineno + 1)))?;
            if row.len() != nx + 1 {
                return Err(SlipError::parse(
                    ctx,
                    format!("line {}: expected {} values", lineno + 1, nx + 1),
                ));
            }
            nodes.extend(row);
        }
        if nodes.len() != (nx + 1) * (ny + 1) {
            return Err(SlipError::parse(ctx, format!("expected {} rows", ny + 1)));
        }
        let values = unknown_nodes(&grid).map(|(i, j)| nodes[j * (nx + 1) + i]).collect();
        ScalarField::new(grid, values)
    }

    /// ASCII PGM of the nodal values scaled to `0..=255` between min and max.
    pub fn to_pgm_string(&self) -> String {
        let g = &self.grid;
        let all: Vec<f64> = (0..=g.ny())
            .flat_map(|j| (0..=g.nx()).map(move |i| (i, j)))
            .map(|(i, j)| self.node(i, j))
            .collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P2\n{} {}\n255\n", g.nx() + 1, g.ny() + 1);
        for j in (0..=g.ny()).rev() {
            let row: Vec<String> = (0..=g.nx())
                .map(|i| (((self.node(i, j) - lo) / span) * 255.0).round().to_string())
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

pub(crate) fn num_unknowns(grid: &GridSpec) -> usize {
    grid.nx() * (grid.ny() - 1)
}

fn unknown_index(grid: &GridSpec, i: usize, j: usize) -> Option<usize> {
    if i == 0 || i > grid.nx() || j == 0 || j >= grid.ny() {
        None
    } else {
        Some((j - 1) * grid.nx() + (i - 1))
    }
}

fn unknown_nodes(grid: &GridSpec) -> impl Iterator<Item = (usize, usize)> {
    let (nx, ny) = (grid.nx(), grid.ny());
    (1..ny).flat_map(move |j| (1..=nx).map(move |i| (i, j)))
}

fn node_point(grid: &GridSpec, i: usize, j: usize) -> Point {
    [i as f64 * grid.hx(), j as f64 * grid.hy()]
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map(|e| e.1).unwrap_or(0.0)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        CsrMatrix::from_rows(rows)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Lower and upper bandwidth.
    fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}

/// Banded LU factorization with partial pivoting.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    // Row i stores columns i - kl ..= i + kl + ku.
    band: Vec<f64>,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
}

impl BandLu {
    fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            width,
            band: vec![0.0; n * width],
            pivots: vec![0; n],
            multipliers: vec![0.0; n * kl.max(1)],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                *lu.at_mut(i, j) = v;
            }
        }
        let scale = a.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            for i in k + 1..=last_row {
                if lu.at(i, k).abs() > lu.at(p, k).abs() {
                    p = i;
                }
            }
            if lu.at(p, k).abs() <= f64::EPSILON * scale * 1e-3 {
                return Err(SlipError::Singular(k));
            }
            lu.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let tmp = lu.at(k, j);
                    *lu.at_mut(k, j) = lu.at(p, j);
                    *lu.at_mut(p, j) = tmp;
                }
            }
            let pivot = lu.at(k, k);
            for i in k + 1..=last_row {
                let m = lu.at(i, k) / pivot;
                lu.multipliers[k * kl + (i - k - 1)] = m;
                *lu.at_mut(i, k) = 0.0;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let u = lu.at(k, j);
                        *lu.at_mut(i, j) -= m * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.band[i * self.width + (j + self.kl - i)]
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                x[i] -= self.multipliers[k * self.kl + (i - k - 1)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.at(k, j) * x[j];
            }
            x[k] = s / self.at(k, k);
        }
        x
    }
}

/// Assembled operator, its transpose, quadrature weights and factorizations.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    setup: PdeSetup,
    matrix: CsrMatrix,
    transpose: CsrMatrix,
    mass: Vec<f64>,
    lu: BandLu,
    lu_t: BandLu,
}

impl LinearSystem {
    fn assemble(setup: PdeSetup) -> Result<Self> {
        let g = setup.state_grid;
        let nx = g.nx();
        let (hx, hy) = (g.hx(), g.hy());
        let eps = setup.eps;
        let [bx, by] = setup.b;
        let n = num_unknowns(&g);
        let mut rows = Vec::with_capacity(n);
        let mut mass = Vec::with_capacity(n);
        for (i, j) in unknown_nodes(&g) {
            let neumann = i == nx;
            let m = if neumann { 0.5 * hx * hy } else { hx * hy };
            let mut row = Vec::with_capacity(5);
            let mut push = |ii: usize, jj: usize, v: f64| {
                if let Some(k) = unknown_index(&g, ii, jj) {
                    row.push((k, m * v));
                }
            };
            push(i, j, eps * (2.0 / (hx * hx) + 2.0 / (hy * hy)));
            if neumann {
                // Mirror ghost y_{nx+1} = y_{nx-1}: the x-advection difference vanishes.
                push(i - 1, j, -2.0 * eps / (hx * hx));
            } else {
                push(i - 1, j, -eps / (hx * hx) - bx / (2.0 * hx));
                push(i + 1, j, -eps / (hx * hx) + bx / (2.0 * hx));
            }
            push(i, j - 1, -eps / (hy * hy) - by / (2.0 * hy));
            push(i, j + 1, -eps / (hy * hy) + by / (2.0 * hy));
            rows.push(row);
            mass.push(m);
        }
        let matrix = CsrMatrix::from_rows(rows);
        let transpose = matrix.transpose();
        let lu = BandLu::factor(&matrix)?;
        let lu_t = BandLu::factor(&transpose)?;
        Ok(LinearSystem {
            setup,
            matrix,
            transpose,
            mass,
            lu,
            lu_t,
        })
    }

    pub fn setup(&self) -> &PdeSetup {
        &self.setup
    }

    pub fn state_grid(&self) -> &GridSpec {
        &self.setup.state_grid
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn transpose_matrix(&self) -> &CsrMatrix {
        &self.transpose
    }

    /// Trapezoid weights of the unknown nodes.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    fn refine(matrix: &CsrMatrix, lu: &BandLu, rhs: &[f64]) -> Vec<f64> {
        let mut x = lu.solve(rhs);
        let ax = matrix.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        x
    }

    /// Solves `A y = rhs` for an assembled right-hand side.
    pub fn solve_rhs(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim());
        LinearSystem::refine(&self.matrix, &self.lu, rhs)
    }

    /// Solves `A^T p = rhs`.
    pub fn solve_transposed(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim());
        LinearSystem::refine(&self.transpose, &self.lu_t, rhs)
    }

    /// Load vector `M w` for nodal source values.
    pub fn load(&self, w_nodal: &[f64]) -> Vec<f64> {
        w_nodal.iter().zip(&self.mass).map(|(w, m)| w * m).collect()
    }

    /// State for a source given at the unknown nodes.
    pub fn solve_nodal(&self, w_nodal: &[f64]) -> ScalarField {
        let y = self.solve_rhs(&self.load(w_nodal));
        ScalarField {
            grid: self.setup.state_grid,
            values: y,
        }
    }

    /// State for a piecewise-constant control source.
    pub fn solve_state(&self, source: &ControlField) -> Result<ScalarField> {
        let p = Prolongation::new(source.grid(), self.state_grid())?;
        Ok(self.solve_nodal(&p.apply(&source.as_reals())))
    }

    /// Discrete adjoint: solves `A^T p = residual`.
    pub fn solve_adjoint(&self, residual: &ScalarField) -> Result<ScalarField> {
        if residual.grid != self.setup.state_grid {
            return Err(SlipError::Usage("adjoint right-hand side on a foreign grid".into()));
        }
        Ok(ScalarField {
            grid: self.setup.state_grid,
            values: self.solve_transposed(&residual.values),
        })
    }

    /// `||A y - rhs||_inf`.
    pub fn residual_inf(&self, y: &[f64], rhs: &[f64]) -> f64 {
        self.matrix
            .mul_vec(y)
            .iter()
            .zip(rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Free-function forms of the solve operations.
pub fn assemble(setup: &PdeSetup) -> Result<LinearSystem> {
    setup.assemble()
}

pub fn solve_state(system: &LinearSystem, source: &ControlField) -> Result<ScalarField> {
    system.solve_state(source)
}

pub fn solve_adjoint(system: &LinearSystem, residual: &ScalarField) -> Result<ScalarField> {
    system.solve_adjoint(residual)
}

/// Injection of cell values onto the unknown state nodes.
///
/// A node inside a cell takes that cell's value. A node on a cell interface
/// takes the average over the cells whose closure contains it, so the map
/// commutes with reflections of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    num_cells: usize,
    // Per unknown node: (cell, weight) entries.
    entries: Vec<Vec<(usize, f64)>>,
}

impl Prolongation {
    pub fn new(control: &GridSpec, state: &GridSpec) -> Result<Self> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !close(control.lx(), state.lx()) || !close(control.ly(), state.ly()) {
            return Err(SlipError::Usage(format!(
                "control domain {}x{} differs from state domain {}x{}",
                control.lx(),
                control.ly(),
                state.lx(),
                state.ly()
            )));
        }
        let cells_1d = |node: usize, n_state: usize, n_cells: usize| -> Vec<usize> {
            let t = node * n_cells;
            let c = t / n_state;
            if t.is_multiple_of(n_state) && c > 0 && c < n_cells {
                vec![c - 1, c]
            } else {
                vec![c.min(n_cells - 1)]
            }
        };
        let entries = unknown_nodes(state)
            .map(|(i, j)| {
                let xs = cells_1d(i, state.nx(), control.nx());
                let ys = cells_1d(j, state.ny(), control.ny());
                let w = 1.0 / (xs.len() * ys.len()) as f64;
                ys.iter()
                    .flat_map(|&cy| xs.iter().map(move |&cx| (control.index(cx, cy), w)))
                    .collect()
            })
            .collect();
        Ok(Prolongation {
            num_cells: control.num_cells(),
            entries,
        })
    }

    pub fn apply(&self, cells: &[f64]) -> Vec<f64> {
        assert_eq!(cells.len(), self.num_cells);
        self.entries
            .iter()
            .map(|row| row.iter().map(|&(c, w)| w * cells[c]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_cells];
        for (row, &x) in self.entries.iter().zip(nodal) {
            for &(c, w) in row {
                out[c] += w * x;
            }
        }
        out
    }
}
