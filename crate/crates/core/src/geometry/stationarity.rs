use serde::Serialize;

use super::field::VectorField;
use crate::control::ControlField;
use crate::grid::{GridSpec, Orientation, Point};
use crate::objective::GradientField;

/// Contribution of one unordered label pair to a test field's two sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTerm {
    pub labels: (i64, i64),
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityTerm {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub normalization: f64,
    pub pairs: Vec<PairTerm>,
}

/// Both sides of the stationarity identity for every test field.
///
/// Interfaces are the staircase facets of the control grid, so these values
/// describe the discrete geometry and are not estimates of the continuum
/// residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub alpha: f64,
    pub terms: Vec<StationarityTerm>,
    pub max_normalized_residual: f64,
}

/// Bilinear interpolation of cell-centered values, constant beyond the
/// outermost centers.
#[derive(Debug, Clone)]
pub struct CellInterpolant {
    grid: GridSpec,
    values: Vec<f64>,
}

impl CellInterpolant {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Self {
        CellInterpolant { grid, values }
    }

    /// The gradient as a density, i.e. divided by the cell measure.
    pub fn from_gradient(g: &GradientField) -> Self {
        Self::new(*g.grid(), g.densities())
    }

    pub fn eval(&self, p: Point) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let axis = |x: f64, h: f64, n: usize| {
            let s = (x / h - 0.5).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n.saturating_sub(2));
            (i, s - i as f64)
        };
        let (i, fx) = axis(p[0], self.grid.hx(), nx);
        let (j, fy) = axis(p[1], self.grid.hy(), ny);
        let at = |a: usize, b: usize| self.values[self.grid.index(a.min(nx - 1), b.min(ny - 1))];
        let bottom = at(i, j) * (1.0 - fx) + at(i + 1, j) * fx;
        let top = at(i, j + 1) * (1.0 - fx) + at(i + 1, j + 1) * fx;
        bottom * (1.0 - fy) + top * fy
    }
}

/// Evaluates `lhs = sum_i nu_i int (-g)(phi . n_i)` and
/// `rhs = alpha sum_{i<j} |nu_i - nu_j| int div_b phi` on the facets of `v`.
/// On a facet with normal `e_k` the boundary divergence is the derivative of
/// the other component along its own axis.
pub fn stationarity_residual(
    v: &ControlField,
    g: &dyn Fn(Point) -> f64,
    alpha: f64,
    dictionary: &[VectorField],
) -> StationarityReport {
    let grid = v.grid();
    let facets: Vec<_> = grid
        .interior_facets()
        .into_iter()
        .filter(|f| v.value(f.cell_a) != v.value(f.cell_b))
        .collect();
    let mut terms = Vec::with_capacity(dictionary.len());
    for phi in dictionary {
        let mut pairs: Vec<PairTerm> = Vec::new();
        for f in &facets {
            let (a, b) = (v.value(f.cell_a), v.value(f.cell_b));
            let m = grid.facet_midpoint(f);
            let val = phi.eval(m);
            let jac = phi.jacobian(m);
            let (flux, div_b) = match f.orientation {
                Orientation::Vertical => (val[0], jac[1][1]),
                Orientation::Horizontal => (val[1], jac[0][0]),
            };
            let lhs = (a - b) as f64 * (-g(m)) * flux * f.measure;
            let rhs = alpha * (a - b).abs() as f64 * div_b * f.measure;
            let key = (a.min(b), a.max(b));
            match pairs.iter_mut().find(|p| p.labels == key) {
                Some(p) => {
                    p.lhs += lhs;
                    p.rhs += rhs;
                }
                None => pairs.push(PairTerm { labels: key, lhs, rhs }),
            }
        }
        pairs.sort_by_key(|p| p.labels);
        let lhs: f64 = pairs.iter().map(|p| p.lhs).sum();
        let rhs: f64 = pairs.iter().map(|p| p.rhs).sum();
        terms.push(StationarityTerm {
            lhs,
            rhs,
            residual: lhs - rhs,
            normalization: phi.sup_norm().max(1.0),
            pairs,
        });
    }
    let max_normalized_residual = terms
        .iter()
        .map(|t| t.residual.abs() / t.normalization)
        .fold(0.0, f64::max);
    StationarityReport {
        alpha,
        terms,
        max_normalized_residual,
    }
}

/// Test fields for [`stationarity_residual`]: on a lattice of spacing
/// `2 max(hx, hy)`, every disk of radius 0.9 spacing that lies inside the
/// domain and touches an interface carries an x- and a y-directed bump.
pub fn default_dictionary(v: &ControlField) -> Vec<VectorField> {
    let grid = v.grid();
    let d = 2.0 * grid.hx().max(grid.hy());
    let r = 0.9 * d;
    let mids: Vec<Point> = grid
        .interior_facets()
        .iter()
        .filter(|f| v.value(f.cell_a) != v.value(f.cell_b))
        .map(|f| grid.facet_midpoint(f))
        .collect();
    let mut out = Vec::new();
    let (kx, ky) = ((grid.lx() / d).ceil() as usize, (grid.ly() / d).ceil() as usize);
    for j in 1..ky {
        for i in 1..kx {
            let c = [i as f64 * d, j as f64 * d];
            if c[0] - r <= 0.0 || c[0] + r >= grid.lx() || c[1] - r <= 0.0 || c[1] + r >= grid.ly() {
                continue;
            }
            if !mids.iter().any(|m| (m[0] - c[0]).hypot(m[1] - c[1]) < r) {
                continue;
            }
            for dir in [[1.0, 0.0], [0.0, 1.0]] {
                if let Ok(phi) = VectorField::directional(c, r, dir, 1.0) {
                    out.push(phi);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::LabelSet;

    fn two_by_two() -> ControlField {
        let g = GridSpec::unit(8, 8).unwrap();
        let l = LabelSet::new(vec![0, 1, 2]).unwrap();
        ControlField::from_fn(g, l, |p| if p[0] < 0.5 { 0 } else if p[1] < 0.5 { 1 } else { 2 }).unwrap()
    }

    #[test]
    fn constant_control_has_zero_sides() {
        let g = GridSpec::unit(8, 8).unwrap();
        let v = ControlField::constant(g, LabelSet::new(vec![0, 1]).unwrap(), 1).unwrap();
        let phi = VectorField::directional([0.5, 0.5], 0.3, [1.0, 0.0], 1.0).unwrap();
        let r = stationarity_residual(&v, &|_| 1.0, 0.1, &[phi]);
        assert_eq!(r.terms[0].lhs, 0.0);
        assert_eq!(r.terms[0].rhs, 0.0);
    }

    #[test]
    fn tangential_field_gives_zero_residual() {
        // Horizontal stripes under an x-directed bump centered on the interface:
        // no flux, and d/dx of the x-component is odd about the center.
        let g = GridSpec::unit(8, 8).unwrap();
        let v = ControlField::from_fn(g, LabelSet::new(vec![0, 1]).unwrap(), |p| i64::from(p[1] > 0.5)).unwrap();
        let phi = VectorField::directional([0.5, 0.5], 0.3, [1.0, 0.0], 1.0).unwrap();
        let r = stationarity_residual(&v, &|_| 0.0, 0.7, &[phi]);
        assert!(r.terms[0].residual.abs() < 1e-15);
    }

    #[test]
    fn residual_is_linear_in_phi() {
        let v = two_by_two();
        let p1 = VectorField::directional([0.5, 0.45], 0.3, [1.0, 0.2], 0.7).unwrap();
        let p2 = VectorField::radial([0.55, 0.6], 0.35, -1.3).unwrap();
        let g = |p: Point| p[0] - 2.0 * p[1] * p[1];
        let (a, b) = (0.6, -2.5);
        let combo = p1.scaled(a).plus(&p2.scaled(b));
        let r = stationarity_residual(&v, &g, 0.3, &[p1, p2, combo]);
        let t = &r.terms;
        assert!((t[2].residual - (a * t[0].residual + b * t[1].residual)).abs() < 1e-10);
    }

    #[test]
    fn swapping_labels_flips_pair_lhs() {
        let v = two_by_two();
        let swapped = v
            .map_labels(v.labels().clone(), |x| match x {
                1 => 2,
                2 => 1,
                other => other,
            })
            .unwrap();
        let dict = default_dictionary(&v);
        assert!(!dict.is_empty());
        let g = |p: Point| (3.0 * p[0]).sin() + p[1];
        let r0 = stationarity_residual(&v, &g, 0.2, &dict);
        let r1 = stationarity_residual(&swapped, &g, 0.2, &dict);
        for (a, b) in r0.terms.iter().zip(&r1.terms) {
            let pa = a.pairs.iter().find(|p| p.labels == (1, 2));
            let pb = b.pairs.iter().find(|p| p.labels == (1, 2));
            if let (Some(pa), Some(pb)) = (pa, pb) {
                assert!((pa.lhs + pb.lhs).abs() < 1e-12);
                assert!((pa.rhs.abs() - pb.rhs.abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interpolant_reproduces_bilinear_data() {
        let g = GridSpec::unit(4, 4).unwrap();
        let f = |p: Point| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        let vals = (0..16).map(|c| f(g.cell_center(c).unwrap())).collect();
        let ip = CellInterpolant::new(g, vals);
        for p in [[0.2, 0.3], [0.5, 0.5], [0.8, 0.13]] {
            assert!((ip.eval(p) - f(p)).abs() < 1e-12);
        }
    }
}
