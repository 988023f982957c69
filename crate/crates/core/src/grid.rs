//! Structured rectangular partitions of `(0, lx) x (0, ly)`.
//!
//! Cells are indexed row-major: cell `(i, j)` (column `i`, row `j`) has index
//! `j * nx + i`. Interior facets come in a fixed order (all vertical facets
//! row-major, then all horizontal facets row-major) so every downstream
//! artifact built from them is reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlipError};

/// A point in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    /// Facet separating horizontally adjacent cells; its normal is `e_x`.
    Vertical,
    /// Facet separating vertically adjacent cells; its normal is `e_y`.
    Horizontal,
}

/// An interior interface between two edge-adjacent cells.
///
/// `cell_a < cell_b`; the unit normal pointing out of `cell_a` is `+e_x` for
/// vertical facets and `+e_y` for horizontal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub cell_a: usize,
    pub cell_b: usize,
    pub orientation: Orientation,
    pub measure: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(SlipError::Usage(format!(
                "grid needs at least one cell per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(SlipError::Usage(format!(
                "grid extents must be positive and finite, got {lx}x{ly}"
            )));
        }
        Ok(GridSpec { nx, ny, lx, ly })
    }

    /// `nx x ny` cells on the unit square.
    pub fn unit(nx: usize, ny: usize) -> Result<Self> {
        GridSpec::new(nx, ny, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Lebesgue measure of a single cell.
    pub fn cell_measure(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Lebesgue measure of the whole domain.
    pub fn domain_measure(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn num_facets(&self) -> usize {
        self.nx * (self.ny - 1) + self.ny * (self.nx - 1)
    }

    pub fn cell_center(&self, cell: usize) -> Result<Point> {
        if cell >= self.num_cells() {
            return Err(SlipError::Usage(format!(
                "cell index {cell} out of range for a {}x{} grid",
                self.nx, self.ny
            )));
        }
        let (i, j) = self.coords(cell);
        Ok([(i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy()])
    }

    /// Cell containing `p`, clamping points outside the domain to the border cells.
    pub fn locate(&self, p: Point) -> usize {
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        let i = clamp(p[0] / self.hx(), self.nx);
        let j = clamp(p[1] / self.hy(), self.ny);
        self.index(i, j)
    }

    /// Midpoint of a facet.
    pub fn facet_midpoint(&self, facet: &Facet) -> Point {
        let (i, j) = self.coords(facet.cell_a);
        match facet.orientation {
            Orientation::Vertical => [(i as f64 + 1.0) * self.hx(), (j as f64 + 0.5) * self.hy()],
            Orientation::Horizontal => {
                [(i as f64 + 0.5) * self.hx(), (j as f64 + 1.0) * self.hy()]
            }
        }
    }

    /// Endpoints of a facet, ordered by increasing coordinate.
    pub fn facet_endpoints(&self, facet: &Facet) -> (Point, Point) {
        let (i, j) = self.coords(facet.cell_a);
        let (hx, hy) = (self.hx(), self.hy());
        match facet.orientation {
            Orientation::Vertical => {
                let x = (i as f64 + 1.0) * hx;
                ([x, j as f64 * hy], [x, (j as f64 + 1.0) * hy])
            }
            Orientation::Horizontal => {
                let y = (j as f64 + 1.0) * hy;
                ([i as f64 * hx, y], [(i as f64 + 1.0) * hx, y])
            }
        }
    }

    /// All interior facets in canonical order.
    pub fn interior_facets(&self) -> Vec<Facet> {
        let mut facets = Vec::with_capacity(self.num_facets());
        let (hx, hy) = (self.hx(), self.hy());
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                facets.push(Facet {
                    cell_a: self.index(i, j),
                    cell_b: self.index(i + 1, j),
                    orientation: Orientation::Vertical,
                    measure: hy,
                });
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                facets.push(Facet {
                    cell_a: self.index(i, j),
                    cell_b: self.index(i, j + 1),
                    orientation: Orientation::Horizontal,
                    measure: hx,
                });
            }
        }
        facets
    }
}

/// Free-function form of [`GridSpec::interior_facets`].
pub fn interior_facets(grid: &GridSpec) -> Vec<Facet> {
    grid.interior_facets()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Adjacency pairs found by scanning every pair of cells.
    fn brute_force_adjacencies(g: &GridSpec) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for a in 0..g.num_cells() {
            for b in a + 1..g.num_cells() {
                let (ia, ja) = g.coords(a);
                let (ib, jb) = g.coords(b);
                let d = ia.abs_diff(ib) + ja.abs_diff(jb);
                if d == 1 {
                    out.insert((a, b));
                }
            }
        }
        out
    }

    #[test]
    fn single_cell_has_no_facets() {
        assert!(GridSpec::unit(1, 1).unwrap().interior_facets().is_empty());
    }

    #[test]
    fn two_by_two_facets() {
        let g = GridSpec::unit(2, 2).unwrap();
        let f = g.interior_facets();
        assert_eq!(f.len(), 4);
        assert!(f.iter().all(|f| f.measure == 0.5));
        let pairs: Vec<_> = f.iter().map(|f| (f.cell_a, f.cell_b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (0, 2), (1, 3)]);
    }

    #[test]
    fn three_by_two_facets() {
        let g = GridSpec::unit(3, 2).unwrap();
        let f = g.interior_facets();
        assert_eq!(f.len(), 7);
        let vertical = f
            .iter()
            .filter(|f| f.orientation == Orientation::Vertical)
            .count();
        assert_eq!(vertical, 4);
        assert_eq!(f.len() - vertical, 3);
    }

    #[test]
    fn facet_count_matches_adjacency_scan() {
        for nx in 1..=64 {
            for ny in 1..=64 {
                let g = GridSpec::unit(nx, ny).unwrap();
                assert_eq!(g.interior_facets().len(), nx * (ny - 1) + ny * (nx - 1));
            }
        }
        for (nx, ny) in [(1, 5), (4, 3), (6, 6), (7, 2)] {
            let g = GridSpec::unit(nx, ny).unwrap();
            let listed: BTreeSet<_> = g
                .interior_facets()
                .iter()
                .map(|f| (f.cell_a, f.cell_b))
                .collect();
            assert_eq!(listed, brute_force_adjacencies(&g));
        }
    }

    #[test]
    fn facet_order_is_deterministic() {
        let g = GridSpec::new(5, 4, 2.0, 1.5).unwrap();
        assert_eq!(g.interior_facets(), g.interior_facets());
    }

    #[test]
    fn cell_centers() {
        let g = GridSpec::unit(2, 2).unwrap();
        assert_eq!(g.cell_center(0).unwrap(), [0.25, 0.25]);
        assert_eq!(g.cell_center(g.index(1, 1)).unwrap(), [0.75, 0.75]);
        let g = GridSpec::new(4, 4, 2.0, 1.0).unwrap();
        assert_eq!(g.cell_center(g.index(3, 0)).unwrap(), [1.75, 0.125]);
        assert!(g.cell_center(16).is_err());
    }

    #[test]
    fn cell_measures_sum_to_domain() {
        for (nx, ny, lx, ly) in [(3, 7, 1.0, 1.0), (13, 5, 2.5, 0.3), (64, 64, 1.0, 1.0)] {
            let g = GridSpec::new(nx, ny, lx, ly).unwrap();
            let total: f64 = (0..g.num_cells()).map(|_| g.cell_measure()).sum();
            assert!((total - lx * ly).abs() <= 1e-12 * lx * ly);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(0, 3, 1.0, 1.0).is_err());
        assert!(GridSpec::new(3, 3, 0.0, 1.0).is_err());
        assert!(GridSpec::new(3, 3, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn locate_round_trips_centers() {
        let g = GridSpec::new(7, 3, 1.4, 0.6).unwrap();
        for c in 0..g.num_cells() {
            assert_eq!(g.locate(g.cell_center(c).unwrap()), c);
        }
        assert_eq!(g.locate([-1.0, 10.0]), g.index(0, 2));
    }
}
