//! Integer-valued piecewise-constant controls and their total variation.
//!
//! A [`ControlField`] assigns one label from a finite [`LabelSet`] to every
//! cell of a [`GridSpec`]. Its total variation is the facet sum
//! `sum_E H(E) |v_a - v_b|`, which is exactly the total variation of the
//! piecewise-constant function because all jump sets are axis aligned.
//!
//! Jump magnitudes are integers, so `tv`, the pairwise interface
//! decomposition and `l1_dist` accumulate integer sums first and scale by the
//! facet or cell measure last. This makes the level-set identity
//! `tv(v) = sum_{i<j} |nu_i - nu_j| H(dE_i cap dE_j)` hold bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Result, SlipError};
use crate::grid::{GridSpec, Orientation};

/// Ordered set of distinct integer labels `nu_1 < ... < nu_M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelSet {
    labels: Vec<i64>,
}

impl LabelSet {
    pub fn new(mut labels: Vec<i64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(SlipError::Usage("label set must not be empty".into()));
        }
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(SlipError::Usage(format!(
                "labels must be distinct, got {labels:?}"
            )));
        }
        Ok(LabelSet { labels })
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn min(&self) -> i64 {
        self.labels[0]
    }

    pub fn max(&self) -> i64 {
        self.labels[self.labels.len() - 1]
    }

    pub fn contains(&self, value: i64) -> bool {
        self.labels.binary_search(&value).is_ok()
    }

    pub fn index_of(&self, value: i64) -> Option<usize> {
        self.labels.binary_search(&value).ok()
    }

    pub fn get(&self, index: usize) -> i64 {
        self.labels[index]
    }

    /// Largest label strictly below `x`.
    pub fn below(&self, x: f64) -> Option<i64> {
        self.labels.iter().rev().copied().find(|&l| (l as f64) < x)
    }

    /// Smallest label strictly above `x`.
    pub fn above(&self, x: f64) -> Option<i64> {
        self.labels.iter().copied().find(|&l| (l as f64) > x)
    }

    /// Label nearest to `x`; ties go to the smaller label.
    pub fn nearest(&self, x: f64) -> i64 {
        let mut best = self.labels[0];
        for &l in &self.labels[1..] {
            if (l as f64 - x).abs() < (best as f64 - x).abs() {
                best = l;
            }
        }
        best
    }
}

/// A label per cell, row-major over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    grid: GridSpec,
    labels: LabelSet,
    values: Vec<i64>,
}

impl ControlField {
    pub fn new(grid: GridSpec, labels: LabelSet, values: Vec<i64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SlipError::Usage(format!(
                "control has {} values but the grid has {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if let Some((cell, v)) = values.iter().enumerate().find(|(_, v)| !labels.contains(**v)) {
            return Err(SlipError::Usage(format!(
                "cell {cell} has value {v}, which is not in the label set {:?}",
                labels.as_slice()
            )));
        }
        Ok(ControlField {
            grid,
            labels,
            values,
        })
    }

    pub fn constant(grid: GridSpec, labels: LabelSet, value: i64) -> Result<Self> {
        let n = grid.num_cells();
        ControlField::new(grid, labels, vec![value; n])
    }

    /// Builds a field by evaluating `f` at every cell center.
    pub fn from_fn(
        grid: GridSpec,
        labels: LabelSet,
        mut f: impl FnMut([f64; 2]) -> i64,
    ) -> Result<Self> {
        let values = (0..grid.num_cells())
            .map(|c| f(grid.cell_center(c).expect("cell in range")))
            .collect();
        ControlField::new(grid, labels, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> i64 {
        self.values[cell]
    }

    pub fn label_index(&self, cell: usize) -> usize {
        self.labels
            .index_of(self.values[cell])
            .expect("values are label members")
    }

    /// Cell values as reals, for use as a PDE source.
    pub fn as_reals(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    /// Replaces the label set, e.g. after a distance-preserving relabeling.
    pub fn map_labels(&self, labels: LabelSet, f: impl Fn(i64) -> i64) -> Result<Self> {
        ControlField::new(self.grid, labels, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn with_values(&self, values: Vec<i64>) -> Result<Self> {
        ControlField::new(self.grid, self.labels.clone(), values)
    }

    /// Total variation: the facet sum of `H(E) |v_a - v_b|`.
    pub fn tv(&self) -> f64 {
        let mut vertical = 0u64;
        let mut horizontal = 0u64;
        for f in self.grid.interior_facets() {
            let jump = self.values[f.cell_a].abs_diff(self.values[f.cell_b]);
            match f.orientation {
                Orientation::Vertical => vertical += jump,
                Orientation::Horizontal => horizontal += jump,
            }
        }
        self.grid.hy() * vertical as f64 + self.grid.hx() * horizontal as f64
    }

    /// Interface measure between each pair of level sets.
    pub fn pairwise_interfaces(&self) -> PairwiseInterfaces {
        let mut counts: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
        let m = self.labels.len();
        for i in 0..m {
            for j in i + 1..m {
                counts.insert((i, j), (0, 0));
            }
        }
        for f in self.grid.interior_facets() {
            let a = self.label_index(f.cell_a);
            let b = self.label_index(f.cell_b);
            if a == b {
                continue;
            }
            let entry = counts.get_mut(&(a.min(b), a.max(b))).expect("pair present");
            match f.orientation {
                Orientation::Vertical => entry.0 += 1,
                Orientation::Horizontal => entry.1 += 1,
            }
        }
        PairwiseInterfaces {
            hx: self.grid.hx(),
            hy: self.grid.hy(),
            counts,
        }
    }

    /// Perimeter in the domain of each level set `E_i = {v = nu_i}`.
    ///
    /// Domain-boundary facets are not counted, so this is `P(E_i, Omega)`.
    pub fn level_set_perimeters(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.labels.len()];
        for f in self.grid.interior_facets() {
            let a = self.label_index(f.cell_a);
            let b = self.label_index(f.cell_b);
            if a != b {
                out[a] += f.measure;
                out[b] += f.measure;
            }
        }
        out
    }

    /// Checks `tv(v) >= 1/2 sum_i P(E_i)`. Always holds; kept as a runtime audit.
    pub fn perimeter_lower_bound_check(&self) -> bool {
        let half: f64 = 0.5 * self.level_set_perimeters().iter().sum::<f64>();
        self.tv() >= half - 1e-12
    }

    fn check_compatible(&self, other: &ControlField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SlipError::Usage(format!(
                "controls live on different grids ({:?} vs {:?})",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// `sum_P |v_P - w_P| lambda(P)`.
    pub fn l1_dist(&self, other: &ControlField) -> Result<f64> {
        self.check_compatible(other)?;
        let total: u64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.abs_diff(*b))
            .sum();
        Ok(self.grid.cell_measure() * total as f64)
    }

    /// CSV with header `nx,ny,lx,ly` followed by one comma-separated row of
    /// labels per grid row, starting at the bottom row `j = 0`.
    pub fn to_csv_string(&self) -> String {
        let g = &self.grid;
        let mut out = format!("{},{},{},{}\n", g.nx(), g.ny(), g.lx(), g.ly());
        for row in self.values.chunks(g.nx()) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, labels: &LabelSet) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines
            .next()
            .ok_or_else(|| SlipError::parse("control csv", "empty file"))?;
        let fields: Vec<&str> = header.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(SlipError::parse(
                "control csv",
                format!("line {}: header must be `nx,ny,lx,ly`", hline + 1),
            ));
        }
        let bad = |what: &str| SlipError::parse("control csv", format!("bad {what} in header"));
        let nx: usize = fields[0].parse().map_err(|_| bad("nx"))?;
        let ny: usize = fields[1].parse().map_err(|_| bad("ny"))?;
        let lx: f64 = fields[2].parse().map_err(|_| bad("lx"))?;
        let ly: f64 = fields[3].parse().map_err(|_| bad("ly"))?;
        let grid = GridSpec::new(nx, ny, lx, ly)?;
        let mut values = Vec::with_capacity(grid.num_cells());
        let mut rows = 0;
        for (lineno, line) in lines {
            let row: Vec<i64> = line
                .split(',')
                .map(|s| s.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    SlipError::parse("control csv", format!("line {}: {e}", lineno + 1))
                })?;
            if row.len() != nx {
                return Err(SlipError::parse(
                    "control csv",
                    format!("line {}: expected {nx} values, got {}", lineno + 1, row.len()),
                ));
            }
            values.extend(row);
            rows += 1;
        }
        if rows != ny {
            return Err(SlipError::parse(
                "control csv",
                format!("expected {ny} rows, got {rows}"),
            ));
        }
        ControlField::new(grid, labels.clone(), values)
    }

    /// ASCII PGM (P2) image; labels are mapped linearly onto gray levels
    /// `0..=255` and the top image row is the top of the domain.
    pub fn to_pgm_string(&self) -> String {
        let g = &self.grid;
        let (lo, hi) = (self.labels.min(), self.labels.max());
        let span = (hi - lo).max(1) as f64;
        let mut out = format!("P2\n{} {}\n255\n", g.nx(), g.ny());
        for j in (0..g.ny()).rev() {
            let row: Vec<String> = (0..g.nx())
                .map(|i| {
                    let v = self.values[g.index(i, j)];
                    (((v - lo) as f64 / span) * 255.0).round().to_string()
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Interface measures between label pairs, keyed by 0-based label indices `(i, j)`, `i < j`.
///
/// Counts of vertical and horizontal facets are kept separately as integers;
/// the measure of a pair is `n_vertical * hy + n_horizontal * hx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseInterfaces {
    hx: f64,
    hy: f64,
    counts: BTreeMap<(usize, usize), (u64, u64)>,
}

impl PairwiseInterfaces {
    pub fn measure(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.counts
            .get(&key)
            .map(|&(nv, nh)| nv as f64 * self.hy + nh as f64 * self.hx)
            .unwrap_or(0.0)
    }

    pub fn to_map(&self) -> BTreeMap<(usize, usize), f64> {
        self.counts
            .keys()
            .map(|&(i, j)| ((i, j), self.measure(i, j)))
            .collect()
    }

    /// `sum_{i<j} |nu_i - nu_j| * measure(i, j)`.
    pub fn weighted_total(&self, labels: &LabelSet) -> f64 {
        let mut vertical = 0u64;
        let mut horizontal = 0u64;
        for (&(i, j), &(nv, nh)) in &self.counts {
            let jump = labels.get(i).abs_diff(labels.get(j));
            vertical += jump * nv;
            horizontal += jump * nh;
        }
        self.hy * vertical as f64 + self.hx * horizontal as f64
    }
}

pub fn tv(v: &ControlField) -> f64 {
    v.tv()
}

pub fn l1_dist(v: &ControlField, w: &ControlField) -> Result<f64> {
    v.l1_dist(w)
}
