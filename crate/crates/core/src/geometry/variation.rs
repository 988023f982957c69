use serde::Serialize;

use super::field::VectorField;
use super::partition::{pushed_tv, pushforward, LevelSets, RasterPartition};
use crate::error::{Result, SlipError};
use crate::grid::Point;

/// One step of a slope study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub t: f64,
    pub value: f64,
    pub slope: f64,
    pub error: f64,
}

/// Measured difference quotients against an analytic first-order coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorReport {
    pub coefficient: f64,
    pub base: f64,
    pub rows: Vec<SlopeRow>,
}

impl TaylorReport {
    fn from_values(coefficient: f64, base: f64, samples: Vec<(f64, f64)>) -> Self {
        let rows = samples
            .into_iter()
            .map(|(t, value)| {
                let slope = (value - base) / t;
                SlopeRow {
                    t,
                    value,
                    slope,
                    error: (slope - coefficient).abs(),
                }
            })
            .collect();
        TaylorReport {
            coefficient,
            base,
            rows,
        }
    }

    /// Slope error at the smallest `t`, relative to `scale`.
    pub fn final_relative_error(&self, scale: f64) -> f64 {
        self.rows.last().map_or(0.0, |r| r.error / scale)
    }

    /// Error at the largest `t` divided by the error at the smallest.
    pub fn decay(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if b.error > 0.0 => a.error / b.error,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }
}

/// Ratios of symmetric-difference areas to `|t - s| P(E)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub perimeter: f64,
    pub pairs: Vec<LipschitzPair>,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzPair {
    pub t: f64,
    pub s: f64,
    pub area: f64,
    pub ratio: f64,
}

/// `t_max, t_max/2, ...` with `steps + 1` entries.
pub fn halving(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| t_max * 0.5f64.powi(k as i32)).collect()
}

fn check_times(phi: &VectorField, times: &[f64]) -> Result<()> {
    let l = phi.lipschitz_bound();
    for &t in times {
        if t.abs() * l > 0.5 {
            return Err(SlipError::Contraction(t.abs() * l));
        }
    }
    Ok(())
}

/// First-order TV coefficient: jump-weighted composite midpoint quadrature
/// of the boundary divergence over the interfaces.
pub fn tv_coefficient(part: &dyn LevelSets, phi: &VectorField) -> f64 {
    let k = part.subdivisions();
    part.interfaces()
        .iter()
        .flat_map(|s| s.split(k).collect::<Vec<_>>())
        .map(|s| s.jump().abs() * phi.boundary_divergence(s.midpoint(), s.normal) * s.length())
        .sum()
}

/// First-order coefficient of `int g (f_t # v - v)`: midpoint quadrature of
/// the jump-weighted flux `g (phi . n)`.
pub fn linear_coefficient(part: &dyn LevelSets, g: &dyn Fn(Point) -> f64, phi: &VectorField) -> f64 {
    let k = part.subdivisions();
    part.interfaces()
        .iter()
        .flat_map(|s| s.split(k).collect::<Vec<_>>())
        .map(|s| {
            let m = s.midpoint();
            let f = phi.eval(m);
            s.jump() * g(m) * (f[0] * s.normal[0] + f[1] * s.normal[1]) * s.length()
        })
        .sum()
}

/// Slopes `(TV(f_t # v) - TV(v)) / t` for each `t`, using the polyline
/// length of the mapped interfaces.
pub fn taylor_tv_check(part: &dyn LevelSets, phi: &VectorField, t_list: &[f64]) -> Result<TaylorReport> {
    check_times(phi, t_list)?;
    let base = pushed_tv(part, phi, 0.0);
    let samples = t_list.iter().map(|&t| (t, pushed_tv(part, phi, t))).collect();
    Ok(TaylorReport::from_values(tv_coefficient(part, phi), base, samples))
}

/// Slopes `int g (f_t # v - v) / t`, with areas from pixel counting.
pub fn taylor_linear_check(
    part: &dyn LevelSets,
    g: &dyn Fn(Point) -> f64,
    phi: &VectorField,
    t_list: &[f64],
    resolution: usize,
) -> Result<TaylorReport> {
    check_times(phi, t_list)?;
    let base = pushforward(part, phi, 0.0, resolution)?;
    let mut samples = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let pushed = pushforward(part, phi, t, resolution)?;
        samples.push((t, pushed.weighted_difference(&base, g)));
    }
    Ok(TaylorReport::from_values(linear_coefficient(part, g, phi), 0.0, samples))
}

/// Symmetric-difference areas for each `(t, s)` pair, normalized by the
/// interface length of the unperturbed partition.
pub fn lipschitz_check(
    part: &dyn LevelSets,
    phi: &VectorField,
    pairs: &[(f64, f64)],
    resolution: usize,
) -> Result<LipschitzReport> {
    if part.labels().len() != 2 {
        return Err(SlipError::Usage("lipschitz check needs a binary partition".into()));
    }
    let times: Vec<f64> = pairs.iter().flat_map(|&(t, s)| [t, s]).collect();
    check_times(phi, &times)?;
    let perimeter: f64 = part.interfaces().iter().map(|s| s.length()).sum();
    let mut cache: Vec<(f64, RasterPartition)> = Vec::new();
    for &t in &times {
        if !cache.iter().any(|(u, _)| *u == t) {
            cache.push((t, pushforward(part, phi, t, resolution)?));
        }
    }
    let raster = |t: f64| &cache.iter().find(|(u, _)| *u == t).expect("cached raster").1;
    let mut out = Vec::with_capacity(pairs.len());
    for &(t, s) in pairs {
        let area = raster(t).symmetric_difference(raster(s))?;
        let denom = (t - s).abs() * perimeter;
        let ratio = if denom > 0.0 { area / denom } else { 0.0 };
        out.push(LipschitzPair { t, s, area, ratio });
    }
    let max_ratio = out.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(LipschitzReport {
        perimeter,
        pairs: out,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlField, LabelSet};
    use crate::geometry::partition::DiskPartition;
    use crate::grid::GridSpec;

    fn stripes() -> ControlField {
        let g = GridSpec::unit(3, 1).unwrap();
        ControlField::new(g, LabelSet::new(vec![0, 1, 2]).unwrap(), vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn field_away_from_interfaces_changes_nothing() {
        let v = stripes();
        let phi = VectorField::radial([0.5, 0.5], 0.1, 1.0).unwrap();
        let r = taylor_tv_check(&v, &phi, &[0.4, 0.2]).unwrap();
        assert_eq!(r.coefficient, 0.0);
        assert!(r.rows.iter().all(|row| row.slope.abs() < 1e-14));
        let lin = taylor_linear_check(&v, &|_| 1.0, &phi, &[0.4], 64).unwrap();
        assert_eq!(lin.rows[0].value, 0.0);
    }

    #[test]
    fn zero_weight_gives_zero() {
        let v = stripes();
        let phi = VectorField::directional([1.0 / 3.0, 0.5], 0.3, [1.0, 0.0], 0.2).unwrap();
        let r = taylor_linear_check(&v, &|_| 0.0, &phi, &[0.1], 64).unwrap();
        assert_eq!(r.coefficient, 0.0);
        assert_eq!(r.rows[0].value, 0.0);
    }

    #[test]
    fn radial_disk_area_grows_with_t() {
        let d = DiskPartition::new((1.0, 1.0), [0.5, 0.5], 0.25, 1, 0, 512).unwrap();
        let phi = VectorField::radial([0.5, 0.5], 0.48, 1.0).unwrap();
        let mut prev = 0.0;
        for t in [0.0, 0.05, 0.1, 0.2, 0.4] {
            let a = pushforward(&d, &phi, t, 128).unwrap().area_of(1);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn coincident_times_have_no_symmetric_difference() {
        let d = DiskPartition::new((1.0, 1.0), [0.5, 0.5], 0.25, 1, 0, 256).unwrap();
        let phi = VectorField::radial([0.5, 0.5], 0.48, 1.0).unwrap();
        let r = lipschitz_check(&d, &phi, &[(0.2, 0.2)], 64).unwrap();
        assert_eq!(r.pairs[0].area, 0.0);
        assert!(lipschitz_check(&d, &phi, &[(0.9, 0.0)], 64).is_err());
    }

    #[test]
    fn non_binary_partition_rejected() {
        let phi = VectorField::zero();
        assert!(lipschitz_check(&stripes(), &phi, &[(0.1, 0.0)], 16).is_err());
    }
}
