use std::f64::consts::PI;

use crate::control::{ControlField, LabelSet};
use crate::error::{Result, SlipError};
use crate::grid::{Orientation, Point};

/// A piece of interface between two level sets. `normal` is the unit normal
/// pointing out of the `inside` label's region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSegment {
    pub a: Point,
    pub b: Point,
    pub normal: [f64; 2],
    pub inside: i64,
    pub outside: i64,
}

impl InterfaceSegment {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    pub fn midpoint(&self) -> Point {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }

    pub fn jump(&self) -> f64 {
        (self.inside - self.outside) as f64
    }

    /// `k` equal pieces with the same labels and normal.
    pub fn split(&self, k: usize) -> impl Iterator<Item = InterfaceSegment> + '_ {
        let k = k.max(1);
        let at = move |m: usize| {
            let w = m as f64 / k as f64;
            [
                self.a[0] + w * (self.b[0] - self.a[0]),
                self.a[1] + w * (self.b[1] - self.a[1]),
            ]
        };
        (0..k).map(move |m| InterfaceSegment {
            a: at(m),
            b: at(m + 1),
            ..*self
        })
    }
}

/// A partition of a rectangle into finitely many level sets of a
/// label-valued function.
pub trait LevelSets: Sync {
    fn domain(&self) -> (f64, f64);
    fn labels(&self) -> &LabelSet;
    /// Label of the level set containing `p`.
    fn label_at(&self, p: Point) -> i64;
    /// Interfaces inside the domain, as straight segments.
    fn interfaces(&self) -> Vec<InterfaceSegment>;
    /// Pieces per segment for mapping and quadrature under a local variation.
    fn subdivisions(&self) -> usize {
        1
    }
}

impl LevelSets for ControlField {
    fn domain(&self) -> (f64, f64) {
        (self.grid().lx(), self.grid().ly())
    }

    fn labels(&self) -> &LabelSet {
        ControlField::labels(self)
    }

    fn label_at(&self, p: Point) -> i64 {
        self.value(self.grid().locate(p))
    }

    /// Staircase facets between differently labeled cells.
    fn interfaces(&self) -> Vec<InterfaceSegment> {
        let g = self.grid();
        g.interior_facets()
            .iter()
            .filter(|f| self.value(f.cell_a) != self.value(f.cell_b))
            .map(|f| {
                let (a, b) = g.facet_endpoints(f);
                let normal = match f.orientation {
                    Orientation::Vertical => [1.0, 0.0],
                    Orientation::Horizontal => [0.0, 1.0],
                };
                InterfaceSegment {
                    a,
                    b,
                    normal,
                    inside: self.value(f.cell_a),
                    outside: self.value(f.cell_b),
                }
            })
            .collect()
    }

    fn subdivisions(&self) -> usize {
        64
    }
}

/// A disk labeled `inside` in a rectangle labeled `outside`, with the circle
/// represented by a fine inscribed polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPartition {
    domain: (f64, f64),
    center: Point,
    radius: f64,
    inside: i64,
    outside: i64,
    labels: LabelSet,
    segments: usize,
}

impl DiskPartition {
    pub fn new(
        domain: (f64, f64),
        center: Point,
        radius: f64,
        inside: i64,
        outside: i64,
        segments: usize,
    ) -> Result<Self> {
        let (lx, ly) = domain;
        let fits = radius > 0.0
            && center[0] - radius > 0.0
            && center[0] + radius < lx
            && center[1] - radius > 0.0
            && center[1] + radius < ly;
        if !fits {
            return Err(SlipError::Usage("disk must lie strictly inside the domain".into()));
        }
        if inside == outside || segments < 3 {
            return Err(SlipError::Usage(
                "disk needs two distinct labels and at least 3 segments".into(),
            ));
        }
        Ok(DiskPartition {
            domain,
            center,
            radius,
            inside,
            outside,
            labels: LabelSet::new(vec![inside, outside])?,
            segments,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn inside(&self) -> i64 {
        self.inside
    }

    pub fn outside(&self) -> i64 {
        self.outside
    }
}

impl LevelSets for DiskPartition {
    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn label_at(&self, p: Point) -> i64 {
        let d = (p[0] - self.center[0]).hypot(p[1] - self.center[1]);
        if d < self.radius {
            self.inside
        } else {
            self.outside
        }
    }

    fn interfaces(&self) -> Vec<InterfaceSegment> {
        let n = self.segments;
        let vertex = |k: usize| {
            let th = 2.0 * PI * k as f64 / n as f64;
            [
                self.center[0] + self.radius * th.cos(),
                self.center[1] + self.radius * th.sin(),
            ]
        };
        (0..n)
            .map(|k| {
                let (a, b) = (vertex(k), vertex(k + 1));
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                InterfaceSegment {
                    a,
                    b,
                    normal: [(b[1] - a[1]) / len, -(b[0] - a[0]) / len],
                    inside: self.inside,
                    outside: self.outside,
                }
            })
            .collect()
    }
}

/// Per-pixel labels on a uniform `resolution x resolution` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterPartition {
    resolution: usize,
    domain: (f64, f64),
    labels: Vec<i64>,
}

impl RasterPartition {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn pixel_area(&self) -> f64 {
        let r = self.resolution as f64;
        self.domain.0 * self.domain.1 / (r * r)
    }

    pub fn pixel_center(&self, k: usize) -> Point {
        pixel_center(self.domain, self.resolution, k)
    }

    /// Measure of the pixels carrying `label`.
    pub fn area_of(&self, label: i64) -> f64 {
        self.labels.iter().filter(|&&l| l == label).count() as f64 * self.pixel_area()
    }

    /// Measure of the pixels where the two rasters disagree.
    pub fn symmetric_difference(&self, other: &RasterPartition) -> Result<f64> {
        if self.resolution != other.resolution || self.domain != other.domain {
            return Err(SlipError::Usage("rasters differ in shape".into()));
        }
        let count = self
            .labels
            .iter()
            .zip(&other.labels)
            .filter(|(a, b)| a != b)
            .count();
        Ok(count as f64 * self.pixel_area())
    }

    /// Pixel-center quadrature of `int g (self - other)`.
    pub fn weighted_difference(&self, other: &RasterPartition, g: &dyn Fn(Point) -> f64) -> f64 {
        let mut sum = 0.0;
        for (k, (a, b)) in self.labels.iter().zip(&other.labels).enumerate() {
            if a != b {
                sum += g(self.pixel_center(k)) * (a - b) as f64;
            }
        }
        sum * self.pixel_area()
    }
}

fn pixel_center(domain: (f64, f64), resolution: usize, k: usize) -> Point {
    let (i, j) = (k % resolution, k / resolution);
    [
        (i as f64 + 0.5) * domain.0 / resolution as f64,
        (j as f64 + 0.5) * domain.1 / resolution as f64,
    ]
}

/// Samples the partition at pixel centers.
pub fn rasterize(part: &dyn LevelSets, resolution: usize) -> Result<RasterPartition> {
    pushforward(part, &super::VectorField::zero(), 0.0, resolution)
}

/// Raster of `f_t # v`: the pixel at `x` takes the label at `g_t(x)`.
pub fn pushforward(
    part: &dyn LevelSets,
    phi: &super::VectorField,
    t: f64,
    resolution: usize,
) -> Result<RasterPartition> {
    if resolution == 0 {
        return Err(SlipError::Usage("raster resolution must be positive".into()));
    }
    let domain = part.domain();
    let total = resolution * resolution;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    let chunk = total.div_ceil(workers);
    let mut labels = vec![0; total];
    std::thread::scope(|scope| {
        let handles: Vec<_> = labels
            .chunks_mut(chunk)
            .enumerate()
            .map(|(c, out)| {
                scope.spawn(move || -> Result<()> {
                    for (off, slot) in out.iter_mut().enumerate() {
                        let x = pixel_center(domain, resolution, c * chunk + off);
                        *slot = part.label_at(phi.inverse(t, x)?);
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("raster worker panicked"))
    })?;
    Ok(RasterPartition {
        resolution,
        domain,
        labels,
    })
}

/// Isotropic total variation of `f_t # v`, measured as the jump-weighted
/// Euclidean length of the mapped interface polylines.
pub fn pushed_tv(part: &dyn LevelSets, phi: &super::VectorField, t: f64) -> f64 {
    let k = part.subdivisions();
    part.interfaces()
        .iter()
        .map(|s| {
            let len: f64 = s
                .split(k)
                .map(|piece| {
                    let (p, q) = (phi.forward(t, piece.a), phi.forward(t, piece.b));
                    (q[0] - p[0]).hypot(q[1] - p[1])
                })
                .sum();
            s.jump().abs() * len
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VectorField;
    use crate::grid::GridSpec;

    #[test]
    fn control_field_interfaces_reproduce_tv() {
        let g = GridSpec::unit(4, 4).unwrap();
        let l = LabelSet::new(vec![0, 1, 2]).unwrap();
        let v = ControlField::from_fn(g, l, |p| if p[0] < 0.5 { 0 } else if p[1] < 0.5 { 1 } else { 2 })
            .unwrap();
        let tv: f64 = v.interfaces().iter().map(|s| s.jump().abs() * s.length()).sum();
        assert!((tv - v.tv()).abs() < 1e-14);
        assert!((pushed_tv(&v, &VectorField::zero(), 0.0) - v.tv()).abs() < 1e-14);
    }

    #[test]
    fn disk_polygon_normals_point_outward() {
        let d = DiskPartition::new((1.0, 1.0), [0.5, 0.5], 0.25, 1, 0, 64).unwrap();
        for s in d.interfaces() {
            let m = s.midpoint();
            let r = [m[0] - 0.5, m[1] - 0.5];
            assert!(r[0] * s.normal[0] + r[1] * s.normal[1] > 0.0);
        }
        assert!(DiskPartition::new((1.0, 1.0), [0.2, 0.5], 0.25, 1, 0, 64).is_err());
    }

    #[test]
    fn raster_of_stripes() {
        let g = GridSpec::unit(4, 1).unwrap();
        let l = LabelSet::new(vec![0, 1]).unwrap();
        let v = ControlField::new(g, l, vec![0, 1, 1, 0]).unwrap();
        let r = rasterize(&v, 8).unwrap();
        assert_eq!(r.area_of(1), 0.5);
        assert_eq!(r.symmetric_difference(&r).unwrap(), 0.0);
    }
}
