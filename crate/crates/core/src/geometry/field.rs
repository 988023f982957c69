use serde::Serialize;

use crate::error::{Result, SlipError};
use crate::grid::Point;

/// `psi(s) = (1 - s^2)^3` on `[0, 1]`, zero beyond.
fn psi(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        u * u * u
    }
}

/// `psi'(s)`.
fn dpsi(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        -6.0 * s * u * u
    }
}

/// `max_s |psi'(s)|`, attained at `s = 1/sqrt(5)`.
fn dpsi_max() -> f64 {
    6.0 / 5f64.sqrt() * 0.64
}

/// `max_s s psi(s)`, attained at `s = 1/sqrt(7)`.
fn s_psi_max() -> f64 {
    let s = 1.0 / 7f64.sqrt();
    s * psi(s)
}

/// One compactly supported polynomial bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bump {
    /// `amplitude * direction * psi(|x - center| / radius)`.
    Directional {
        center: Point,
        radius: f64,
        direction: [f64; 2],
        amplitude: f64,
    },
    /// `matrix (x - center) psi(|x - center| / radius)`.
    Linear {
        center: Point,
        radius: f64,
        matrix: [[f64; 2]; 2],
    },
}

/// Spectral norm of a 2x2 matrix.
fn spectral_norm(a: [[f64; 2]; 2]) -> f64 {
    let fro2 = a[0][0].powi(2) + a[0][1].powi(2) + a[1][0].powi(2) + a[1][1].powi(2);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (fro2 + disc)).sqrt()
}

fn scale(a: [[f64; 2]; 2], k: f64) -> [[f64; 2]; 2] {
    [[k * a[0][0], k * a[0][1]], [k * a[1][0], k * a[1][1]]]
}

impl Bump {
    fn center(&self) -> Point {
        match *self {
            Bump::Directional { center, .. } | Bump::Linear { center, .. } => center,
        }
    }

    fn radius(&self) -> f64 {
        match *self {
            Bump::Directional { radius, .. } | Bump::Linear { radius, .. } => radius,
        }
    }

    fn eval(&self, p: Point) -> [f64; 2] {
        let c = self.center();
        let r = self.radius();
        let d = [p[0] - c[0], p[1] - c[1]];
        let s = d[0].hypot(d[1]) / r;
        if s >= 1.0 {
            return [0.0, 0.0];
        }
        match *self {
            Bump::Directional {
                direction,
                amplitude,
                ..
            } => {
                let w = amplitude * psi(s);
                [w * direction[0], w * direction[1]]
            }
            Bump::Linear { matrix: a, .. } => {
                let w = psi(s);
                [
                    w * (a[0][0] * d[0] + a[0][1] * d[1]),
                    w * (a[1][0] * d[0] + a[1][1] * d[1]),
                ]
            }
        }
    }

    /// `J[i][k] = d phi_i / d x_k`.
    fn jacobian(&self, p: Point) -> [[f64; 2]; 2] {
        let c = self.center();
        let r = self.radius();
        let d = [p[0] - c[0], p[1] - c[1]];
        let dist = d[0].hypot(d[1]);
        let s = dist / r;
        if s >= 1.0 {
            return [[0.0; 2]; 2];
        }
        // grad psi(|x - c| / r) = psi'(s) (x - c) / (r |x - c|), zero at the center.
        let grad = if dist > 0.0 {
            let f = dpsi(s) / (r * dist);
            [f * d[0], f * d[1]]
        } else {
            [0.0, 0.0]
        };
        match *self {
            Bump::Directional {
                direction,
                amplitude,
                ..
            } => [
                [amplitude * direction[0] * grad[0], amplitude * direction[0] * grad[1]],
                [amplitude * direction[1] * grad[0], amplitude * direction[1] * grad[1]],
            ],
            Bump::Linear { matrix: a, .. } => {
                // psi A + (A d) grad^T
                let w = psi(s);
                let ad = [a[0][0] * d[0] + a[0][1] * d[1], a[1][0] * d[0] + a[1][1] * d[1]];
                [
                    [w * a[0][0] + ad[0] * grad[0], w * a[0][1] + ad[0] * grad[1]],
                    [w * a[1][0] + ad[1] * grad[0], w * a[1][1] + ad[1] * grad[1]],
                ]
            }
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        match *self {
            Bump::Directional {
                radius,
                direction,
                amplitude,
                ..
            } => amplitude.abs() * direction[0].hypot(direction[1]) * dpsi_max() / radius,
            // The Jacobian is A (psi I + s psi' n n^T), whose second factor has
            // eigenvalues psi and psi + s psi', both within [-1, 1].
            Bump::Linear { matrix, .. } => spectral_norm(matrix),
        }
    }

    fn sup_norm(&self) -> f64 {
        match *self {
            Bump::Directional {
                direction,
                amplitude,
                ..
            } => amplitude.abs() * direction[0].hypot(direction[1]),
            Bump::Linear { radius, matrix, .. } => spectral_norm(matrix) * radius * s_psi_max(),
        }
    }
}

/// A velocity field `phi` for local variations `f_t = I + t phi`: a finite
/// sum of bumps with analytic Jacobians.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct VectorField {
    terms: Vec<Bump>,
}

impl VectorField {
    pub fn zero() -> Self {
        VectorField::default()
    }

    pub fn directional(center: Point, radius: f64, direction: [f64; 2], amplitude: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(VectorField {
            terms: vec![Bump::Directional {
                center,
                radius,
                direction,
                amplitude,
            }],
        })
    }

    /// `amplitude (x - center) psi(|x - center| / radius)`.
    pub fn radial(center: Point, radius: f64, amplitude: f64) -> Result<Self> {
        Self::linear(center, radius, [[amplitude, 0.0], [0.0, amplitude]])
    }

    pub fn linear(center: Point, radius: f64, matrix: [[f64; 2]; 2]) -> Result<Self> {
        check_radius(radius)?;
        Ok(VectorField {
            terms: vec![Bump::Linear {
                center,
                radius,
                matrix,
            }],
        })
    }

    pub fn terms(&self) -> &[Bump] {
        &self.terms
    }

    pub fn plus(mut self, other: &VectorField) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn scaled(&self, k: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|b| match *b {
                Bump::Directional {
                    center,
                    radius,
                    direction,
                    amplitude,
                } => Bump::Directional {
                    center,
                    radius,
                    direction,
                    amplitude: k * amplitude,
                },
                Bump::Linear {
                    center,
                    radius,
                    matrix,
                } => Bump::Linear {
                    center,
                    radius,
                    matrix: scale(matrix, k),
                },
            })
            .collect();
        VectorField { terms }
    }

    pub fn eval(&self, p: Point) -> [f64; 2] {
        self.terms.iter().fold([0.0, 0.0], |acc, b| {
            let v = b.eval(p);
            [acc[0] + v[0], acc[1] + v[1]]
        })
    }

    pub fn jacobian(&self, p: Point) -> [[f64; 2]; 2] {
        self.terms.iter().fold([[0.0; 2]; 2], |acc, b| {
            let j = b.jacobian(p);
            [
                [acc[0][0] + j[0][0], acc[0][1] + j[0][1]],
                [acc[1][0] + j[1][0], acc[1][1] + j[1][1]],
            ]
        })
    }

    pub fn divergence(&self, p: Point) -> f64 {
        let j = self.jacobian(p);
        j[0][0] + j[1][1]
    }

    /// `div phi - n^T (grad phi) n` for a unit normal `n`.
    pub fn boundary_divergence(&self, p: Point, n: [f64; 2]) -> f64 {
        let j = self.jacobian(p);
        let njn = n[0] * (j[0][0] * n[0] + j[0][1] * n[1]) + n[1] * (j[1][0] * n[0] + j[1][1] * n[1]);
        j[0][0] + j[1][1] - njn
    }

    /// Upper bound on `sup |grad phi|` (sum of per-term bounds).
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms.iter().map(Bump::lipschitz_bound).sum()
    }

    /// Upper bound on `sup |phi|`.
    pub fn sup_norm(&self) -> f64 {
        self.terms.iter().map(Bump::sup_norm).sum()
    }

    /// Support disks `(center, radius)`.
    pub fn support(&self) -> Vec<(Point, f64)> {
        self.terms.iter().map(|b| (b.center(), b.radius())).collect()
    }

    pub fn in_support(&self, p: Point) -> bool {
        self.terms.iter().any(|b| {
            let c = b.center();
            (p[0] - c[0]).hypot(p[1] - c[1]) < b.radius()
        })
    }

    /// Whether every support disk has positive distance to the boundary of `(0,lx) x (0,ly)`.
    pub fn support_inside(&self, lx: f64, ly: f64) -> bool {
        self.terms.iter().all(|b| {
            let (c, r) = (b.center(), b.radius());
            c[0] - r > 0.0 && c[0] + r < lx && c[1] - r > 0.0 && c[1] + r < ly
        })
    }

    /// `f_t(x) = x + t phi(x)`.
    pub fn forward(&self, t: f64, p: Point) -> Point {
        let v = self.eval(p);
        [p[0] + t * v[0], p[1] + t * v[1]]
    }

    /// `g_t = f_t^{-1}`, the fixed point of `x -> y - t phi(x)`.
    pub fn inverse(&self, t: f64, y: Point) -> Result<Point> {
        let q = t.abs() * self.lipschitz_bound();
        if q > 0.5 {
            return Err(SlipError::Contraction(q));
        }
        // Outside the support y is itself the unique fixed point.
        if t == 0.0 || !self.in_support(y) {
            return Ok(y);
        }
        let mut x = y;
        for _ in 0..200 {
            let v = self.eval(x);
            let next = [y[0] - t * v[0], y[1] - t * v[1]];
            let step = (next[0] - x[0]).hypot(next[1] - x[1]);
            x = next;
            if step <= 1e-13 {
                break;
            }
        }
        Ok(x)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(SlipError::Usage(format!("bump radius must be positive, got {radius}")))
    }
}

/// Free-function form of [`VectorField::inverse`].
pub fn inverse_map(phi: &VectorField, t: f64, y: Point) -> Result<Point> {
    phi.inverse(t, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_field() -> VectorField {
        VectorField::radial([0.5, 0.5], 0.4, 0.8)
            .unwrap()
            .plus(&VectorField::directional([0.4, 0.6], 0.2, [0.6, -0.8], 0.05).unwrap())
            .plus(&VectorField::linear([0.55, 0.45], 0.3, [[0.3, -0.5], [0.2, 0.1]]).unwrap())
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let phi = sample_field();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
            let j = phi.jacobian(p);
            let h = 1e-6;
            for k in 0..2 {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                let (fa, fb) = (phi.eval(a), phi.eval(b));
                for i in 0..2 {
                    let fd = (fa[i] - fb[i]) / (2.0 * h);
                    assert!((fd - j[i][k]).abs() < 1e-7, "{fd} vs {}", j[i][k]);
                }
            }
        }
    }

    #[test]
    fn lipschitz_and_sup_bounds_hold_on_samples() {
        let phi = sample_field();
        let (l, s) = (phi.lipschitz_bound(), phi.sup_norm());
        for i in 0..=200 {
            for k in 0..=200 {
                let p = [i as f64 / 200.0, k as f64 / 200.0];
                let j = phi.jacobian(p);
                // Frobenius norm overestimates the spectral norm; use the exact 2x2 formula.
                let a = j[0][0] * j[0][0] + j[0][1] * j[0][1] + j[1][0] * j[1][0] + j[1][1] * j[1][1];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let spectral = ((a + (a * a - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
                assert!(spectral <= l + 1e-12);
                let v = phi.eval(p);
                assert!(v[0].hypot(v[1]) <= s + 1e-12);
            }
        }
    }

    #[test]
    fn inverse_map_contract() {
        let phi = sample_field();
        let l = phi.lipschitz_bound();
        assert_eq!(phi.inverse(0.0, [0.3, 0.4]).unwrap(), [0.3, 0.4]);
        assert_eq!(phi.inverse(0.1 / l, [0.01, 0.99]).unwrap(), [0.01, 0.99]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let y = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let t = rng.gen_range(-0.5..0.5) / l;
            let x = phi.inverse(t, y).unwrap();
            let back = phi.forward(t, x);
            assert!((back[0] - y[0]).hypot(back[1] - y[1]) <= 1e-10);
        }
        assert!(matches!(phi.inverse(0.6 / l, [0.5, 0.5]), Err(SlipError::Contraction(_))));
    }

    #[test]
    fn boundary_divergence_of_radial_field_on_circle() {
        // On a circle of radius R around the center, div_b of a (x - c) psi equals a psi(R / rho).
        let (rho, a, r) = (0.4, 0.7, 0.25);
        let phi = VectorField::radial([0.5, 0.5], rho, a).unwrap();
        for k in 0..16 {
            let th = k as f64 * 0.39;
            let n = [th.cos(), th.sin()];
            let p = [0.5 + r * n[0], 0.5 + r * n[1]];
            assert!((phi.boundary_divergence(p, n) - a * psi(r / rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_divergence_of_linear_field_on_circle() {
        // div_b of A (x - c) psi on a centered circle is psi(R / rho) (tr A - n^T A n).
        let (rho, r) = (0.45, 0.2);
        let m = [[1.5, 0.4], [-0.3, 0.5]];
        let phi = VectorField::linear([0.5, 0.5], rho, m).unwrap();
        for k in 0..16 {
            let th = k as f64 * 0.41;
            let n = [th.cos(), th.sin()];
            let p = [0.5 + r * n[0], 0.5 + r * n[1]];
            let nan = n[0] * (m[0][0] * n[0] + m[0][1] * n[1]) + n[1] * (m[1][0] * n[0] + m[1][1] * n[1]);
            let expect = psi(r / rho) * (m[0][0] + m[1][1] - nan);
            assert!((phi.boundary_divergence(p, n) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_and_sum_are_linear() {
        let a = VectorField::radial([0.5, 0.5], 0.3, 1.0).unwrap();
        let b = VectorField::directional([0.4, 0.4], 0.2, [1.0, 0.0], 2.0).unwrap();
        let p = [0.45, 0.52];
        let combo = a.scaled(2.0).plus(&b.scaled(-3.0));
        let (va, vb, vc) = (a.eval(p), b.eval(p), combo.eval(p));
        for i in 0..2 {
            assert!((vc[i] - (2.0 * va[i] - 3.0 * vb[i])).abs() < 1e-15);
        }
        assert!(a.support_inside(1.0, 1.0));
        assert!(!VectorField::radial([0.1, 0.5], 0.2, 1.0).unwrap().support_inside(1.0, 1.0));
        assert!(VectorField::radial([0.5, 0.5], 0.0, 1.0).is_err());
    }
}
