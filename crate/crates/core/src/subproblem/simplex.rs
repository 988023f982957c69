//! Dense-tableau two-phase primal simplex for bounded-variable LPs.
//!
//! Solves `min c^T x` subject to linear rows (`<=`, `>=`, `=`) and bounds
//! `l <= x <= u` with finite `l`. Nonbasic variables sit at one of their
//! bounds; the ratio test includes bound flips of the entering variable.
//! Pricing is Dantzig's rule with a switch to Bland's rule while pivots stay
//! degenerate, which rules out cycling. Ratio-test ties go to the smallest
//! variable index.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Largest reduced cost, falling back to Bland's rule on degenerate stalls.
    Dantzig,
    /// Smallest eligible index throughout.
    Bland,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coefs, sense, rhs });
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (k, &xk) in x.iter().enumerate() {
            worst = worst.max(self.lower[k] - xk).max(xk - self.upper[k]);
        }
        for row in &self.rows {
            let ax: f64 = row.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                Sense::Le => ax - row.rhs,
                Sense::Ge => row.rhs - ax,
                Sense::Eq => (ax - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self, pricing: Pricing) -> LpSolution {
        Tableau::build(self).run(self, pricing)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

struct Tableau {
    m: usize,
    n: usize,
    // Row-major m x n coefficients of B^{-1} A.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    first_artificial: usize,
    scale: f64,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let ns = lp.num_vars();
        let slack_count = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        debug_assert!(lower.iter().all(|l| l.is_finite()));
        lower.extend(std::iter::repeat_n(0.0, slack_count));
        upper.extend(std::iter::repeat_n(f64::INFINITY, slack_count));
        let first_artificial = ns + slack_count;

        // Dense rows with slacks appended.
        let mut dense = vec![vec![0.0; first_artificial]; m];
        let mut slack_of_row = vec![None; m];
        let mut next_slack = ns;
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coefs {
                dense[i][j] += a;
            }
            match row.sense {
                Sense::Le => {
                    dense[i][next_slack] = 1.0;
                    slack_of_row[i] = Some(next_slack);
                    next_slack += 1;
                }
                Sense::Ge => {
                    dense[i][next_slack] = -1.0;
                    slack_of_row[i] = Some(next_slack);
                    next_slack += 1;
                }
                Sense::Eq => {}
            }
        }

        // Crash basis: per row, a column appearing in no other row whose value
        // absorbs the row residual within its bounds.
        let mut count = vec![0usize; first_artificial];
        for row in &dense {
            for (j, a) in row.iter().enumerate() {
                if *a != 0.0 {
                    count[j] += 1;
                }
            }
        }
        let mut x: Vec<f64> = lower.clone();
        let mut basis = Vec::with_capacity(m);
        let mut artificial_rows = Vec::new();
        for (i, row) in lp.rows.iter().enumerate() {
            let activity: f64 = dense[i].iter().zip(&x).map(|(a, x)| a * x).sum();
            let mut chosen = None;
            let candidates = slack_of_row[i]
                .into_iter()
                .chain((0..ns).filter(|&j| count[j] == 1 && dense[i][j] != 0.0));
            for j in candidates {
                let a = dense[i][j];
                let value = (row.rhs - (activity - a * x[j])) / a;
                if value >= lower[j] && value <= upper[j] {
                    chosen = Some((j, value));
                    break;
                }
            }
            match chosen {
                Some((j, value)) => {
                    x[j] = value;
                    basis.push(j);
                }
                None => {
                    basis.push(usize::MAX);
                    artificial_rows.push((i, row.rhs - activity));
                }
            }
        }
        let n = first_artificial + artificial_rows.len();
        lower.extend(std::iter::repeat_n(0.0, artificial_rows.len()));
        upper.extend(std::iter::repeat_n(f64::INFINITY, artificial_rows.len()));
        x.extend(std::iter::repeat_n(0.0, artificial_rows.len()));
        let mut t = vec![0.0; m * n];
        for (i, row) in dense.iter().enumerate() {
            t[i * n..i * n + first_artificial].copy_from_slice(row);
        }
        for (k, &(i, residual)) in artificial_rows.iter().enumerate() {
            let a = first_artificial + k;
            let sign = if residual < 0.0 { -1.0 } else { 1.0 };
            t[i * n + a] = sign;
            x[a] = residual.abs();
            basis[i] = a;
        }
        // Normalize rows so the basic column is the unit vector.
        for i in 0..m {
            let p = t[i * n + basis[i]];
            if p != 1.0 {
                for v in &mut t[i * n..(i + 1) * n] {
                    *v /= p;
                }
            }
        }
        let mut is_basic = vec![false; n];
        for &b in &basis {
            is_basic[b] = true;
        }
        let scale = lp
            .rows
            .iter()
            .map(|r| r.rhs.abs())
            .chain(lp.upper.iter().filter(|u| u.is_finite()).map(|u| u.abs()))
            .fold(1.0f64, f64::max);
        Tableau {
            m,
            n,
            t,
            lower,
            upper,
            x,
            basis,
            is_basic,
            first_artificial,
            scale,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.n..(i + 1) * self.n];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let n = self.n;
        let p = self.t[r * n + q];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        let nz: Vec<usize> = (0..n).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for &j in &nz {
                    row[j] -= f * pivot_row[j];
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for &j in &nz {
                d[j] -= f * pivot_row[j];
            }
            d[q] = 0.0;
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Primal simplex on `cost`; returns the final status.
    fn optimize(&mut self, cost: &[f64], pricing: Pricing, iterations: &mut usize, limit: usize) -> LpStatus {
        let mut d = self.reduced_costs(cost);
        let cmax = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let opt_tol = 1e-11 * cmax.max(1.0);
        let mut degenerate = 0usize;
        loop {
            if *iterations >= limit {
                return LpStatus::IterationLimit;
            }
            let bland = pricing == Pricing::Bland || degenerate >= DEGENERATE_STREAK;
            // Entering variable and direction (+1 increase, -1 decrease).
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.n {
                if self.is_basic[j] || self.upper[j] == self.lower[j] {
                    continue;
                }
                let at_lower = self.x[j] == self.lower[j];
                let dir = if d[j] < -opt_tol && at_lower {
                    1.0
                } else if d[j] > opt_tol && !at_lower {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                return LpStatus::Optimal;
            };

            // Ratio test. Basic variable i moves by -dir * theta * t[i][q].
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i * self.n + q];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * a;
                let (limit_i, bound) = if rate < 0.0 {
                    (((self.x[b] - self.lower[b]) / -rate).max(0.0), self.lower[b])
                } else if self.upper[b].is_finite() {
                    (((self.upper[b] - self.x[b]) / rate).max(0.0), self.upper[b])
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit_i < theta => true,
                    Some((r, _)) if limit_i == theta => b < self.basis[r],
                    None if limit_i == theta => true,
                    _ => false,
                };
                if better {
                    theta = limit_i;
                    leave = Some((i, bound));
                }
            }
            if theta.is_infinite() {
                return LpStatus::Unbounded;
            }
            *iterations += 1;
            if theta <= 1e-12 * self.scale {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for i in 0..self.m {
                let a = self.t[i * self.n + q];
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= dir * theta * a;
                }
            }
            self.x[q] += dir * theta;
            match leave {
                None => {
                    // Bound flip.
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, bound)) => {
                    let b = self.basis[r];
                    self.pivot(r, q, &mut d);
                    self.x[b] = bound;
                }
            }
        }
    }

    fn run(mut self, lp: &LinearProgram, pricing: Pricing) -> LpSolution {
        let limit = 50 * (self.m + self.n) + 1000;
        let mut iterations = 0;
        let has_artificials = self.first_artificial < self.n;
        if has_artificials {
            let mut phase1 = vec![0.0; self.n];
            for c in &mut phase1[self.first_artificial..] {
                *c = 1.0;
            }
            let status = self.optimize(&phase1, pricing, &mut iterations, limit);
            if status == LpStatus::IterationLimit {
                return self.finish(lp, status, iterations);
            }
            let infeasibility: f64 = self.x[self.first_artificial..].iter().sum();
            if infeasibility > 1e-9 * self.scale {
                return self.finish(lp, LpStatus::Infeasible, iterations);
            }
            // Fix artificials at zero and drive basic ones out where possible.
            for a in self.first_artificial..self.n {
                self.upper[a] = 0.0;
                self.x[a] = 0.0;
            }
            let mut dummy = vec![0.0; self.n];
            for r in 0..self.m {
                if self.basis[r] < self.first_artificial {
                    continue;
                }
                let row = &self.t[r * self.n..(r + 1) * self.n];
                let candidate = (0..self.first_artificial)
                    .filter(|&j| !self.is_basic[j])
                    .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)));
                if let Some(j) = candidate {
                    if row[j].abs() > PIVOT_TOL {
                        self.pivot(r, j, &mut dummy);
                    }
                }
            }
        }
        let mut cost = lp.cost.clone();
        cost.resize(self.n, 0.0);
        let status = self.optimize(&cost, pricing, &mut iterations, limit);
        self.finish(lp, status, iterations)
    }

    fn finish(&self, lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
        let x: Vec<f64> = self.x[..lp.num_vars()].to_vec();
        LpSolution {
            status,
            objective: lp.objective_at(&x),
            x,
            iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-3.0, -5.0];
        lp.add_row(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        for pricing in [Pricing::Dantzig, Pricing::Bland] {
            let s = lp.solve(pricing);
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.objective + 36.0).abs() < 1e-12);
            assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y >= 2, x - y = 0.5, x <= 10.
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![1.0, 1.0];
        lp.upper[0] = 10.0;
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 2.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 0.5);
        let s = lp.solve(Pricing::Dantzig);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!((s.x[0] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.upper[0] = 1.0;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 2.0);
        assert_eq!(lp.solve(Pricing::Dantzig).status, LpStatus::Infeasible);
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-1.0, 0.0];
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(lp.solve(Pricing::Dantzig).status, LpStatus::Unbounded);
    }

    #[test]
    fn bound_flips_and_nonzero_lower_bounds() {
        // min -x - y, 1 <= x <= 2, -1 <= y <= 3, x + y <= 4.
        let mut lp = LinearProgram::new(2);
        lp.cost = vec![-1.0, -2.0];
        lp.lower = vec![1.0, -1.0];
        lp.upper = vec![2.0, 3.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        let s = lp.solve(Pricing::Dantzig);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic example that cycles under naive Dantzig pricing with
        // lowest-index ties.
        let mut lp = LinearProgram::new(4);
        lp.cost = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], Sense::Le, 1.0);
        for pricing in [Pricing::Dantzig, Pricing::Bland] {
            let s = lp.solve(pricing);
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.objective + 0.05).abs() < 1e-12);
        }
    }

    /// Brute-force oracle for 2-variable boxed LPs: enumerate vertices formed
    /// by pairs of active constraints.
    fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
        let mut lines: Vec<([f64; 2], f64)> = Vec::new();
        for k in 0..2 {
            let mut a = [0.0; 2];
            a[k] = 1.0;
            lines.push((a, lp.lower[k]));
            lines.push((a, lp.upper[k]));
        }
        for r in &lp.rows {
            let mut a = [0.0; 2];
            for &(j, v) in &r.coefs {
                a[j] += v;
            }
            lines.push((a, r.rhs));
        }
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a, b) = (lines[i], lines[j]);
                let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [
                    (a.1 * b.0[1] - a.0[1] * b.1) / det,
                    (a.0[0] * b.1 - a.1 * b.0[0]) / det,
                ];
                if lp.max_violation(&x) <= 1e-9 {
                    let v = lp.objective_at(&x);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            c in prop::collection::vec(-5i32..=5, 2),
            rows in prop::collection::vec((-4i32..=4, -4i32..=4, -6i32..=6, 0u8..3), 1..5),
        ) {
            let mut lp = LinearProgram::new(2);
            lp.cost = c.iter().map(|&v| v as f64).collect();
            lp.lower = vec![-3.0, -2.0];
            lp.upper = vec![4.0, 5.0];
            for (a, b, r, s) in rows {
                let sense = [Sense::Le, Sense::Ge, Sense::Eq][s as usize];
                lp.add_row(vec![(0, a as f64), (1, b as f64)], sense, r as f64);
            }
            let oracle = vertex_oracle(&lp);
            for pricing in [Pricing::Dantzig, Pricing::Bland] {
                let s = lp.solve(pricing);
                match oracle {
                    Some(v) => {
                        prop_assert_eq!(s.status, LpStatus::Optimal);
                        prop_assert!((s.objective - v).abs() <= 1e-9);
                        prop_assert!(lp.max_violation(&s.x) <= 1e-9);
                    }
                    None => prop_assert_eq!(s.status, LpStatus::Infeasible),
                }
            }
        }
    }
}
