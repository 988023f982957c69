//! Best-first branch-and-bound over the label variables.
//!
//! Node relaxations use an equivalent compact form of the model's LP
//! relaxation: `v = vbar + x+ - x-` with `x+, x- >= 0` replaces the `u_P`
//! rows, and each facet difference is split as `v_a - v_b = s_E - t_E` with
//! `s_E, t_E >= 0`, which replaces the two `w_E` rows. At an optimum at most
//! one of each pair is positive, so both forms have the same value. The
//! compact form has one equality row per facet plus the budget row, and the
//! `s_E`/`t_E` columns give a feasible starting basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::control::ControlField;
use crate::error::{Result, SlipError};

use super::simplex::{LinearProgram, LpStatus, Pricing, Sense};
use super::{IPSolution, SolveStatus, TRInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BnbOptions {
    pub node_limit: usize,
    /// Node relaxations solved concurrently per batch.
    pub threads: usize,
    pub pricing: Pricing,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            node_limit: 100_000,
            threads: 1,
            pricing: Pricing::Dantzig,
        }
    }
}

impl BnbOptions {
    /// Default options with the thread count taken from `SLIP_THREADS`.
    pub fn from_env() -> Self {
        let threads = std::env::var("SLIP_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&t| t >= 1)
            .unwrap_or(1);
        BnbOptions {
            threads,
            ..BnbOptions::default()
        }
    }
}

const INTEGRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec<i64>,
    hi: Vec<i64>,
    bound: f64,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the smallest bound, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Relaxation<'a> {
    inst: &'a TRInstance,
    n: usize,
    facets: Vec<(usize, usize, f64)>,
    constant: f64,
}

enum NodeLp {
    Infeasible,
    /// Relaxed label values and the relaxation value (constant included).
    Solved(Vec<f64>, f64),
    /// The LP could not be solved; no bound is available.
    Failed,
}

impl<'a> Relaxation<'a> {
    fn new(inst: &'a TRInstance) -> Self {
        let grid = inst.grid();
        let facets = grid
            .interior_facets()
            .iter()
            .map(|f| (f.cell_a, f.cell_b, f.measure))
            .collect();
        Relaxation {
            inst,
            n: grid.num_cells(),
            facets,
            constant: -inst.alpha() * inst.vbar().tv(),
        }
    }

    fn solve(&self, lo: &[i64], hi: &[i64], pricing: Pricing) -> NodeLp {
        let n = self.n;
        let m = self.facets.len();
        let vbar = self.inst.vbar().values();
        let c = self.inst.c().values();
        let alpha = self.inst.alpha();
        let mut lp = LinearProgram::new(2 * n + 2 * m);
        for p in 0..n {
            let b = vbar[p];
            lp.cost[p] = c[p];
            lp.cost[n + p] = -c[p];
            lp.lower[p] = (lo[p] - b).max(0) as f64;
            lp.upper[p] = (hi[p] - b).max(0) as f64;
            lp.lower[n + p] = (b - hi[p]).max(0) as f64;
            lp.upper[n + p] = (b - lo[p]).max(0) as f64;
        }
        for (k, &(a, b, h)) in self.facets.iter().enumerate() {
            let (s, t) = (2 * n + k, 2 * n + m + k);
            lp.cost[s] = alpha * h;
            lp.cost[t] = alpha * h;
            lp.add_row(
                vec![(a, 1.0), (n + a, -1.0), (b, -1.0), (n + b, 1.0), (s, -1.0), (t, 1.0)],
                Sense::Eq,
                (vbar[b] - vbar[a]) as f64,
            );
        }
        let lambda = self.inst.grid().cell_measure();
        lp.add_row(
            (0..2 * n).map(|j| (j, lambda)).collect(),
            Sense::Le,
            self.inst.delta() + self.inst.feasibility_tolerance(),
        );
        let sol = lp.solve(pricing);
        match sol.status {
            LpStatus::Optimal => {
                let v = (0..n)
                    .map(|p| vbar[p] as f64 + sol.x[p] - sol.x[n + p])
                    .collect();
                NodeLp::Solved(v, sol.objective + self.constant)
            }
            LpStatus::Infeasible => NodeLp::Infeasible,
            LpStatus::Unbounded | LpStatus::IterationLimit => NodeLp::Failed,
        }
    }
}

struct Search<'a> {
    inst: &'a TRInstance,
    incumbent: ControlField,
    best: f64,
    prune_tol: f64,
}

impl Search<'_> {
    fn offer(&mut self, values: Vec<i64>) -> Result<()> {
        let candidate = self.inst.vbar().with_values(values)?;
        if !self.inst.is_feasible(&candidate)? {
            return Ok(());
        }
        let obj = self.inst.objective(&candidate);
        let better = obj < self.best
            || (obj == self.best && candidate.values() < self.incumbent.values());
        if better {
            self.best = obj;
            self.incumbent = candidate;
        }
        Ok(())
    }
}

/// Solves the subproblem to certified optimality unless `node_limit` nodes
/// are processed first, in which case the incumbent is returned with status
/// [`SolveStatus::NodeLimit`].
pub fn solve_bnb(inst: &TRInstance, opts: &BnbOptions) -> Result<IPSolution> {
    if opts.node_limit == 0 {
        return Err(SlipError::Usage("node limit must be positive".into()));
    }
    let labels = inst.labels().clone();
    let n = inst.grid().num_cells();
    let vbar = inst.vbar().values().to_vec();
    let relax = Relaxation::new(inst);
    let scale = 1.0
        + inst.c().values().iter().map(|c| c.abs()).sum::<f64>()
            * (labels.max() - labels.min()) as f64;
    let mut search = Search {
        inst,
        incumbent: inst.vbar().clone(),
        best: 0.0,
        prune_tol: 1e-11 * scale,
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        lo: vec![labels.min(); n],
        hi: vec![labels.max(); n],
        bound: f64::NEG_INFINITY,
        seq,
    });
    let mut processed = 0usize;
    let threads = opts.threads.max(1);

    while !heap.is_empty() {
        if processed >= opts.node_limit {
            let open = heap.iter().any(|n| n.bound < search.best - search.prune_tol);
            if !open {
                break;
            }
            return Ok(IPSolution {
                v_opt: search.incumbent,
                objective: search.best,
                status: SolveStatus::NodeLimit,
                nodes: processed,
            });
        }
        let mut batch = Vec::with_capacity(threads);
        while batch.len() < threads.min(opts.node_limit - processed) {
            let Some(node) = heap.pop() else { break };
            if node.bound >= search.best - search.prune_tol {
                continue;
            }
            batch.push(node);
        }
        if batch.is_empty() {
            continue;
        }
        processed += batch.len();
        let results: Vec<NodeLp> = if batch.len() == 1 {
            vec![relax.solve(&batch[0].lo, &batch[0].hi, opts.pricing)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|node| {
                        let relax = &relax;
                        scope.spawn(move || relax.solve(&node.lo, &node.hi, opts.pricing))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("relaxation worker panicked"))
                    .collect()
            })
        };

        for (node, result) in batch.into_iter().zip(results) {
            let (relaxed, bound) = match result {
                NodeLp::Infeasible => continue,
                NodeLp::Solved(v, bound) => (v, bound),
                NodeLp::Failed => {
                    let mid = (0..n)
                        .map(|p| 0.5 * (node.lo[p] + node.hi[p]) as f64)
                        .collect();
                    (mid, node.bound)
                }
            };
            if bound >= search.best - search.prune_tol {
                continue;
            }

            // Round toward vbar: never lengthens the step, so usually feasible.
            let rounded: Vec<i64> = (0..n)
                .map(|p| {
                    let x = relaxed[p];
                    let b = vbar[p] as f64;
                    let r = if x >= b {
                        labels.below(x + INTEGRALITY_TOL).unwrap_or(vbar[p]).max(vbar[p])
                    } else {
                        labels.above(x - INTEGRALITY_TOL).unwrap_or(vbar[p]).min(vbar[p])
                    };
                    r.clamp(node.lo[p], node.hi[p])
                })
                .collect();
            search.offer(rounded)?;

            // Most fractional cell, lowest index on ties.
            let mut branch: Option<(usize, f64)> = None;
            let mut worst = 0.0;
            for p in 0..n {
                if node.lo[p] == node.hi[p] {
                    continue;
                }
                let x = relaxed[p].clamp(node.lo[p] as f64, node.hi[p] as f64);
                let dist = (x - labels.nearest(x) as f64).abs();
                if dist > worst {
                    worst = dist;
                    branch = Some((p, x));
                }
            }
            if worst <= INTEGRALITY_TOL {
                let nearest: Vec<i64> = (0..n)
                    .map(|p| labels.nearest(relaxed[p]).clamp(node.lo[p], node.hi[p]))
                    .collect();
                let before = search.best;
                search.offer(nearest)?;
                if search.best < before || worst == 0.0 {
                    continue;
                }
            }
            let Some((p, x)) = branch else { continue };
            if let Some(down) = labels.below(x).filter(|&d| d >= node.lo[p]) {
                let mut hi = node.hi.clone();
                hi[p] = down;
                seq += 1;
                heap.push(Node {
                    lo: node.lo.clone(),
                    hi,
                    bound,
                    seq,
                });
            }
            if let Some(up) = labels.above(x).filter(|&u| u <= node.hi[p]) {
                let mut lo = node.lo.clone();
                lo[p] = up;
                seq += 1;
                heap.push(Node {
                    lo,
                    hi: node.hi.clone(),
                    bound,
                    seq,
                });
            }
        }
    }
    Ok(IPSolution {
        v_opt: search.incumbent,
        objective: search.best,
        status: SolveStatus::Optimal,
        nodes: processed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::LabelSet;
    use crate::grid::GridSpec;
    use crate::objective::GradientField;
    use crate::subproblem::{build_ip, solve_exhaustive};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, nx: usize, ny: usize, labels: &[i64]) -> TRInstance {
        let g = GridSpec::unit(nx, ny).unwrap();
        let l = LabelSet::new(labels.to_vec()).unwrap();
        let vbar = (0..g.num_cells())
            .map(|_| labels[rng.gen_range(0..labels.len())])
            .collect();
        let c = (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let delta = [0.0, 0.1, 0.3, 0.5, 1.0][rng.gen_range(0..5)];
        let alpha = [0.0, 1e-4, 0.1, 0.5][rng.gen_range(0..4)];
        TRInstance::new(
            ControlField::new(g, l, vbar).unwrap(),
            GradientField::new(g, c).unwrap(),
            delta,
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn root_relaxation_matches_model_relaxation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let inst = random_instance(&mut rng, 3, 2, &[0, 1, 2]);
            let relax = Relaxation::new(&inst);
            let labels = inst.labels();
            let n = inst.grid().num_cells();
            let NodeLp::Solved(_, compact) =
                relax.solve(&vec![labels.min(); n], &vec![labels.max(); n], Pricing::Dantzig)
            else {
                panic!("root relaxation failed");
            };
            let model = build_ip(&inst);
            let mut lp = model.relaxation();
            // Same feasibility slack on the budget row as the compact form.
            let budget = 2 * n;
            lp.rows[budget].rhs += inst.feasibility_tolerance();
            let verbatim = lp.solve(Pricing::Bland);
            assert_eq!(verbatim.status, LpStatus::Optimal);
            let value = model.objective_at(&verbatim.x);
            assert!((value - compact).abs() <= 1e-9, "{value} vs {compact}");
        }
    }

    #[test]
    fn matches_enumeration_with_gapped_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..60 {
            let inst = random_instance(&mut rng, 2, 3, &[-1, 2, 3]);
            let ex = solve_exhaustive(&inst).unwrap();
            for threads in [1, 3] {
                let opts = BnbOptions {
                    threads,
                    ..BnbOptions::default()
                };
                let bb = solve_bnb(&inst, &opts).unwrap();
                assert_eq!(bb.status, SolveStatus::Optimal);
                assert!((bb.objective - ex.objective).abs() <= 1e-9);
                assert!(inst.is_feasible(&bb.v_opt).unwrap());
            }
        }
    }

    #[test]
    fn bland_pricing_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 3, 3, &[0, 1, 2]);
            let a = solve_bnb(&inst, &BnbOptions::default()).unwrap();
            let b = solve_bnb(
                &inst,
                &BnbOptions {
                    pricing: Pricing::Bland,
                    ..BnbOptions::default()
                },
            )
            .unwrap();
            assert!((a.objective - b.objective).abs() <= 1e-9);
        }
    }

    #[test]
    fn node_limit_returns_incumbent() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let inst = random_instance(&mut rng, 3, 3, &[0, 1, 2]);
        let opts = BnbOptions {
            node_limit: 1,
            ..BnbOptions::default()
        };
        let s = solve_bnb(&inst, &opts).unwrap();
        assert!(s.objective <= 0.0);
        assert!(inst.is_feasible(&s.v_opt).unwrap());
    }
}
