use crate::error::{Result, SlipError};

use super::{IPSolution, SolveStatus, TRInstance};

const MAX_ASSIGNMENTS: f64 = 1e6;

/// Enumerates every label assignment in lexicographic order (cell 0 most
/// significant) and keeps the first one attaining the smallest objective.
pub fn solve_exhaustive(inst: &TRInstance) -> Result<IPSolution> {
    let labels = inst.labels().as_slice();
    let n = inst.grid().num_cells();
    let count = (labels.len() as f64).powi(n as i32);
    if count > MAX_ASSIGNMENTS {
        return Err(SlipError::InstanceTooLarge(count));
    }
    let mut digits = vec![0usize; n];
    let mut candidate = inst.vbar().clone();
    let mut best = inst.vbar().clone();
    let mut best_obj = f64::INFINITY;
    let mut visited = 0usize;
    loop {
        visited += 1;
        candidate = candidate.with_values(digits.iter().map(|&d| labels[d]).collect())?;
        if inst.is_feasible(&candidate)? {
            let obj = inst.objective(&candidate);
            if obj < best_obj {
                best_obj = obj;
                best = candidate.clone();
            }
        }
        // Odometer increment, last cell fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(IPSolution {
                    v_opt: best,
                    objective: best_obj,
                    status: SolveStatus::Optimal,
                    nodes: visited,
                });
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < labels.len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlField, LabelSet};
    use crate::grid::GridSpec;
    use crate::objective::GradientField;

    #[test]
    fn guards_large_instances() {
        let g = GridSpec::unit(13, 1).unwrap();
        let l = LabelSet::new(vec![0, 1, 2, 3]).unwrap();
        let inst = TRInstance::new(
            ControlField::constant(g, l, 0).unwrap(),
            GradientField::zeros(g),
            1.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(solve_exhaustive(&inst), Err(SlipError::InstanceTooLarge(_))));
    }

    #[test]
    fn ties_go_to_lexicographically_smallest() {
        // Zero costs, no TV: every feasible assignment scores 0.
        let g = GridSpec::unit(2, 1).unwrap();
        let l = LabelSet::new(vec![0, 1]).unwrap();
        let vbar = ControlField::new(g, l, vec![1, 1]).unwrap();
        let inst = TRInstance::new(vbar, GradientField::zeros(g), 2.0, 0.0).unwrap();
        let s = solve_exhaustive(&inst).unwrap();
        assert_eq!(s.v_opt.values(), &[0, 0]);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.nodes, 4);
    }
}
