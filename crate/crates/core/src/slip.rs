//! The sequential linear integer programming (SLIP) trust-region loop.
//!
//! Each outer iteration evaluates the gradient once at the current iterate,
//! resets the radius to `delta0` and solves trust-region subproblems with
//! radius `delta0 * 2^-k` until the trial point achieves sufficient decrease
//! `ared >= sigma * pred`. A zero predicted reduction certifies that no
//! better point exists in the trust region and ends the run.

use serde::Serialize;

use crate::control::ControlField;
use crate::error::{Result, SlipError};
use crate::objective::SmoothObjective;
use crate::subproblem::{pred, solve_bnb, BnbOptions, SolveStatus, TRInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlipConfig {
    pub delta0: f64,
    pub sigma: f64,
    pub delta_min: f64,
    pub max_outer: usize,
    pub node_limit: usize,
    pub seed: u64,
}

impl SlipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(SlipError::Usage("delta0 must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(SlipError::Usage("sigma must lie in (0,1)".into()));
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return Err(SlipError::Usage("delta_min must be positive".into()));
        }
        if self.node_limit == 0 {
            return Err(SlipError::Usage("node_limit must be positive".into()));
        }
        Ok(())
    }
}

/// One inner iteration. `j_value`, `f_value` and `tv_value` belong to the
/// trial point, so `ared` can be recomputed from consecutive records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub outer: usize,
    pub inner: usize,
    pub delta: f64,
    pub pred: f64,
    pub ared: f64,
    pub accepted: bool,
    pub j_value: f64,
    pub f_value: f64,
    pub tv_value: f64,
    pub subproblem_status: SolveStatus,
    pub nodes: usize,
    pub step_l1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    PredNonpositive,
    DeltaMin,
    MaxOuter,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::PredNonpositive => "pred_nonpositive",
            Termination::DeltaMin => "delta_min",
            Termination::MaxOuter => "max_outer",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlipTrace {
    pub config: SlipConfig,
    pub initial: ControlField,
    pub initial_j: f64,
    pub records: Vec<IterationRecord>,
    /// Accepted iterates in order, excluding the initial control.
    pub iterates: Vec<ControlField>,
    pub final_control: ControlField,
    pub final_j: f64,
    pub final_f: f64,
    pub final_tv: f64,
    pub termination: Termination,
}

/// Called after every inner iteration with the record and, when accepted,
/// the new iterate.
pub trait Observer {
    fn on_record(&mut self, record: &IterationRecord, accepted: Option<&ControlField>) -> Result<()>;
}

impl Observer for () {
    fn on_record(&mut self, _: &IterationRecord, _: Option<&ControlField>) -> Result<()> {
        Ok(())
    }
}

/// `J(v_old) - J(v_new)`.
pub fn ared<O: SmoothObjective + ?Sized>(
    objective: &O,
    alpha: f64,
    v_old: &ControlField,
    v_new: &ControlField,
) -> Result<f64> {
    let j_old = objective.f_value(v_old)? + alpha * v_old.tv();
    let j_new = objective.f_value(v_new)? + alpha * v_new.tv();
    Ok(j_old - j_new)
}

pub fn run<O: SmoothObjective + ?Sized>(
    objective: &O,
    alpha: f64,
    v0: &ControlField,
    cfg: &SlipConfig,
) -> Result<SlipTrace> {
    run_observed(objective, alpha, v0, cfg, &BnbOptions::from_env(), &mut ())
}

pub fn run_observed<O: SmoothObjective + ?Sized>(
    objective: &O,
    alpha: f64,
    v0: &ControlField,
    cfg: &SlipConfig,
    bnb: &BnbOptions,
    observer: &mut dyn Observer,
) -> Result<SlipTrace> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SlipError::Usage(format!("alpha must be positive, got {alpha}")));
    }
    if v0.grid() != objective.control_grid() {
        return Err(SlipError::Usage("initial control is on a different grid".into()));
    }
    let opts = BnbOptions {
        node_limit: cfg.node_limit,
        ..*bnb
    };
    let mut v = v0.clone();
    let mut f = objective.f_value(&v)?;
    let mut tv = v.tv();
    let mut j = f + alpha * tv;
    let initial_j = j;
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    let mut termination = Termination::MaxOuter;

    'outer: for outer in 1..=cfg.max_outer {
        let g = objective.gradient(&v)?;
        let mut inner = 0usize;
        loop {
            let delta = cfg.delta0 * 0.5f64.powi(inner as i32);
            if delta < cfg.delta_min {
                termination = Termination::DeltaMin;
                break 'outer;
            }
            let inst = TRInstance::new(v.clone(), g.clone(), delta, alpha)?;
            let sol = solve_bnb(&inst, &opts)?;
            if sol.status == SolveStatus::NodeLimit {
                return Err(SlipError::NodeLimit(cfg.node_limit));
            }
            let trial = sol.v_opt;
            let p = pred(&inst, &trial)?;
            let scale = 1.0 + g.values().iter().map(|c| c.abs()).sum::<f64>();
            if p < -1e-9 * scale {
                return Err(SlipError::Soundness(p));
            }
            let f_trial = objective.f_value(&trial)?;
            let tv_trial = trial.tv();
            let j_trial = f_trial + alpha * tv_trial;
            let a = j - j_trial;
            let stop = p <= 0.0;
            let accepted = !stop && a >= cfg.sigma * p;
            let record = IterationRecord {
                outer,
                inner,
                delta,
                pred: p,
                ared: a,
                accepted,
                j_value: j_trial,
                f_value: f_trial,
                tv_value: tv_trial,
                subproblem_status: sol.status,
                nodes: sol.nodes,
                step_l1: v.l1_dist(&trial)?,
            };
            observer.on_record(&record, accepted.then_some(&trial))?;
            records.push(record);
            if stop {
                termination = Termination::PredNonpositive;
                break 'outer;
            }
            if accepted {
                debug_assert!(trial.values().iter().all(|x| trial.labels().contains(*x)));
                v = trial;
                f = f_trial;
                tv = tv_trial;
                j = j_trial;
                iterates.push(v.clone());
                break;
            }
            inner += 1;
        }
    }

    Ok(SlipTrace {
        config: *cfg,
        initial: v0.clone(),
        initial_j,
        records,
        iterates,
        final_control: v,
        final_j: j,
        final_f: f,
        final_tv: tv,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::LabelSet;
    use crate::grid::GridSpec;
    use crate::objective::{GradientField, LinearObjective, Problem};
    use crate::pde::PdeSetup;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(delta0: f64) -> SlipConfig {
        SlipConfig {
            delta0,
            sigma: 1e-4,
            delta_min: 1e-3,
            max_outer: 50,
            node_limit: 10_000,
            seed: 0,
        }
    }

    fn labels() -> LabelSet {
        LabelSet::new(vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let g = GridSpec::unit(4, 4).unwrap();
        let v0 = ControlField::constant(g, labels(), 1).unwrap();
        let lin = LinearObjective::new(GradientField::zeros(g));
        let trace = run(&lin, 1e-4, &v0, &cfg(0.5)).unwrap();
        assert_eq!(trace.termination, Termination::PredNonpositive);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].pred, 0.0);
        assert!(trace.iterates.is_empty());
    }

    #[test]
    fn linear_surrogate_jumps_to_top_label() {
        let g = GridSpec::unit(3, 3).unwrap();
        let c = GradientField::new(g, vec![-g.cell_measure(); 9]).unwrap();
        let lin = LinearObjective::new(c);
        let v0 = ControlField::constant(g, labels(), 0).unwrap();
        let trace = run(&lin, 1e-6, &v0, &cfg(2.0)).unwrap();
        let first = &trace.records[0];
        assert!(first.accepted);
        assert_eq!(first.inner, 0);
        assert_eq!(first.ared, first.pred);
        assert!(trace.iterates[0].values().iter().all(|&x| x == 2));
        assert_eq!(trace.termination, Termination::PredNonpositive);
    }

    #[test]
    fn ared_is_difference_of_j() {
        let state = GridSpec::unit(16, 16).unwrap();
        let control = GridSpec::unit(4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = ControlField::new(control, labels(), (0..16).map(|_| rng.gen_range(0..3)).collect())
            .unwrap();
        let pde = PdeSetup::new(0.1, [0.7, 0.1], state).unwrap();
        let prob = Problem::with_reference(&pde, &w, 1e-3).unwrap();
        let a = ControlField::new(control, labels(), (0..16).map(|_| rng.gen_range(0..3)).collect())
            .unwrap();
        let b = ControlField::new(control, labels(), (0..16).map(|_| rng.gen_range(0..3)).collect())
            .unwrap();
        assert_eq!(ared(&prob, 1e-3, &a, &a).unwrap(), 0.0);
        let expect = prob.j_value(&a).unwrap() - prob.j_value(&b).unwrap();
        assert!((ared(&prob, 1e-3, &a, &b).unwrap() - expect).abs() <= 1e-12);
    }

    #[test]
    fn pde_run_invariants() {
        let state = GridSpec::unit(16, 16).unwrap();
        let control = GridSpec::unit(4, 4).unwrap();
        let w = ControlField::from_fn(control, labels(), |p| {
            if (p[0] - 0.4).hypot(p[1] - 0.5) < 0.3 {
                2
            } else {
                0
            }
        })
        .unwrap();
        let pde = PdeSetup::new(0.1, [0.7, 0.1], state).unwrap();
        let prob = Problem::with_reference(&pde, &w, 1e-4).unwrap();
        let v0 = ControlField::constant(control, labels(), 0).unwrap();
        let c = SlipConfig {
            delta_min: 1.0 / 16.0,
            ..cfg(0.5)
        };
        let trace = run(&prob, 1e-4, &v0, &c).unwrap();
        assert_ne!(trace.termination, Termination::MaxOuter);
        let mut last = trace.initial_j;
        for r in trace.records.iter().filter(|r| r.accepted) {
            assert!(r.j_value < last);
            assert!(r.ared >= c.sigma * r.pred);
            assert!(r.step_l1 <= r.delta + 1e-12);
            assert_eq!(r.delta, c.delta0 * 0.5f64.powi(r.inner as i32));
            last = r.j_value;
        }
        assert!(trace.final_j < trace.initial_j);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = GridSpec::unit(2, 2).unwrap();
        let v0 = ControlField::constant(g, labels(), 0).unwrap();
        let lin = LinearObjective::new(GradientField::zeros(g));
        for bad in [
            SlipConfig { sigma: 1.5, ..cfg(1.0) },
            SlipConfig { delta0: 0.0, ..cfg(1.0) },
            SlipConfig { delta_min: 0.0, ..cfg(1.0) },
        ] {
            assert!(run(&lin, 1e-4, &v0, &bad).is_err());
        }
        assert!(run(&lin, 0.0, &v0, &cfg(1.0)).is_err());
    }
}
