//! Trust-region subproblem
//!
//! ```text
//! min_v  (c, v - vbar) + alpha TV(v) - alpha TV(vbar)
//! s.t.   ||v - vbar||_L1 <= delta,  v_P in V
//! ```
//!
//! solved exactly either by enumeration (tiny grids) or by branch-and-bound
//! over an LP relaxation.

mod bnb;
mod exhaustive;
mod model;
pub mod simplex;

use std::fmt::Write as _;

use serde::Serialize;

use crate::control::{ControlField, LabelSet};
use crate::error::{Result, SlipError};
use crate::grid::GridSpec;
use crate::objective::GradientField;

pub use bnb::{solve_bnb, BnbOptions};
pub use exhaustive::solve_exhaustive;
pub use model::{build_ip, IpRow, IpVar, IPModel, VarKind};
pub use simplex::Pricing;

/// One trust-region subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct TRInstance {
    vbar: ControlField,
    c: GradientField,
    delta: f64,
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IPSolution {
    pub v_opt: ControlField,
    pub objective: f64,
    pub status: SolveStatus,
    /// Branch-and-bound nodes processed, or assignments enumerated.
    pub nodes: usize,
}

impl TRInstance {
    pub fn new(vbar: ControlField, c: GradientField, delta: f64, alpha: f64) -> Result<Self> {
        if c.grid() != vbar.grid() {
            return Err(SlipError::Usage("gradient and control grids differ".into()));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(SlipError::Usage(format!("delta must be nonnegative, got {delta}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SlipError::Usage(format!("alpha must be nonnegative, got {alpha}")));
        }
        Ok(TRInstance {
            vbar,
            c,
            delta,
            alpha,
        })
    }

    pub fn vbar(&self) -> &ControlField {
        &self.vbar
    }

    pub fn c(&self) -> &GradientField {
        &self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &GridSpec {
        self.vbar.grid()
    }

    pub fn labels(&self) -> &LabelSet {
        self.vbar.labels()
    }

    /// Slack granted to the L1 row to absorb rounding in `lambda(P) sum |.|`.
    pub fn feasibility_tolerance(&self) -> f64 {
        1e-12 * self.delta.max(1.0)
    }

    pub fn is_feasible(&self, v: &ControlField) -> Result<bool> {
        Ok(self.vbar.l1_dist(v)? <= self.delta + self.feasibility_tolerance())
    }

    /// Subproblem objective at `v`; `v = vbar` scores exactly zero.
    pub fn objective(&self, v: &ControlField) -> f64 {
        let linear: f64 = self
            .c
            .values()
            .iter()
            .zip(v.values().iter().zip(self.vbar.values()))
            .map(|(c, (a, b))| c * (a - b) as f64)
            .sum();
        linear + self.alpha * v.tv() - self.alpha * self.vbar.tv()
    }

    /// Plain-text form: `nx ny lx ly`, labels, `delta alpha`, then one
    /// `vbar_P c_P` line per cell in row-major order.
    pub fn to_text(&self) -> String {
        let g = self.grid();
        let mut out = format!("{} {} {} {}\n", g.nx(), g.ny(), g.lx(), g.ly());
        let labels: Vec<String> = self.labels().as_slice().iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "{}", labels.join(" "));
        let _ = writeln!(out, "{} {}", self.delta, self.alpha);
        for (v, c) in self.vbar.values().iter().zip(self.c.values()) {
            let _ = writeln!(out, "{v} {c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ctx = "trust-region instance";
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| SlipError::parse(ctx, format!("missing {what}")))
        };
        fn nums<T: std::str::FromStr>(ctx: &str, n: usize, line: &str) -> Result<Vec<T>> {
            line.split_whitespace()
                .map(|s| s.parse::<T>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| SlipError::parse(ctx, format!("line {n}: malformed number")))
        }
        let (n, head) = next("grid line")?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 4 {
            return Err(SlipError::parse(ctx, format!("line {n}: expected `nx ny lx ly`")));
        }
        let nx: usize = head[0]
            .parse()
            .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad nx")))?;
        let ny: usize = head[1]
            .parse()
            .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad ny")))?;
        let lx: f64 = head[2]
            .parse()
            .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad lx")))?;
        let ly: f64 = head[3]
            .parse()
            .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad ly")))?;
        let grid = GridSpec::new(nx, ny, lx, ly)?;
        let (n, l) = next("label line")?;
        let labels = LabelSet::new(nums::<i64>(ctx, n, l)?)?;
        let (n, l) = next("`delta alpha` line")?;
        let da = nums::<f64>(ctx, n, l)?;
        if da.len() != 2 {
            return Err(SlipError::parse(ctx, format!("line {n}: expected `delta alpha`")));
        }
        let mut vbar = Vec::with_capacity(grid.num_cells());
        let mut c = Vec::with_capacity(grid.num_cells());
        for _ in 0..grid.num_cells() {
            let (n, l) = next("cell line")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(SlipError::parse(ctx, format!("line {n}: expected `vbar c`")));
            }
            vbar.push(
                parts[0]
                    .parse::<i64>()
                    .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad label")))?,
            );
            c.push(
                parts[1]
                    .parse::<f64>()
                    .map_err(|_| SlipError::parse(ctx, format!("line {n}: bad cost")))?,
            );
        }
        if let Some((n, _)) = lines.next() {
            return Err(SlipError::parse(ctx, format!("line {n}: trailing content")));
        }
        TRInstance::new(
            ControlField::new(grid, labels, vbar)?,
            GradientField::new(grid, c)?,
            da[0],
            da[1],
        )
    }
}

/// Predicted reduction `(c, vbar - v) + alpha TV(vbar) - alpha TV(v)`.
pub fn pred(inst: &TRInstance, vtilde: &ControlField) -> Result<f64> {
    if vtilde.labels() != inst.labels() {
        return Err(SlipError::Usage("trial control uses a different label set".into()));
    }
    if !inst.is_feasible(vtilde)? {
        return Err(SlipError::Usage(
            "trial control violates the trust-region constraint".into(),
        ));
    }
    Ok(-inst.objective(vtilde))
}
