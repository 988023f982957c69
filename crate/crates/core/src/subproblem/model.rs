//! Integer-linear-program encoding of the subproblem with the absolute values
//! linearized by auxiliary variables `u_P` (cell moves) and `w_E` (facet jumps).

use std::fmt::Write as _;

use super::simplex::{LinearProgram, Sense};
use super::TRInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Integer label `v_P`.
    Label { cell: usize },
    /// `u_P >= |v_P - vbar_P|`.
    Move { cell: usize },
    /// `w_E >= |v_a - v_b|`.
    Jump { facet: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpVar {
    pub kind: VarKind,
    pub integer: bool,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpRow {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Variables are ordered `v_P`, then `u_P`, then `w_E`. Rows are, per cell,
/// `v_P - u_P <= vbar_P` and `-v_P - u_P <= -vbar_P`; then the L1 budget
/// `sum lambda(P) u_P <= delta`; then, per facet, `v_a - v_b - w_E <= 0` and
/// `-v_a + v_b - w_E <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IPModel {
    pub vars: Vec<IpVar>,
    pub rows: Vec<IpRow>,
    /// Constant `-alpha TV(vbar)` added to the linear objective.
    pub objective_constant: f64,
    /// Labels allowed for the integer variables.
    pub labels: Vec<i64>,
}

pub fn build_ip(inst: &TRInstance) -> IPModel {
    let grid = inst.grid();
    let n = grid.num_cells();
    let facets = grid.interior_facets();
    let labels = inst.labels();
    let (lo, hi) = (labels.min() as f64, labels.max() as f64);
    let vbar = inst.vbar().values();
    let c = inst.c().values();

    let mut vars = Vec::with_capacity(2 * n + facets.len());
    let mut constant = 0.0;
    for cell in 0..n {
        constant -= c[cell] * vbar[cell] as f64;
        vars.push(IpVar {
            kind: VarKind::Label { cell },
            integer: true,
            lower: lo,
            upper: hi,
            cost: c[cell],
        });
    }
    for cell in 0..n {
        vars.push(IpVar {
            kind: VarKind::Move { cell },
            integer: false,
            lower: 0.0,
            upper: f64::INFINITY,
            cost: 0.0,
        });
    }
    for (k, f) in facets.iter().enumerate() {
        vars.push(IpVar {
            kind: VarKind::Jump { facet: k },
            integer: false,
            lower: 0.0,
            upper: f64::INFINITY,
            cost: inst.alpha() * f.measure,
        });
    }

    let mut rows = Vec::with_capacity(2 * n + 1 + 2 * facets.len());
    for cell in 0..n {
        let b = vbar[cell] as f64;
        rows.push(IpRow {
            name: format!("move_up_{cell}"),
            coefs: vec![(cell, 1.0), (n + cell, -1.0)],
            sense: Sense::Le,
            rhs: b,
        });
        rows.push(IpRow {
            name: format!("move_down_{cell}"),
            coefs: vec![(cell, -1.0), (n + cell, -1.0)],
            sense: Sense::Le,
            rhs: -b,
        });
    }
    rows.push(IpRow {
        name: "trust_region".into(),
        coefs: (0..n).map(|cell| (n + cell, grid.cell_measure())).collect(),
        sense: Sense::Le,
        rhs: inst.delta(),
    });
    for (k, f) in facets.iter().enumerate() {
        let w = 2 * n + k;
        rows.push(IpRow {
            name: format!("jump_pos_{k}"),
            coefs: vec![(f.cell_a, 1.0), (f.cell_b, -1.0), (w, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        rows.push(IpRow {
            name: format!("jump_neg_{k}"),
            coefs: vec![(f.cell_a, -1.0), (f.cell_b, 1.0), (w, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
    }
    constant -= inst.alpha() * inst.vbar().tv();
    IPModel {
        vars,
        rows,
        objective_constant: constant,
        labels: labels.as_slice().to_vec(),
    }
}

impl IPModel {
    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn num_continuous(&self) -> usize {
        self.vars.len() - self.num_integer()
    }

    /// Relaxation with integer variables on the interval hull of the labels.
    pub fn relaxation(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.vars.len());
        for (k, v) in self.vars.iter().enumerate() {
            lp.cost[k] = v.cost;
            lp.lower[k] = v.lower;
            lp.upper[k] = v.upper;
        }
        for r in &self.rows {
            lp.add_row(r.coefs.clone(), r.sense, r.rhs);
        }
        lp
    }

    /// Model objective, constant included, at a full variable vector.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum::<f64>()
    }

    /// CPLEX LP text format; label domains are listed in a comment since the
    /// format only knows integer intervals.
    pub fn to_lp_string(&self) -> String {
        let name = |k: usize| match self.vars[k].kind {
            VarKind::Label { cell } => format!("v{cell}"),
            VarKind::Move { cell } => format!("u{cell}"),
            VarKind::Jump { facet } => format!("w{facet}"),
        };
        let term = |out: &mut String, first: bool, a: f64, k: usize| {
            let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
            let _ = write!(out, " {sign} {} {}", a.abs(), name(k));
        };
        let mut out = String::new();
        let _ = writeln!(out, "\\ labels: {:?}", self.labels);
        let _ = writeln!(out, "\\ objective constant: {}", self.objective_constant);
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (k, v) in self.vars.iter().enumerate() {
            if v.cost != 0.0 {
                term(&mut out, first, v.cost, k);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 v0");
        }
        out.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(out, " {}:", r.name);
            for (i, &(k, a)) in r.coefs.iter().enumerate() {
                term(&mut out, i == 0, a, k);
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", r.rhs);
        }
        out.push_str("Bounds\n");
        for (k, v) in self.vars.iter().enumerate() {
            if v.upper.is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, name(k), v.upper);
            } else {
                let _ = writeln!(out, " {} >= {}", name(k), v.lower);
            }
        }
        out.push_str("General\n");
        for (k, v) in self.vars.iter().enumerate() {
            if v.integer {
                let _ = write!(out, " {}", name(k));
            }
        }
        out.push_str("\nEnd\n");
        out
    }
}
