//! Sequential linear integer programming (SLIP) for integer-valued optimal
//! control problems with total-variation regularization on 2D grids.
//!
//! The problem is `min J(v) = F(v) + alpha TV(v)` over piecewise-constant
//! controls `v` taking values in a finite label set. The trust-region loop in
//! [`slip`] linearizes `F` at the current iterate and solves the resulting
//! integer subproblem exactly with the branch-and-bound solver in
//! [`subproblem`]. [`pde`] and [`objective`] provide an advection-diffusion
//! tracking problem with an adjoint gradient, and [`geometry`] checks the
//! local-variation calculus behind the method's stationarity concept.
//!
//! ```
//! use slip::control::{ControlField, LabelSet};
//! use slip::grid::GridSpec;
//! use slip::objective::{GradientField, LinearObjective};
//! use slip::slip::{run, SlipConfig, Termination};
//!
//! let grid = GridSpec::unit(4, 4).unwrap();
//! let labels = LabelSet::new(vec![0, 1, 2]).unwrap();
//! // F(v) = -sum v_P: larger labels are cheaper everywhere.
//! let c = GradientField::new(grid, vec![-1.0 / 16.0; 16]).unwrap();
//! let v0 = ControlField::constant(grid, labels, 0).unwrap();
//! let cfg = SlipConfig { delta0: 0.5, sigma: 1e-4, delta_min: 1e-3, max_outer: 20, node_limit: 10_000, seed: 0 };
//! let trace = run(&LinearObjective::new(c), 1e-4, &v0, &cfg).unwrap();
//! assert!(trace.final_control.values().iter().all(|&x| x == 2));
//! assert_eq!(trace.termination, Termination::PredNonpositive);
//! ```

pub mod cli;
pub mod control;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod objective;
pub mod pde;
pub mod slip;
pub mod subproblem;

pub use control::{ControlField, LabelSet};
pub use error::{Result, SlipError};
pub use grid::GridSpec;
pub use objective::{GradientField, Problem, SmoothObjective};
pub use pde::{PdeSetup, ScalarField};
pub use slip::{SlipConfig, SlipTrace, Termination};
pub use subproblem::{solve_bnb, solve_exhaustive, BnbOptions, TRInstance};
