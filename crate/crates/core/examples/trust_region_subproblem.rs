//! Builds a random trust-region subproblem, prints its integer program in LP
//! format and solves it by branch-and-bound and by enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slip::control::{ControlField, LabelSet};
use slip::grid::GridSpec;
use slip::objective::GradientField;
use slip::subproblem::{build_ip, pred, solve_bnb, solve_exhaustive, BnbOptions, TRInstance};

fn main() -> slip::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = GridSpec::unit(3, 3)?;
    let labels = LabelSet::new(vec![0, 1, 2])?;
    let vbar = ControlField::new(grid, labels, (0..9).map(|_| rng.gen_range(0..3)).collect())?;
    let c = GradientField::new(grid, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let inst = TRInstance::new(vbar, c, 0.5, 0.1)?;
    println!("{}", build_ip(&inst).to_lp_string());

    let bnb = solve_bnb(&inst, &BnbOptions::default())?;
    let exact = solve_exhaustive(&inst)?;
    println!("branch-and-bound: objective {:.12} after {} nodes", bnb.objective, bnb.nodes);
    println!("enumeration:      objective {:.12} over {} assignments", exact.objective, exact.nodes);
    println!("pred = {:.12}", pred(&inst, &bnb.v_opt)?);
    print!("{}", bnb.v_opt.to_csv_string());
    Ok(())
}
