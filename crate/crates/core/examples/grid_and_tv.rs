//! Total variation of a label field and its decomposition into pairwise
//! interface lengths.

use slip::control::{ControlField, LabelSet};
use slip::grid::GridSpec;

fn main() -> slip::Result<()> {
    let grid = GridSpec::unit(8, 8)?;
    let labels = LabelSet::new(vec![0, 1, 2])?;
    let v = ControlField::from_fn(grid, labels.clone(), |p| {
        if (p[0] - 0.5).hypot(p[1] - 0.5) < 0.3 {
            2
        } else if p[0] < 0.25 {
            1
        } else {
            0
        }
    })?;
    print!("{}", v.to_csv_string());
    println!("TV(v)                  = {}", v.tv());
    let pairs = v.pairwise_interfaces();
    for ((i, j), len) in pairs.to_map() {
        println!("H1(E_{} ^ E_{})          = {len}", labels.get(i), labels.get(j));
    }
    println!("sum |nu_i - nu_j| H1   = {}", pairs.weighted_total(&labels));
    let per = v.level_set_perimeters();
    println!("level-set perimeters   = {per:?}");
    println!("TV >= half the sum     : {}", v.perimeter_lower_bound_check());
    Ok(())
}
