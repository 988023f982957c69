//! Pushes a disk forward by local variations and compares measured Taylor
//! slopes and swept areas with their closed forms.

use slip::cli::format_table;
use slip::geometry::{inverse_map, pushforward, DiskPartition, Fixture, VectorField};

fn main() -> slip::Result<()> {
    let phi = VectorField::radial([0.5, 0.5], 0.48, 1.0)?;
    let t = 0.4 / phi.lipschitz_bound();
    let y = [0.62, 0.41];
    let x = inverse_map(&phi, t, y)?;
    let back = phi.forward(t, x);
    println!("g_t({y:?}) = {x:?}, round trip error {:.1e}", (back[0] - y[0]).hypot(back[1] - y[1]));

    let disk = DiskPartition::new((1.0, 1.0), [0.5, 0.5], 0.25, 1, 0, 1024)?;
    for t in [0.0, 0.1, 0.2, 0.4] {
        let area = pushforward(&disk, &phi, t, 256)?.area_of(1);
        println!("t = {t:.1}: pushed disk area {area:.5}");
    }
    for (name, fixture) in [("disk", Fixture::Disk), ("stripes", Fixture::Stripes)] {
        println!("\n{name}");
        print!("{}", format_table(&fixture.run(512)?));
    }
    Ok(())
}
