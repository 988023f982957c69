use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::field::VectorField;
use super::partition::DiskPartition;
use super::variation::{halving, lipschitz_check, taylor_linear_check, taylor_tv_check};
use crate::control::{ControlField, LabelSet};
use crate::error::{Result, SlipError};
use crate::grid::GridSpec;

/// One line of a verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub measured: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `|measured - reference| <= tolerance * scale`.
    fn relative(check: &str, measured: f64, reference: f64, scale: f64, tolerance: f64) -> Self {
        let error = (measured - reference).abs() / scale;
        CheckRow {
            check: check.to_string(),
            measured,
            reference,
            error,
            tolerance,
            pass: error <= tolerance,
        }
    }

    /// Passes when `measured >= reference`.
    fn at_least(check: &str, measured: f64, reference: f64) -> Self {
        CheckRow {
            check: check.to_string(),
            measured,
            reference,
            error: 0.0,
            tolerance: 0.0,
            pass: measured >= reference,
        }
    }

    /// Passes when `measured <= reference`.
    fn at_most(check: &str, measured: f64, reference: f64) -> Self {
        CheckRow {
            check: check.to_string(),
            measured,
            reference,
            error: 0.0,
            tolerance: 0.0,
            pass: measured <= reference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Disk,
    Stripes,
}

impl Fixture {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "disk" => Ok(Fixture::Disk),
            "stripes" => Ok(Fixture::Stripes),
            other => Err(SlipError::Usage(format!("unknown fixture '{other}' (expected disk or stripes)"))),
        }
    }

    pub fn run(self, resolution: usize) -> Result<Vec<CheckRow>> {
        match self {
            Fixture::Disk => disk_suite(resolution),
            Fixture::Stripes => stripes_suite(resolution),
        }
    }
}

const SLOPE_TOL: f64 = 0.05;
const DECAY_MIN: f64 = 1.5;
const AREA_TOL: f64 = 0.03;
const HALVINGS: usize = 4;
const LIPSCHITZ_PAIRS: usize = 50;

fn psi(s: f64) -> f64 {
    (1.0 - s * s).max(0.0).powi(3)
}

/// 50 seeded pairs drawn from `k t_max / 16`, at least two steps apart.
fn lattice_pairs(t_max: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut all = Vec::new();
    for a in 0..=16u32 {
        for b in (a + 2)..=16 {
            all.push((f64::from(b) * t_max / 16.0, f64::from(a) * t_max / 16.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(LIPSCHITZ_PAIRS);
    all
}

/// Disk of radius 0.25 at the center of the unit square (label 1 inside,
/// 0 outside) under bumps centered on the disk with radius 0.48.
pub fn disk_suite(resolution: usize) -> Result<Vec<CheckRow>> {
    let (c, r, rho) = ([0.5, 0.5], 0.25, 0.48);
    let disk = DiskPartition::new((1.0, 1.0), c, r, 1, 0, 4096)?;
    let w = psi(r / rho);
    let mut rows = Vec::new();

    // Anisotropic field: circles become ellipses, so the perimeter has a
    // genuine second-order term.
    let stretch = VectorField::linear(c, rho, [[1.5, 0.0], [0.0, 0.5]])?;
    let ts = halving(0.5 / stretch.lipschitz_bound(), HALVINGS);
    let tv = taylor_tv_check(&disk, &stretch, &ts)?;
    let tv_exact = PI * r * w * 2.0;
    rows.push(CheckRow::relative("tv coefficient (quadrature)", tv.coefficient, tv_exact, tv_exact, 1e-6));
    let last = tv.rows.last().map_or(0.0, |row| row.slope);
    rows.push(CheckRow::relative("tv slope at smallest t", last, tv_exact, tv_exact, SLOPE_TOL));
    rows.push(CheckRow::at_least("tv slope error decay", tv.decay(), DECAY_MIN));

    let radial = VectorField::radial(c, rho, 1.0)?;
    let ts = halving(0.5 / radial.lipschitz_bound(), HALVINGS);
    let lin = taylor_linear_check(&disk, &|_| 1.0, &radial, &ts, resolution)?;
    let lin_exact = 2.0 * PI * r * r * w;
    rows.push(CheckRow::relative("linear coefficient (quadrature)", lin.coefficient, lin_exact, lin_exact, 1e-6));
    let last = lin.rows.last().map_or(0.0, |row| row.slope);
    rows.push(CheckRow::relative("linear slope at smallest t", last, lin_exact, lin_exact, SLOPE_TOL));
    rows.push(CheckRow::at_least("linear slope error decay", lin.decay(), DECAY_MIN));

    // Radial fields map the circle of radius r onto the circle of radius r (1 + t psi).
    let pairs: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 0.0)).collect();
    let lip = lipschitz_check(&disk, &radial, &pairs, resolution)?;
    let worst = lip
        .pairs
        .iter()
        .map(|p| {
            let (rt, rs) = (r * (1.0 + p.t * w), r * (1.0 + p.s * w));
            let exact = PI * (rt * rt - rs * rs).abs();
            (p.area - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    rows.push(CheckRow {
        check: "annulus area (worst pair)".into(),
        measured: worst,
        reference: 0.0,
        error: worst,
        tolerance: AREA_TOL,
        pass: worst <= AREA_TOL,
    });

    let lip = lipschitz_check(&disk, &radial, &lattice_pairs(ts[0], 7), resolution)?;
    rows.push(CheckRow::at_most("lipschitz ratio (50 pairs)", lip.max_ratio, 2.0 * radial.sup_norm()));
    Ok(rows)
}

/// Vertical stripes on the unit square (label 0 on `x < 1/2`, 1 up to
/// `x = 7/8`, 2 beyond) with an x-directed bump of radius 0.36 centered on
/// the left interface. Interfaces sit on pixel edges at power-of-two
/// resolutions, which keeps pixel counting unbiased.
pub fn stripes_suite(resolution: usize) -> Result<Vec<CheckRow>> {
    let (c, rho) = ([0.5, 0.5], 0.36);
    let stripes = ControlField::new(GridSpec::unit(8, 1)?, LabelSet::new(vec![0, 1, 2])?, vec![0, 0, 0, 0, 1, 1, 1, 2])?;
    let phi = VectorField::directional(c, rho, [1.0, 0.0], 1.0)?;
    let ts = halving(0.5 / phi.lipschitz_bound(), HALVINGS);
    let mut rows = Vec::new();

    // The interface x = 1/2 becomes the graph x = 1/2 + t psi(|y - 1/2| / rho);
    // the swept area is t rho int psi = 32 t rho / 35, exactly linear in t.
    let swept = 32.0 * rho / 35.0;
    let lin = taylor_linear_check(&stripes, &|_| 1.0, &phi, &ts, resolution)?;
    rows.push(CheckRow::relative("linear coefficient (quadrature)", lin.coefficient, -swept, swept, 1e-3));
    let last = lin.rows.last().map_or(0.0, |row| row.slope);
    rows.push(CheckRow::relative("linear slope at smallest t", last, -swept, swept, SLOPE_TOL));

    // The tangential divergence of an x-directed field vanishes on vertical
    // facets, and the graph length grows only quadratically in t.
    let tv = taylor_tv_check(&stripes, &phi, &ts)?;
    rows.push(CheckRow::relative("tv coefficient (quadrature)", tv.coefficient, 0.0, 1.0, 1e-12));
    let last = tv.rows.last().map_or(0.0, |row| row.slope);
    rows.push(CheckRow::relative("tv slope at smallest t", last, 0.0, phi.sup_norm(), SLOPE_TOL));
    rows.push(CheckRow::at_least("tv slope error decay", tv.decay(), DECAY_MIN));

    let binary = ControlField::new(GridSpec::unit(2, 1)?, LabelSet::new(vec![0, 1])?, vec![0, 1])?;
    let lip = lipschitz_check(&binary, &phi, &lattice_pairs(ts[0], 11), resolution)?;
    rows.push(CheckRow::at_most("lipschitz ratio (50 pairs)", lip.max_ratio, 2.0 * phi.sup_norm()));
    Ok(rows)
}
