use proptest::prelude::*;

use slip::geometry::{pushed_tv, pushforward, rasterize, stationarity_residual, VectorField};
use slip::{solve_bnb, solve_exhaustive, BnbOptions, ControlField, GradientField, GridSpec, LabelSet, TRInstance};

fn control(nx: usize, ny: usize, labels: Vec<i64>, picks: &[usize]) -> ControlField {
    let set = LabelSet::new(labels.clone()).unwrap();
    let values = picks.iter().map(|&k| labels[k % labels.len()]).collect();
    ControlField::new(GridSpec::new(nx, ny, 1.0, 0.75).unwrap(), set, values).unwrap()
}

fn arb_control(max_side: usize) -> impl Strategy<Value = ControlField> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(nx, ny)| {
        (prop::collection::vec(0usize..3, nx * ny), Just((nx, ny)))
            .prop_map(|(picks, (nx, ny))| control(nx, ny, vec![-1, 0, 2], &picks))
    })
}

/// Sum of |jump| times facet length over neighbouring cells.
fn facet_tv(v: &ControlField) -> f64 {
    let g = v.grid();
    let mut tv = 0.0;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let a = v.value(g.index(i, j));
            if i + 1 < g.nx() {
                tv += (a - v.value(g.index(i + 1, j))).abs() as f64 * g.hy();
            }
            if j + 1 < g.ny() {
                tv += (a - v.value(g.index(i, j + 1))).abs() as f64 * g.hx();
            }
        }
    }
    tv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_matches_facet_sum_and_ignores_shifts(v in arb_control(6), shift in -5i64..5) {
        let tv = v.tv();
        prop_assert!((tv - facet_tv(&v)).abs() <= 1e-12 * tv.max(1.0));
        let labels = LabelSet::new(v.labels().as_slice().iter().map(|l| l + shift).collect()).unwrap();
        let shifted = v.map_labels(labels, |l| l + shift).unwrap();
        prop_assert!((shifted.tv() - tv).abs() <= 1e-12 * tv.max(1.0));
        let flipped = LabelSet::new(v.labels().as_slice().iter().map(|l| -l).collect()).unwrap();
        prop_assert!((v.map_labels(flipped, |l| -l).unwrap().tv() - tv).abs() <= 1e-12 * tv.max(1.0));
    }

    #[test]
    fn pushed_tv_at_zero_is_tv(v in arb_control(5)) {
        let phi = VectorField::radial([0.5, 0.4], 0.3, 1.0).unwrap();
        prop_assert!((pushed_tv(&v, &phi, 0.0) - v.tv()).abs() <= 1e-12 * v.tv().max(1.0));
    }

    #[test]
    fn csv_round_trip(v in arb_control(6)) {
        let back = ControlField::from_csv_str(&v.to_csv_string(), v.labels()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn instance_text_round_trip(
        v in arb_control(4),
        seed in prop::collection::vec(-2.0f64..2.0, 16),
        delta in 0.0f64..1.0,
    ) {
        let c = GradientField::new(*v.grid(), seed[..v.grid().num_cells()].to_vec()).unwrap();
        let inst = TRInstance::new(v, c, delta, 0.05).unwrap();
        prop_assert_eq!(TRInstance::from_text(&inst.to_text()).unwrap(), inst);
    }

    #[test]
    fn bnb_is_exact_on_small_instances(
        v in arb_control(3),
        seed in prop::collection::vec(-0.5f64..0.5, 9),
        cells in 0usize..5,
        alpha in 0.0f64..0.2,
    ) {
        let g = *v.grid();
        let c = GradientField::new(g, seed[..g.num_cells()].to_vec()).unwrap();
        let delta = cells as f64 * g.cell_measure();
        let inst = TRInstance::new(v, c, delta, alpha).unwrap();
        let exact = solve_exhaustive(&inst).unwrap();
        let bnb = solve_bnb(&inst, &BnbOptions::default()).unwrap();
        prop_assert!((exact.objective - bnb.objective).abs() <= 1e-9);
        prop_assert!(inst.is_feasible(&bnb.v_opt).unwrap());
        prop_assert!((inst.objective(&bnb.v_opt) - bnb.objective).abs() <= 1e-9);
    }

    #[test]
    fn inverse_map_inverts_forward(
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        frac in -1.0f64..1.0,
    ) {
        let phi = VectorField::linear([0.5, 0.5], 0.3, [[a, b], [-b, 0.5 * a]])
            .unwrap()
            .plus(&VectorField::directional([0.3, 0.6], 0.2, [0.6, 0.8], 1.0).unwrap());
        let t = 0.5 * frac / phi.lipschitz_bound();
        let back = phi.forward(t, phi.inverse(t, [x, y]).unwrap());
        prop_assert!((back[0] - x).abs() <= 1e-10 && (back[1] - y).abs() <= 1e-10);
    }

    #[test]
    fn pushforward_at_zero_is_rasterize(v in arb_control(5), res in 1usize..40) {
        let phi = VectorField::directional([0.5, 0.4], 0.3, [1.0, 0.0], 1.0).unwrap();
        prop_assert_eq!(pushforward(&v, &phi, 0.0, res).unwrap(), rasterize(&v, res).unwrap());
    }

    #[test]
    fn stationarity_terms_are_linear_in_the_field(
        v in arb_control(6),
        k in -3.0f64..3.0,
        cx in 0.2f64..0.8,
        cy in 0.2f64..0.55,
    ) {
        let phi = VectorField::radial([cx, cy], 0.18, 1.0).unwrap()
            .plus(&VectorField::directional([cx, cy], 0.18, [0.0, 1.0], 0.5).unwrap());
        let g = |p: [f64; 2]| 1.0 + p[0] - 2.0 * p[1];
        let r = stationarity_residual(&v, &g, 1e-2, &[phi.clone(), phi.scaled(k)]);
        let (a, b) = (&r.terms[0], &r.terms[1]);
        let tol = 1e-10 * (1.0 + a.lhs.abs() + a.rhs.abs()) * (1.0 + k.abs());
        prop_assert!((b.lhs - k * a.lhs).abs() <= tol);
        prop_assert!((b.rhs - k * a.rhs).abs() <= tol);
    }
}
