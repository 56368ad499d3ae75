//! Property-based checks over the public API: the structural invariants the
//! rest of the library leans on, exercised at randomized sizes and data.

use proptest::prelude::*;

use kawarada::grid::Grid;
use kawarada::linalg::{
    default_probe_steps, log_norm_2, log_norm_extremal_trial, log_norm_limit_probe, DenseMatrix,
    SplitMix64, TridiagonalOperator, WeightedNormContext,
};
use kawarada::model::kawarada as kawarada_source;
use kawarada::splitting::{splitting_step, SplitState};

fn arb_grid() -> impl Strategy<Value = Grid> {
    (0.3f64..3.0, 1usize..80, prop::option::of(1.0f64..3.0)).prop_map(|(a, n, grading)| {
        match grading {
            None => Grid::uniform(a, n).unwrap(),
            Some(g) => Grid::graded(a, n, g).unwrap(),
        }
    })
}

proptest! {
    #[test]
    fn grids_validate_clean(grid in arb_grid()) {
        prop_assert!(grid.validate().is_empty());
    }

    #[test]
    fn grids_are_palindromic(grid in arb_grid()) {
        let m = grid.x.len();
        for i in 0..m {
            // Mirrored nodes must cancel exactly, not merely closely;
            // downstream symmetry monitors assume node coincidence. The sum
            // form tolerates the signed zero at the center node.
            prop_assert_eq!(grid.x[i] + grid.x[m - 1 - i], 0.0);
        }
    }

    #[test]
    fn grid_spacings_partition_the_domain(grid in arb_grid()) {
        let total: f64 = grid.h.iter().sum();
        prop_assert!((total - 2.0 * grid.a).abs() <= 1e-12 * grid.a);
        prop_assert!(grid.h.iter().all(|&h| h > 0.0));
        let weight_total: f64 = grid.weights.iter().sum();
        prop_assert!(weight_total <= 2.0 * grid.a + 1e-12);
    }

    #[test]
    fn weighted_norms_are_norms(
        grid in arb_grid(),
        seed in any::<u64>(),
        c in -3.0f64..3.0,
        p in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]),
    ) {
        let ctx = WeightedNormContext::new(grid.weights.clone(), p).unwrap();
        let mut rng = SplitMix64(seed);
        let v = rng.vector(grid.n());
        let w = rng.vector(grid.n());
        let nv = ctx.norm(&v).unwrap();
        let nw = ctx.norm(&w).unwrap();

        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        prop_assert!((ctx.norm(&scaled).unwrap() - c.abs() * nv).abs() <= 1e-12 * (1.0 + nv));

        let sum: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x + y).collect();
        prop_assert!(ctx.norm(&sum).unwrap() <= nv + nw + 1e-12);

        prop_assert_eq!(ctx.norm(&vec![0.0; grid.n()]).unwrap(), 0.0);
    }

    #[test]
    fn resolvent_preserves_sign_and_constant_range(
        grid in arb_grid(),
        tau in 1e-4f64..20.0,
        seed in any::<u64>(),
        c in 0.0f64..4.0,
    ) {
        let op = TridiagonalOperator::laplacian(&grid);
        let mut rng = SplitMix64(seed);
        let v: Vec<f64> = rng.vector(grid.n()).iter().map(|x| x.abs()).collect();
        let sol = op.solve_shifted(tau, &v).unwrap();
        prop_assert!(sol.iter().all(|&x| x >= -1e-13));

        // Solving back: (I - tau A) sol must reproduce v up to the rounding
        // floor of the shifted system, which grows with the row norm of
        // tau A on fine graded grids.
        let asol = op.apply(&sol);
        let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let row_norm = (0..grid.n())
            .map(|i| {
                let below = if i > 0 { op.sub[i - 1].abs() } else { 0.0 };
                let above = if i + 1 < grid.n() { op.sup[i].abs() } else { 0.0 };
                below + op.diag[i].abs() + above
            })
            .fold(0.0_f64, f64::max);
        let floor = 1e-13 * (1.0 + tau * row_norm) * scale;
        for i in 0..grid.n() {
            prop_assert!((sol[i] - tau * asol[i] - v[i]).abs() <= floor);
        }

        let constant = op.solve_shifted(tau, &vec![c; grid.n()]).unwrap();
        prop_assert!(constant.iter().all(|&x| -1e-13 <= x && x <= c + 1e-13));
    }

    #[test]
    fn eigenvalue_and_probe_routes_agree(
        grid in (0.3f64..3.0, 1usize..24, prop::option::of(1.0f64..3.0)).prop_map(|(a, n, g)| {
            match g {
                None => Grid::uniform(a, n).unwrap(),
                Some(g) => Grid::graded(a, n, g).unwrap(),
            }
        }),
        seed in any::<u64>(),
    ) {
        let dense = DenseMatrix::from_tridiagonal(&TridiagonalOperator::laplacian(&grid));
        let mu = log_norm_2(&dense, &grid.weights).unwrap();
        prop_assert!(mu < 0.0);
        let mut rng = SplitMix64(seed);
        let trials = vec![
            log_norm_extremal_trial(&dense, &grid.weights).unwrap(),
            rng.vector(grid.n()),
        ];
        let probe =
            log_norm_limit_probe(&dense, &grid.weights, &trials, &default_probe_steps()).unwrap();
        prop_assert!((mu - probe).abs() <= 1e-6, "mu = {mu}, probe = {probe}");
    }

    #[test]
    fn one_step_preserves_structure_from_any_admissible_state(
        grid in arb_grid(),
        delta in 0.01f64..0.3,
        seed in any::<u64>(),
        level in 0.0f64..0.9,
    ) {
        let op = TridiagonalOperator::laplacian(&grid);
        let f = kawarada_source();
        let mut rng = SplitMix64(seed);
        let u0: Vec<f64> = rng.vector(grid.n()).iter().map(|x| level * x.abs()).collect();
        let state = SplitState::initial(u0.clone(), &op, &f, &grid.weights);
        let out = splitting_step(&state, &op, &f, &grid.weights, delta, 1e-10, 400).unwrap();

        prop_assert!(out.tau_used > 0.0 && out.tau_used <= state.tau_prev);
        prop_assert!(out.next.monitors.positivity_ok);
        prop_assert!(out.next.monitors.bound_ok);
        prop_assert!(out.next.monitors.residual <= 10.0 * 1e-10);
        prop_assert!(out.next.u.iter().all(|&x| x < 1.0));

        // The step rule for this source collapses to delta (1 - max U+)^2
        // capped by the previous step and the derivative branch at U^k.
        let max_next = out.next.u.iter().cloned().fold(0.0_f64, f64::max);
        let max_prev = u0.iter().cloned().fold(0.0_f64, f64::max);
        let gap_next = 1.0 - max_next;
        let gap_prev = 1.0 - max_prev;
        let rule = delta * gap_next.powi(2).min(gap_prev.powi(2));
        prop_assert!(out.tau_used <= rule.min(state.tau_prev) + 1e-9);
    }
}
