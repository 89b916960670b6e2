//! Property checks over seeded random instances: every identity the
//! library promises on fixtures must also hold on arbitrary draws.

use proptest::prelude::*;
use r0lab_core::harness::{self, GenConfig, SplitMix64};
use r0lab_core::leslie::{Fertility, LeslieModel, NormIndex, Survival};
use r0lab_core::model::{NonNegMatrix, SplitSystem, Tolerances};
use r0lab_core::trichotomy::TrichotomyCase;
use r0lab_core::{dynamics, ngm, spectral, structure, trichotomy};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn any_cfg() -> impl Strategy<Value = GenConfig> {
    (
        any::<u64>(),
        prop_oneof![Just(0.1f64), Just(0.5), Just(0.9)],
        0.1f64..=1.0,
        0.2f64..=2.0,
    )
        .prop_map(|(seed, target_rt, density, scale)| GenConfig {
            n_max: 6,
            density,
            scale,
            seed,
            target_rt,
        })
}

fn draw_split(cfg: &GenConfig) -> Option<SplitSystem> {
    harness::gen_split(cfg).ok()
}

fn radius(a: &NonNegMatrix) -> f64 {
    spectral::spectral_radius(a, &tol()).unwrap().radius
}

proptest! {
    #[test]
    fn radius_is_positively_homogeneous(cfg in any_cfg(), alpha in 0.0f64..8.0) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let ra = radius(sys.combined());
        let rs = radius(&sys.combined().scale(alpha));
        prop_assert!((rs - alpha * ra).abs() <= 1e-8 * (alpha * ra).max(1.0));
    }

    #[test]
    fn radius_shifts_with_the_diagonal(cfg in any_cfg(), c in 0.0f64..4.0) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let ra = radius(sys.combined());
        let rs = radius(&sys.combined().shifted(c));
        prop_assert!((rs - (ra + c)).abs() <= 1e-8 * (ra + c).max(1.0));
    }

    #[test]
    fn entrywise_domination_bounds_the_radius(cfg in any_cfg(), mask_seed in any::<u64>()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let a = sys.combined();
        let mut shrunk = a.dense().clone();
        let mut rng = SplitMix64::new(mask_seed);
        for v in shrunk.data_mut() {
            *v *= rng.next_f64();
        }
        let b = NonNegMatrix::from_dense(shrunk).unwrap();
        prop_assert!(b.entrywise_leq(a).unwrap());
        prop_assert!(radius(&b) <= radius(a) + 1e-8 * radius(a).max(1.0));
    }

    #[test]
    fn iterative_radius_matches_the_polynomial_oracle(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let a = sys.combined();
        let ra = radius(a);
        let roots = spectral::eig_oracle(a).unwrap();
        let oracle = spectral::max_modulus(&roots);
        prop_assert!((ra - oracle).abs() <= 1e-8 * ra.max(1.0));
    }

    #[test]
    fn gelfand_estimate_upper_bounds_the_radius(cfg in any_cfg(), k in 1usize..=8) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let a = sys.combined();
        let est = spectral::gelfand_estimate(a, k).radius;
        prop_assert!(est >= radius(a) - 1e-8 * radius(a).max(1.0));
    }

    #[test]
    fn resolvent_factorization_holds_above_both_radii(cfg in any_cfg(), off in 0.5f64..3.0) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let lambda = radius(sys.combined()) + off;
        let disc = ngm::factorization_discrepancy(&sys, lambda).unwrap();
        prop_assert!(disc <= 1e-8, "discrepancy {disc} at lambda {lambda}");
    }

    #[test]
    fn resolvent_decreases_entrywise_in_lambda(cfg in any_cfg(), step in 0.1f64..2.0) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let lo = ngm::transition_resolvent(&sys, 1.0).unwrap().matrix;
        let hi = ngm::transition_resolvent(&sys, 1.0 + step).unwrap().matrix;
        let worst = hi
            .dense()
            .sub(lo.dense())
            .data()
            .iter()
            .fold(0.0f64, |m, &d| m.max(d));
        prop_assert!(worst <= 1e-10 * (1.0 + lo.op_inf_norm()));
    }

    #[test]
    fn neumann_sums_approach_the_lu_resolvent(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let exact = ngm::transition_resolvent(&sys, 1.0).unwrap().matrix;
        let norm = exact.op_inf_norm().max(1.0);
        let q = sys.transition_radius().max(0.05);
        let terms = ((1e-13f64.ln() / q.ln()).ceil() as usize).clamp(8, 5000);
        let err = |k: usize| {
            let p = ngm::neumann_resolvent(&sys, 1.0, k).unwrap();
            exact.dense().sub(p.dense()).op_inf_norm() / norm
        };
        let half = err(terms / 2);
        let full = err(terms);
        prop_assert!(full <= half + 1e-12);
        prop_assert!(full <= 1e-8, "residual {full} after {terms} terms");
    }

    #[test]
    fn radius_curve_is_decreasing_and_convex(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let curve = ngm::radius_curve(&sys, 1.0, 4.0, 9, &tol()).unwrap();
        prop_assert!(curve.max_violation <= 1e-7, "violation {}", curve.max_violation);
        prop_assert!(curve.monotone_ok || curve.max_violation > 0.0);
    }

    #[test]
    fn fertility_renormalization_lands_on_unit_radius(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let r0v = ngm::r0(&sys, &tol()).unwrap().radius;
        if r0v > 1e-6 {
            let v = trichotomy::verify_unit_radius(&sys, &tol()).unwrap();
            prop_assert!((v - 1.0).abs() <= 1e-7, "unit radius off: {v}");
        }
    }

    #[test]
    fn classification_respects_the_paired_inequalities(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let v = trichotomy::classify(&sys, &tol()).unwrap();
        let slack = 1e-7 * v.radius_a.max(1.0);
        match v.case {
            TrichotomyCase::Supercritical => {
                prop_assert!(v.radius_a > 1.0 && v.r0 >= v.radius_a - slack)
            }
            TrichotomyCase::Critical => {
                prop_assert!(v.r0_margin <= 1e-9 && v.radius_margin <= 1e-9)
            }
            TrichotomyCase::Subcritical => {
                prop_assert!(v.radius_a < 1.0 && v.r0 <= v.radius_a + slack)
            }
        }
        // Sign equivalence: never on strictly opposite sides of 1.
        let band = 1e-7;
        prop_assert!(!(v.r0 > 1.0 + band && v.radius_a < 1.0 - band));
        prop_assert!(!(v.r0 < 1.0 - band && v.radius_a > 1.0 + band));
    }

    #[test]
    fn bisection_recovers_the_combined_radius(cfg in any_cfg()) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let r0v = ngm::r0(&sys, &tol()).unwrap().radius;
        if r0v >= 1.0 + 1e-6 {
            let ra = radius(sys.combined());
            let b = ngm::bisect_radius(&sys, &tol()).unwrap();
            prop_assert!(b.curve_crosses_one);
            prop_assert!((b.lambda_star - ra).abs() <= 1e-6, "lambda* {} vs r(A) {}", b.lambda_star, ra);
        }
    }

    #[test]
    fn trajectories_reconstruct_matrix_powers(cfg in any_cfg(), steps in 1usize..6) {
        let Some(sys) = draw_split(&cfg) else { return Ok(()) };
        let a = sys.combined();
        let x0 = vec![1.0; a.dim()];
        let traj = dynamics::iterate(a, &x0, steps).unwrap();
        let mut exact = x0.clone();
        for _ in 0..traj.steps {
            exact = a.matvec(&exact);
        }
        let t = traj.steps;
        let scale = traj.log_norms[t].exp();
        for (i, e) in exact.iter().enumerate() {
            let rebuilt = traj.states[t][i] * scale;
            prop_assert!((rebuilt - e).abs() <= 1e-9 * e.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leslie_truncations_increase_to_the_closed_form(
        c in 0.1f64..2.0,
        beta in 0.05f64..0.85,
        t in 0.05f64..0.9,
    ) {
        let model = LeslieModel::new(
            Fertility::Geometric { c, beta },
            Survival::Constant(t),
            NormIndex::Infinity,
        )
        .unwrap();
        let closed = model.closed_form_r0(&tol()).unwrap().value;
        let series = r0lab_core::leslie::truncated_r0_series(&model, &[2, 5, 9], &tol()).unwrap();
        let mut prev = 0.0;
        for &(n, r) in &series {
            prop_assert!(r >= prev - 1e-10, "series not increasing at n = {n}");
            prop_assert!(r <= closed + 1e-8, "truncation above closed form at n = {n}");
            let tail = c * (beta * t).powi(n as i32) / (1.0 - beta * t);
            prop_assert!(closed - r <= tail + 1e-8, "tail bound broken at n = {n}");
            prev = r;
        }
    }

    #[test]
    fn irreducible_draws_have_positive_perron_pairs(seed in any::<u64>()) {
        let cfg = GenConfig { seed, density: 0.4, ..GenConfig::default() };
        let a = harness::gen_irreducible(&cfg);
        prop_assert!(structure::is_irreducible(&a));
        let p = structure::perron_pair(&a, &tol()).unwrap();
        prop_assert!(p.residual <= 1e-8 * p.value.max(1.0));
        prop_assert!(structure::is_almost_interior(&p.right).unwrap());
        prop_assert!(structure::is_almost_interior(&p.left).unwrap());
    }

    #[test]
    fn battery_reports_are_reproducible_and_clean(seed in any::<u64>()) {
        let cfg = GenConfig { seed, ..GenConfig::default() };
        let r1 = harness::cross_validate(2, &cfg, &tol());
        let r2 = harness::cross_validate(2, &cfg, &tol());
        prop_assert_eq!(format!("{}", &r1), format!("{}", &r2));
        prop_assert!(r1.all_passed(), "battery failed:\n{r1}");
    }
}
