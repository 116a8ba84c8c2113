use proptest::prelude::*;
use wmh_core::metrics::{self, dice, dice_smoothed, hd95};
use wmh_core::morphology::diameter_opening;
use wmh_core::preprocess::{clamp_negatives, masked_stats, zstandardize_foreground, StdConvention};
use wmh_core::scores::{f_beta_score, focal_from_index, tversky_index, FBetaParams, TverskyParams};
use wmh_core::staple::{staple_with, StapleOptions, StapleRegion};
use wmh_core::stats::{average_ranks, friedman_test};
use wmh_core::volume::binarize;
use wmh_core::{
    BinaryMask3D, Connectivity, Field3D, Geometry, MetricTable, ProbabilityMap3D, RaterStack,
    StapleParams, Volume3D,
};

fn dims() -> impl Strategy<Value = [usize; 3]> {
    (2usize..7, 2usize..7, 2usize..6).prop_map(|(x, y, z)| [x, y, z])
}

fn mask_in(d: [usize; 3]) -> impl Strategy<Value = BinaryMask3D> {
    let n: usize = d.iter().product();
    proptest::collection::vec(proptest::bool::weighted(0.3), n)
        .prop_map(move |v| Field3D::new(Geometry::new(d, [1.0; 3]).unwrap(), v).unwrap())
}

fn mask_pair() -> impl Strategy<Value = (BinaryMask3D, BinaryMask3D)> {
    dims().prop_flat_map(|d| (mask_in(d), mask_in(d)))
}

fn volume() -> impl Strategy<Value = Volume3D> {
    dims().prop_flat_map(|d| {
        proptest::collection::vec(-2.0f64..5.0, d.iter().product::<usize>())
            .prop_map(move |v| Field3D::new(Geometry::new(d, [1.0; 3]).unwrap(), v).unwrap())
    })
}

fn prob_and_mask() -> impl Strategy<Value = (ProbabilityMap3D, BinaryMask3D)> {
    dims().prop_flat_map(|d| {
        let n = d.iter().product::<usize>();
        (proptest::collection::vec(0.0f64..=1.0, n), mask_in(d)).prop_map(move |(p, m)| {
            let g = Geometry::new(d, [1.0; 3]).unwrap();
            (
                ProbabilityMap3D::new(Field3D::new(g, p).unwrap()).unwrap(),
                m,
            )
        })
    })
}

/// Reorders axes so that new axis `a` is old axis `perm[a]`.
fn permute_axes(m: &BinaryMask3D, perm: [usize; 3]) -> BinaryMask3D {
    let d = m.dims();
    let nd = [d[perm[0]], d[perm[1]], d[perm[2]]];
    Field3D::from_fn(Geometry::new(nd, [1.0; 3]).unwrap(), |c| {
        let mut old = [0; 3];
        for a in 0..3 {
            old[perm[a]] = c[a];
        }
        *m.at(old[0], old[1], old[2])
    })
}

fn stack_in(d: [usize; 3], r: usize) -> impl Strategy<Value = RaterStack> {
    proptest::collection::vec(mask_in(d), r).prop_map(|m| RaterStack::new(m).unwrap())
}

fn full() -> StapleOptions {
    StapleOptions {
        region: StapleRegion::Full,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binarize_is_monotone_in_threshold((p, _) in prob_and_mask(), t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = binarize(&p, lo).unwrap();
        let b = binarize(&p, hi).unwrap();
        prop_assert!(a.data().iter().zip(b.data()).all(|(x, y)| *x || !*y));
    }

    #[test]
    fn clamp_is_idempotent_and_nonnegative(v in volume()) {
        let once = clamp_negatives(&v);
        prop_assert!(once.data().iter().all(|&x| x >= 0.0));
        let twice = clamp_negatives(&once);
        prop_assert_eq!(twice.data(), once.data());
    }

    #[test]
    fn zscore_foreground_is_standard(v in volume()) {
        let c = clamp_negatives(&v);
        if let Ok(z) = zstandardize_foreground(&c) {
            let fg = c.map(|&x| x > 0.0);
            let s = masked_stats(&z, &fg, StdConvention::Population).unwrap();
            prop_assert!(s.mean.abs() < 1e-9);
            prop_assert!((s.std - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn diameter_opening_idempotent_and_shrinking(m in dims().prop_flat_map(mask_in), k in 1usize..5) {
        for conn in [Connectivity::Six, Connectivity::TwentySix] {
            let once = diameter_opening(&m, k, conn).unwrap();
            prop_assert!(once.data().iter().zip(m.data()).all(|(o, i)| !*o || *i));
            let twice = diameter_opening(&once, k, conn).unwrap();
            prop_assert_eq!(twice.data(), once.data());
            let stricter = diameter_opening(&m, k + 1, conn).unwrap();
            prop_assert!(stricter.data().iter().zip(once.data()).all(|(s, o)| !*s || *o));
        }
    }

    #[test]
    fn dice_symmetric_and_identity((a, b) in mask_pair()) {
        prop_assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        if a.any() {
            prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
        }
        prop_assert_eq!(dice(&a, &b).unwrap() == 1.0, a.data() == b.data());
    }

    #[test]
    fn hd95_identity_and_symmetry((a, b) in mask_pair()) {
        if a.any() {
            prop_assert_eq!(hd95(&a, &a).unwrap(), Some(0.0));
        }
        prop_assert_eq!(hd95(&a, &b).unwrap(), hd95(&b, &a).unwrap());
    }

    #[test]
    fn metrics_invariant_under_axis_permutation((a, b) in mask_pair(), which in 0usize..6) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let (pa, pb) = (permute_axes(&a, perms[which]), permute_axes(&b, perms[which]));
        prop_assert_eq!(dice(&a, &b).unwrap(), dice(&pa, &pb).unwrap());
        prop_assert_eq!(metrics::avd(&a, &b).unwrap(), metrics::avd(&pa, &pb).unwrap());
        let conn = Connectivity::TwentySix;
        prop_assert_eq!(metrics::lesion_recall(&a, &b, conn).unwrap(), metrics::lesion_recall(&pa, &pb, conn).unwrap());
        prop_assert_eq!(metrics::lesion_f1(&a, &b, conn).unwrap(), metrics::lesion_f1(&pa, &pb, conn).unwrap());
        match (hd95(&a, &b).unwrap(), hd95(&pa, &pb).unwrap()) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn staple_invariant_under_rater_order(stack in dims().prop_flat_map(|d| stack_in(d, 4)), rot in 1usize..4) {
        let init = StapleParams::initial(&stack);
        let a = staple_with(&stack, &init, full()).unwrap();
        let mut masks = stack.masks().to_vec();
        masks.rotate_left(rot);
        let b = staple_with(&RaterStack::new(masks).unwrap(), &init, full()).unwrap();
        for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
            prop_assert!((x - y).abs() < 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn staple_relabel_symmetry(stack in dims().prop_flat_map(|d| stack_in(d, 3))) {
        let init = StapleParams::initial(&stack);
        let a = staple_with(&stack, &init, full()).unwrap();
        let flipped = RaterStack::new(stack.masks().iter().map(|m| m.complement()).collect()).unwrap();
        let swapped = StapleParams {
            sensitivity: init.specificity.clone(),
            specificity: init.sensitivity.clone(),
            prior: 1.0 - init.prior,
            ..init.clone()
        };
        let b = staple_with(&flipped, &swapped, full()).unwrap();
        if a.converged && b.converged {
            for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
                prop_assert!((x - (1.0 - y)).abs() < 1e-9, "{} vs {}", x, 1.0 - y);
            }
        }
    }

    #[test]
    fn staple_log_likelihood_nondecreasing(stack in dims().prop_flat_map(|d| stack_in(d, 3))) {
        let r = staple_with(&stack, &StapleParams::initial(&stack), full()).unwrap();
        for w in r.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-8);
        }
    }

    #[test]
    fn friedman_invariant_under_monotone_map_and_column_order(
        rows in proptest::collection::vec(proptest::collection::vec(0u8..6, 3), 4..15),
        rot in 0usize..3,
    ) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        let models: Vec<String> = (0..3).map(|j| format!("m{j}")).collect();
        let base = friedman_test(&MetricTable::from_rows(models.clone(), rows.clone()).unwrap(), true).unwrap();
        let mapped: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| (x * 0.7).exp() + 3.0 * x).collect()).collect();
        let m = friedman_test(&MetricTable::from_rows(models.clone(), mapped).unwrap(), true).unwrap();
        prop_assert_eq!(base.chi2, m.chi2);
        let rotated: Vec<Vec<f64>> = rows.iter().map(|r| { let mut r = r.clone(); r.rotate_left(rot); r }).collect();
        let p = friedman_test(&MetricTable::from_rows(models, rotated).unwrap(), true).unwrap();
        prop_assert!((base.chi2 - p.chi2).abs() < 1e-9);
    }

    #[test]
    fn average_ranks_sum(values in proptest::collection::vec(0u8..5, 1..12)) {
        let v: Vec<f64> = values.into_iter().map(f64::from).collect();
        let n = v.len() as f64;
        prop_assert!((average_ranks(&v).iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn tversky_half_weights_is_smoothed_dice((a, b) in mask_pair(), omega in 0.1f64..3.0) {
        let params = TverskyParams { alpha: 0.5, beta: 0.5, gamma: 1.0, omega };
        let ti = tversky_index(&ProbabilityMap3D::from_mask(&a), &b, &params).unwrap();
        prop_assert!((ti - dice_smoothed(&a, &b, 2.0 * omega).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tversky_decreases_with_fn_weight((p, g) in prob_and_mask(), a1 in 0.0f64..1.0, a2 in 0.0f64..1.0) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let t = |alpha| tversky_index(&p, &g, &TverskyParams { alpha, ..TverskyParams::default() }).unwrap();
        prop_assert!(t(hi) <= t(lo) + 1e-15);
    }

    #[test]
    fn focal_gamma_one_is_complement(ti in 0.0f64..=1.0) {
        prop_assert_eq!(focal_from_index(ti, 1.0), 1.0 - ti);
    }

    #[test]
    fn fbeta_one_approaches_dice((a, b) in mask_pair()) {
        let f = f_beta_score(&a, &b, &FBetaParams { beta: 1.0, omega: 1e-9 }).unwrap();
        if a.any() || b.any() {
            prop_assert!((f - dice(&a, &b).unwrap()).abs() < 1e-6);
        }
    }
}
