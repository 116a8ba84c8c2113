use wmh_core::metrics::{self, HausdorffMode};
use wmh_core::morphology::{connected_components, diameter_opening};
use wmh_core::staple::{majority_vote, staple_with, StapleOptions, StapleRegion};
use wmh_core::stats::{friedman_test, wilcoxon_signed_rank, Alternative};
use wmh_core::{
    BinaryMask3D, Connectivity, Field3D, Geometry, MetricTable, RaterStack, StapleParams,
};
use wmh_oracles as oracle;
use wmh_oracles::XorShift;

const CONNECTIVITIES: [Connectivity; 3] = [
    Connectivity::Six,
    Connectivity::Eighteen,
    Connectivity::TwentySix,
];

fn random_mask(rng: &mut XorShift, dims: [usize; 3], spacing: [f64; 3], p: f64) -> BinaryMask3D {
    let g = Geometry::new(dims, spacing).unwrap();
    Field3D::new(g, rng.mask(dims.iter().product(), p)).unwrap()
}

fn random_dims(rng: &mut XorShift, max: usize) -> [usize; 3] {
    std::array::from_fn(|_| 2 + rng.below(max - 1))
}

#[test]
fn components_partition_matches_flood_fill() {
    let mut rng = XorShift(11);
    for _ in 0..60 {
        let m = random_mask(&mut rng, [6, 6, 6], [1.0; 3], 0.3);
        for conn in CONNECTIVITIES {
            let labels = connected_components(&m, conn);
            let (comp, n) = oracle::flood_fill([6, 6, 6], m.data(), conn.count());
            assert_eq!(labels.n_components, n);
            assert!(oracle::same_partition(&comp, labels.labels.data(), 0));
        }
    }
}

#[test]
fn diameter_opening_matches_component_filter() {
    let mut rng = XorShift(12);
    for _ in 0..40 {
        let m = random_mask(&mut rng, [8, 8, 8], [1.0; 3], 0.2);
        for conn in CONNECTIVITIES {
            let out = diameter_opening(&m, 5, conn).unwrap();
            assert_eq!(
                out.data(),
                oracle::diameter_filter([8, 8, 8], m.data(), 5, conn.count()).as_slice()
            );
            assert_eq!(diameter_opening(&out, 5, conn).unwrap().data(), out.data());
        }
    }
}

#[test]
fn overlap_metrics_match_counting() {
    let mut rng = XorShift(13);
    for _ in 0..50 {
        let dims = random_dims(&mut rng, 7);
        let a = random_mask(&mut rng, dims, [1.0; 3], 0.15);
        let b = random_mask(&mut rng, dims, [1.0; 3], 0.15);
        assert_eq!(
            metrics::dice(&a, &b).unwrap(),
            oracle::dice(a.data(), b.data())
        );
        assert_eq!(
            metrics::avd(&a, &b).unwrap(),
            oracle::avd(a.data(), b.data())
        );
        for conn in CONNECTIVITIES {
            let c = conn.count();
            assert_eq!(
                metrics::lesion_recall(&a, &b, conn).unwrap(),
                oracle::lesion_recall(dims, a.data(), b.data(), c)
            );
            assert_eq!(
                metrics::lesion_f1(&a, &b, conn).unwrap(),
                oracle::lesion_f1(dims, a.data(), b.data(), c)
            );
        }
    }
}

#[test]
fn hausdorff_matches_all_pairs() {
    let mut rng = XorShift(14);
    for i in 0..40 {
        let dims = random_dims(&mut rng, 9);
        let spacing = if i % 2 == 0 {
            [1.0; 3]
        } else {
            [0.7, 1.3, 2.5]
        };
        let a = random_mask(&mut rng, dims, spacing, 0.2);
        let b = random_mask(&mut rng, dims, spacing, 0.2);
        for (mode, pooled) in [
            (HausdorffMode::MaxOfDirected, false),
            (HausdorffMode::Pooled, true),
        ] {
            for q in [50.0, 95.0, 100.0] {
                let got = metrics::hausdorff_percentile(&a, &b, q, mode).unwrap();
                let want = oracle::hausdorff(dims, spacing, a.data(), b.data(), q, pooled);
                match (got, want) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                    (x, y) => assert_eq!(x, y),
                }
            }
        }
    }
}

fn random_stack(rng: &mut XorShift, dims: [usize; 3], r: usize, p: f64) -> RaterStack {
    RaterStack::new(
        (0..r)
            .map(|_| random_mask(rng, dims, [1.0; 3], p))
            .collect(),
    )
    .unwrap()
}

fn votes(stack: &RaterStack) -> Vec<Vec<bool>> {
    stack.masks().iter().map(|m| m.data().to_vec()).collect()
}

#[test]
fn staple_matches_straight_loop_em() {
    let mut rng = XorShift(15);
    for _ in 0..200 {
        let r = 2 + rng.below(4);
        let stack = random_stack(&mut rng, [3, 3, 2], r, 0.4);
        let init = StapleParams::initial(&stack);
        let got = staple_with(
            &stack,
            &init,
            StapleOptions {
                region: StapleRegion::Full,
            },
        )
        .unwrap();
        let want = oracle::staple_em(
            &votes(&stack),
            &init.sensitivity,
            &init.specificity,
            init.prior,
            init.max_iters,
            init.tol,
        );
        assert_eq!(got.n_iters, want.n_iters);
        assert_eq!(got.converged, want.converged);
        // runs still drifting at the iteration cap amplify summation-order rounding
        let tol = if got.converged { 1e-9 } else { 1e-5 };
        for (a, b) in got.weights.data().iter().zip(&want.weights) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
        for (a, b) in got.params.sensitivity.iter().zip(&want.sensitivity) {
            assert!((a - b).abs() < tol);
        }
        for (a, b) in got.params.specificity.iter().zip(&want.specificity) {
            assert!((a - b).abs() < tol);
        }
        for (a, b) in got.log_likelihood.iter().zip(&want.log_likelihood) {
            assert!((a - b).abs() < tol * b.abs().max(1.0));
        }
    }
}

#[test]
fn staple_single_disagreement_is_majority() {
    let g = Geometry::new([2, 2, 2], [1.0; 3]).unwrap();
    let sets: [&[usize]; 3] = [&[0, 1, 2, 3], &[0, 1, 2, 3], &[0, 1, 2]];
    let masks = sets
        .iter()
        .map(|s| Field3D::from_fn(g.clone(), |c| s.contains(&g.index(c[0], c[1], c[2]))))
        .collect();
    let stack = RaterStack::new(masks).unwrap();
    let init = StapleParams::initial(&stack);
    let got = staple_with(
        &stack,
        &init,
        StapleOptions {
            region: StapleRegion::Full,
        },
    )
    .unwrap();
    assert_eq!(got.fused.data(), majority_vote(&stack).unwrap().data());
    let want = oracle::staple_em(
        &votes(&stack),
        &init.sensitivity,
        &init.specificity,
        init.prior,
        init.max_iters,
        init.tol,
    );
    for (a, b) in got.weights.data().iter().zip(&want.weights) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn first_estep_with_even_prior_is_majority() {
    let mut rng = XorShift(16);
    for _ in 0..200 {
        let stack = random_stack(&mut rng, [2, 2, 2], 3, 0.5);
        let mut init = StapleParams::symmetric(3, 0.9, 0.5);
        init.max_iters = 0;
        let got = staple_with(
            &stack,
            &init,
            StapleOptions {
                region: StapleRegion::Full,
            },
        )
        .unwrap();
        assert_eq!(got.fused.data(), majority_vote(&stack).unwrap().data());
    }
}

#[test]
fn majority_vote_matches_counting() {
    let mut rng = XorShift(17);
    for _ in 0..50 {
        let r = 1 + rng.below(5);
        let stack = random_stack(&mut rng, [4, 3, 2], r, 0.5);
        let mv = majority_vote(&stack).unwrap();
        for i in 0..mv.len() {
            let n = stack.masks().iter().filter(|m| m.data()[i]).count();
            assert_eq!(mv.data()[i], 2 * n > r);
        }
    }
}

#[test]
fn wilcoxon_exact_matches_enumeration() {
    let mut rng = XorShift(18);
    for _ in 0..20 {
        let n = 4 + rng.below(9);
        // coarse values so ties and zeros occur
        let a: Vec<f64> = (0..n).map(|_| rng.below(6) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.below(6) as f64).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        if d.iter().all(|&x| x == 0.0) {
            continue;
        }
        let (two, greater, less) = oracle::wilcoxon_enumerate(&d);
        for (alt, want) in [
            (Alternative::TwoSided, two),
            (Alternative::Greater, greater),
            (Alternative::Less, less),
        ] {
            let got = wilcoxon_signed_rank(&a, &b, alt).unwrap();
            assert!(got.exact);
            assert!(
                (got.p_value - want).abs() < 1e-12,
                "{alt:?}: {} vs {want}",
                got.p_value
            );
        }
    }
}

#[test]
fn friedman_matches_rank_counting() {
    let mut rng = XorShift(19);
    for _ in 0..50 {
        let n = 3 + rng.below(10);
        let k = 2 + rng.below(4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.below(5) as f64).collect())
            .collect();
        let table = MetricTable::from_rows((0..k).map(|j| format!("m{j}")).collect(), rows.clone())
            .unwrap();
        let got = friedman_test(&table, false).unwrap();
        if got.all_ties {
            continue;
        }
        assert!((got.chi2 - oracle::friedman_chi2(&rows)).abs() < 1e-9);
    }
}
