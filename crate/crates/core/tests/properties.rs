use proptest::prelude::*;

use covbound::bounds::{c_accuracy_on_d, error_bound_cc, expected_accuracy};
use covbound::cover::{
    class_covers, cover_complexity, cover_difference, cover_report, empirical_separation_gap,
    h_curve, nn_distances, total_cover, total_cover_of, HCurve,
};
use covbound::dataset::{
    affine_transform, gp_binary_split, synth_1d, synth_2d, LabelSet, LabeledDataset,
};
use covbound::harness::EarlyStop;
use covbound::mlp::{spectral_norm, Control, Mlp};
use covbound::smoothness::{delta_f_grid, Grid};

fn unit_points(n: std::ops::RangeInclusive<usize>, d: usize) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(move |n| prop::collection::vec(0.0..=1.0f64, n * d))
}

/// Single-label dataset over `classes` classes in which every class occurs.
fn labeled(d: usize, classes: u32, n: usize) -> impl Strategy<Value = LabeledDataset> {
    (
        prop::collection::vec(0.0..=1.0f64, n * d),
        prop::collection::vec(1..=classes, n),
    )
        .prop_map(move |(points, mut labels)| {
            for c in 1..=classes {
                labels[(c - 1) as usize] = c;
            }
            let sets = labels.into_iter().map(LabelSet::single).collect();
            LabeledDataset::new("prop", d, classes as usize, points, sets).unwrap()
        })
}

fn pair(d: usize) -> impl Strategy<Value = (LabeledDataset, LabeledDataset)> {
    (2usize..=20, 2usize..=30).prop_flat_map(move |(n, m)| (labeled(d, 2, n), labeled(d, 2, m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_deterministic(half in 2usize..20, gap in 0.01..0.5f64, seed in 0u64..1000) {
        let n = 2 * half;
        prop_assert_eq!(synth_1d(n, gap, 50).unwrap(), synth_1d(n, gap, 50).unwrap());
        prop_assert_eq!(synth_2d(half + 2, gap, 10).unwrap(), synth_2d(half + 2, gap, 10).unwrap());
        prop_assert_eq!(
            gp_binary_split(20, 20, 0.2, seed).unwrap(),
            gp_binary_split(20, 20, 0.2, seed).unwrap()
        );
    }

    #[test]
    fn synthetic_train_sets_respect_the_gap(half in 2usize..40, gap in 0.01..0.6f64) {
        let (tr, _) = synth_1d(2 * half, gap, 10).unwrap();
        prop_assert!(tr.is_single_label());
        for &x in tr.points() {
            prop_assert!(!(x > 0.5 - gap / 2.0 && x < 0.5 + gap / 2.0));
        }
        prop_assert!(empirical_separation_gap(&tr).unwrap() >= gap - 1e-12);
    }

    #[test]
    fn synth_2d_gap_is_at_least_delta0(m in 4usize..30, gap in 0.02..0.3f64) {
        let (tr, _) = synth_2d(m, gap, 5).unwrap();
        if tr.class_count(1) > 0 && tr.class_count(2) > 0 {
            prop_assert!(empirical_separation_gap(&tr).unwrap() >= gap - 1e-12);
        }
    }

    #[test]
    fn affine_preserves_distance_ratios(
        points in unit_points(3..=12, 2),
        scale in 0.05..=1.0f64,
        sx in 0.0..1.0f64,
        sy in 0.0..1.0f64,
    ) {
        let n = points.len() / 2;
        let labels = (0..n).map(|_| LabelSet::single(1)).collect();
        let ds = LabeledDataset::new("a", 2, 1, points, labels).unwrap();
        let shift = [sx * (1.0 - scale), sy * (1.0 - scale)];
        let t = affine_transform(&ds, scale, &shift).unwrap();
        let dist = |p: &[f64], q: &[f64]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        for i in 0..n {
            for j in 0..n {
                let before = dist(ds.point(i), ds.point(j));
                let after = dist(t.point(i), t.point(j));
                prop_assert!((after - scale * before).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn h_curve_shape(
        train in unit_points(1..=20, 2),
        test in unit_points(1..=40, 2),
        count in 2usize..200,
    ) {
        let dists = nn_distances(&train, &test, 2).unwrap();
        let radii = HCurve::uniform_radii(2, count);
        let h = h_curve(&dists, 2, &radii).unwrap();
        prop_assert!(h.values.windows(2).all(|w| w[0] <= w[1]));
        let max = dists.iter().copied().fold(0.0, f64::max);
        for (&r, &v) in radii.iter().zip(&h.values) {
            if r > max {
                prop_assert_eq!(v, 1.0);
            }
        }
        let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            let tiny = h_curve(&dists, 2, &[min * 0.5]).unwrap();
            prop_assert_eq!(tiny.values[0], 0.0);
        }
    }

    #[test]
    fn adding_a_train_point_never_lowers_rho(
        train in unit_points(1..=15, 2),
        test in unit_points(1..=30, 2),
        x in 0.0..=1.0f64,
        y in 0.0..=1.0f64,
    ) {
        let before = total_cover_of(&train, &test, 2).unwrap();
        let mut more = train.clone();
        more.extend([x, y]);
        prop_assert!(total_cover_of(&more, &test, 2).unwrap() >= before);
    }

    #[test]
    fn cc_times_cd_is_one_minus_rho((tr, te) in pair(2)) {
        let r = cover_report(&tr, &te).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.rho_t));
        for &s in &r.sc {
            prop_assert!((0.0..=1.0).contains(&s));
        }
        for v in r.mc.iter().flatten().flatten() {
            prop_assert!((0.0..=1.0).contains(v));
        }
        if let Some(cc) = r.cc {
            let lhs = cc * r.cd;
            let rhs = 1.0 - r.rho_t;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn swapping_class_names_permutes_covers((tr, te) in pair(1)) {
        let swap = |ds: &LabeledDataset| {
            let labels = ds
                .labels()
                .iter()
                .map(|l| LabelSet::single(3 - l.as_single().unwrap()))
                .collect();
            ds.relabeled(labels).unwrap()
        };
        let (str_, ste) = (swap(&tr), swap(&te));
        let a = class_covers(&tr, &te).unwrap();
        let b = class_covers(&str_, &ste).unwrap();
        prop_assert_eq!(a.sc[0], b.sc[1]);
        prop_assert_eq!(a.sc[1], b.sc[0]);
        prop_assert_eq!(a.mc[0][1], b.mc[1][0]);
        let cd_a = cover_difference(&a.sc, &a.mc, 2).unwrap();
        let cd_b = cover_difference(&b.sc, &b.mc, 2).unwrap();
        prop_assert!((cd_a - cd_b).abs() <= 1e-15);
        let rho = total_cover(&nn_distances(tr.points(), te.points(), 1).unwrap(), 1).unwrap();
        if cd_a != 0.0 {
            let (x, y) = (cover_complexity(rho, cd_a).unwrap(), cover_complexity(rho, cd_b).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn forward_is_a_probability_vector(seed in 0u64..500, x in prop::collection::vec(-2.0..2.0f64, 3)) {
        let net = Mlp::new(&[3, 7, 5, 4], seed).unwrap();
        let p = net.forward(&x).unwrap();
        prop_assert_eq!(p.len(), 4);
        prop_assert!(p.iter().all(|&v| v > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn shifting_output_biases_leaves_outputs(seed in 0u64..500, shift in -5.0..5.0f64, x in prop::collection::vec(0.0..1.0f64, 2)) {
        let net = Mlp::new(&[2, 6, 3], seed).unwrap();
        let mut moved = net.clone();
        for b in &mut moved.layers_mut().last_mut().unwrap().bias {
            *b += shift;
        }
        let (p, q) = (net.forward(&x).unwrap(), moved.forward(&x).unwrap());
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn spectral_norm_is_homogeneous(
        rows in 1usize..8,
        cols in 1usize..8,
        c in -4.0..4.0f64,
        seed in prop::collection::vec(-1.0..1.0f64, 64),
    ) {
        let w: Vec<f64> = seed[..rows * cols].to_vec();
        let base = spectral_norm(&w, rows, cols).unwrap();
        prop_assume!(base > 1e-6 && c.abs() > 1e-3);
        let scaled: Vec<f64> = w.iter().map(|v| c * v).collect();
        let s = spectral_norm(&scaled, rows, cols).unwrap();
        prop_assert!((s - c.abs() * base).abs() <= 1e-8 * c.abs() * base);
    }

    #[test]
    fn delta_f_is_monotone_in_eps(seed in 0u64..200, a in 0.01..0.9f64, b in 0.01..0.9f64) {
        let net = Mlp::new(&[1, 10, 2], seed).unwrap();
        let grid = Grid::new(1, 401).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(delta_f_grid(&net, &grid, lo).unwrap() <= delta_f_grid(&net, &grid, hi).unwrap());
    }

    #[test]
    fn accuracy_family_is_ordered(seed in 0u64..200, c1 in 0.5..0.99f64, c2 in 0.5..0.99f64) {
        let net = Mlp::new(&[1, 8, 2], seed).unwrap();
        let (_, test) = synth_1d(10, 0.1, 200).unwrap();
        let test = test.single_label_part().unwrap();
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let p = expected_accuracy(&net, &test).unwrap();
        let p_lo = c_accuracy_on_d(&net, &test, lo).unwrap();
        let p_hi = c_accuracy_on_d(&net, &test, hi).unwrap();
        prop_assert!(p >= p_lo && p_lo >= p_hi);
    }

    #[test]
    fn error_bound_forms_agree(
        d in 1usize..10,
        delta0 in 0.01..1.0f64,
        delta_t in 0.01..1.0f64,
        kappa in 0.01..0.5f64,
        cd in 0.01..1.0f64,
        rho in 0.0..1.0f64,
    ) {
        let e = error_bound_cc(d, delta0, delta_t, kappa, cd, rho).unwrap();
        prop_assert!((e.min_form - e.alpha_cc_form).abs() <= 1e-12 * e.min_form.abs().max(1.0));
    }

    #[test]
    fn undefined_evaluations_keep_patience(seq in prop::collection::vec(prop::option::of(0.0..1.0f64), 1..60)) {
        let mut with = EarlyStop::new(3);
        let mut without = EarlyStop::new(3);
        let mut defined_seen = 0;
        for (i, v) in seq.iter().enumerate() {
            let a = with.observe(i, *v);
            if let Some(v) = v {
                let b = without.observe(defined_seen, Some(*v));
                defined_seen += 1;
                prop_assert_eq!(a, b);
            } else if with.stopped_at().is_none() {
                prop_assert_eq!(a, Control::Continue);
            }
        }
        prop_assert_eq!(with.peak().map(|p| p.1), without.peak().map(|p| p.1));
    }
}
