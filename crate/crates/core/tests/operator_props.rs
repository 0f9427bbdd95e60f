use caldera::campaign::{generate_instance, instance_seed};
use caldera::extension::{
    check_minkowski, check_sublinear, greedy_hb_extension_row, holder_extension_row, lift_operator, LiftMethod,
    LiftOptions, SublinearMajorant,
};
use caldera::kfunc::{k_order_dominates, TGrid};
use caldera::majorization::{
    construct_positive_operator, decreasing_rearrangement, t_transform_chain, weak_submajorizes, MatrixOperator,
    OperatorCertificate,
};
use caldera::lattice::{Couple, MeasureSpace};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nonnegative `f ≠ 0` and `g` weakly submajorized by it: a convex
/// combination of shrunk, permuted copies of `f`.
fn ordered_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![1 => Just(0.0), 5 => 0.0f64..50.0], n),
            1e-3f64..50.0,
            any::<prop::sample::Index>(),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            prop::collection::vec(0.0f64..=1.0, n),
            0.0f64..=1.0,
        )
            .prop_map(|(mut f, spike, at, p1, p2, shrink, lambda)| {
                let n = f.len();
                f[at.index(n)] = spike;
                let g = (0..n).map(|i| lambda * shrink[i] * f[p1[i]] + (1.0 - lambda) * f[p2[i]]).collect();
                (f, g)
            })
    })
}

fn nonnegative_matrix() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..7).prop_flat_map(|n| (Just(n), prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..2.0], n * n)))
}

fn majorant(n: usize, entries: &[f64], alpha: f64, p: f64) -> SublinearMajorant {
    let t = MatrixOperator::new(DMatrix::from_row_slice(n, n, entries), MeasureSpace::counting(n).unwrap()).unwrap();
    SublinearMajorant::new(t, alpha, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_operator_transports((f, g) in ordered_pair()) {
        let n = f.len();
        prop_assert!(weak_submajorizes(&f, &g));
        let op = construct_positive_operator(&MeasureSpace::counting(n).unwrap(), &f, &g).unwrap();
        let cert = OperatorCertificate::compute(&op.operator, &f, &g).unwrap();
        prop_assert!(cert.holds(&g), "{cert:?}");
        prop_assert!(op.operator.is_positive());
        for (j, v) in f.iter().enumerate() {
            if *v == 0.0 {
                prop_assert!(op.operator.entries().column(j).iter().all(|e| *e == 0.0));
            }
        }
    }

    #[test]
    fn chain_products_agree((f, g) in ordered_pair()) {
        let n = f.len();
        let op = construct_positive_operator(&MeasureSpace::counting(n).unwrap(), &f, &g).unwrap();
        let chain = &op.chain;
        prop_assert!(chain.factors.len() < n.max(1));
        let rl = chain.product_right_to_left(n);
        let lr = chain.product_left_to_right(n);
        prop_assert!(max_abs_diff(&rl, &lr) <= 1e-12);
        prop_assert!(max_abs_diff(&rl, &chain.matrix) <= 1e-12);
        for k in 0..n {
            prop_assert!((rl.row(k).sum() - 1.0).abs() <= 1e-12);
            prop_assert!((rl.column(k).sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_maps_fstar_to_fill((f, g) in ordered_pair()) {
        let fstar = decreasing_rearrangement(&f).sorted.to_vec();
        let n = f.len();
        let op = construct_positive_operator(&MeasureSpace::counting(n).unwrap(), &f, &g).unwrap();
        let h = op.fill.to_vec();
        let chain = t_transform_chain(&fstar, &h).unwrap();
        let image = &chain.matrix * nalgebra::DVector::from_column_slice(&fstar);
        let scale = fstar.first().copied().unwrap_or(0.0).max(1.0);
        for (a, b) in image.iter().zip(&h) {
            prop_assert!((a - b).abs() <= 1e-12 * scale * n as f64);
        }
    }

    #[test]
    fn majorant_is_sublinear((n, entries) in nonnegative_matrix(), alpha in 0.1f64..4.0, p in 1.05f64..5.0, seed in any::<u64>()) {
        let h = majorant(n, &entries, alpha, p);
        let report = check_sublinear(&h, 50, seed);
        prop_assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn minkowski_pointwise(
        (n, entries) in nonnegative_matrix(),
        p in 1.05f64..5.0,
        h in prop::collection::vec(-1.0f64..1.0, 12),
        lambda in 0.0f64..3.0,
    ) {
        let t = MatrixOperator::new(DMatrix::from_row_slice(n, n, &entries), MeasureSpace::counting(n).unwrap()).unwrap();
        let h1 = &h[..n];
        let h2: Vec<f64> = h[6..6 + n].to_vec();
        prop_assert!(check_minkowski(&t, h1, &h2, p).unwrap().passed());
        let aligned: Vec<f64> = h1.iter().map(|v| lambda * v).collect();
        prop_assert!(check_minkowski(&t, h1, &aligned, p).unwrap().passed());
    }

    #[test]
    fn extension_rows_are_dominated(
        (n, entries) in nonnegative_matrix(),
        p in 1.1f64..4.0,
        f in prop::collection::vec(prop_oneof![1 => Just(0.0), 5 => -3.0f64..3.0], 6),
        c in -1.0f64..=1.0,
        row in any::<prop::sample::Index>(),
        probes in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 20),
    ) {
        let h = majorant(n, &entries, 1.0, p);
        let f = &f[..n];
        let i = row.index(n);
        let hf = h.apply(f).unwrap()[i];
        let g_i = c * hf;
        let q = h.row(i);
        let mut rows = Vec::new();
        if hf > 0.0 || g_i == 0.0 {
            rows.push(("holder", holder_extension_row(&h, f, g_i, i).unwrap()));
        }
        if f.iter().any(|&v| v != 0.0) {
            rows.push(("greedy", greedy_hb_extension_row(&q, f, g_i).unwrap()));
        }
        for (name, l) in rows {
            prop_assert!((dot(&l, f) - g_i).abs() <= 1e-8 * (1.0 + g_i.abs()), "{name}: ℓ(f) = {} vs {g_i}", dot(&l, f));
            let norm1: f64 = l.iter().map(|v| v.abs()).sum();
            for probe in &probes {
                let x = &probe[..n];
                let bound = q.value(x);
                let scale = norm1 * x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                prop_assert!(dot(&l, x) <= bound + 1e-9 * bound + 1e-12 * scale, "{name}: {} > {bound}", dot(&l, x));
            }
        }
    }

    #[test]
    fn generator_is_deterministic(master in any::<u64>(), index in 0usize..1000, p in 1.1f64..4.0) {
        let (seed, n) = instance_seed(master, index, 2, 8);
        prop_assert_eq!(instance_seed(master, index, 2, 8), (seed, n));
        prop_assert!((2..=8).contains(&n));
        let a = generate_instance(seed, n, p, false, true).unwrap();
        let b = generate_instance(seed, n, p, false, true).unwrap();
        prop_assert_eq!(&a, &b);
        let couple = a.couple().unwrap().convexify(p).unwrap();
        prop_assert!(k_order_dominates(&couple, &a.f, a.g().unwrap(), &TGrid::default_grid()).unwrap());
    }
}

#[test]
fn construction_preconditions() {
    let space = MeasureSpace::counting(2).unwrap();
    assert!(construct_positive_operator(&space, &[0.0, 0.0], &[0.0, 0.0]).is_err());
    assert!(construct_positive_operator(&space, &[1.0, -1.0], &[0.5, 0.5]).is_err());
    assert!(construct_positive_operator(&space, &[1.0, 1.0], &[1.5, 0.0]).is_err());
    assert!(construct_positive_operator(&MeasureSpace::new(vec![1.0, 2.0]).unwrap(), &[1.0, 1.0], &[0.5, 0.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lifts_pass_their_certificates(seed in any::<u64>(), n in 1usize..6, p in 1.2f64..4.0, greedy in any::<bool>()) {
        let inst = generate_instance(seed, n, p, false, true).unwrap();
        let couple = Couple::l1_linf(MeasureSpace::counting(n).unwrap());
        let options = LiftOptions {
            method: if greedy { LiftMethod::Greedy } else { LiftMethod::Holder },
            audit_samples: 200,
            seed,
            ..LiftOptions::default()
        };
        let r = lift_operator(&couple, &inst.f, inst.g().unwrap(), p, &options).unwrap();
        prop_assert!(r.certificates.passed(), "{:?}", r.certificates);
        let lf = r.l.apply(&inst.f).unwrap();
        for (a, b) in lf.iter().zip(inst.g().unwrap().iter()) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }
}
