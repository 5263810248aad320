use proptest::prelude::*;
use wdist::features::{extract_features, feature_names, layout_for};
use wdist::quantum::{
    choi_state, perturb_unitary, random_mixed_state, random_pure_state, random_unitary,
};
use wdist::SeededRandomSource;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Pauli difference columns of an interpolated pair scale linearly in α.
    #[test]
    fn pauli_differences_are_linear_in_alpha(seed in any::<u64>(), n in 1usize..=3, alpha in 0.01f64..0.5) {
        let mut rng = SeededRandomSource::new(seed);
        let rho1 = random_pure_state(n, &mut rng).unwrap();
        let rr = random_mixed_state(n, 1 + rng.index(1 << n), &mut rng).unwrap();
        let layout = layout_for(n).unwrap();
        let f1 = extract_features(&rho1, &rho1.mix(&rr, alpha).unwrap(), &layout).unwrap();
        let f2 = extract_features(&rho1, &rho1.mix(&rr, 2.0 * alpha).unwrap(), &layout).unwrap();
        for (i, name) in feature_names(&layout).iter().enumerate() {
            if name.ends_with(".diff") {
                prop_assert!((f2.values[i] - 2.0 * f1.values[i]).abs() < 1e-9, "{}", name);
            }
        }
    }

    /// Swapping ρ and σ swaps the per-state columns and negates differences.
    #[test]
    fn swapping_the_pair(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = SeededRandomSource::new(seed);
        let a = random_mixed_state(n, 2.min(1 << n), &mut rng).unwrap();
        let b = random_pure_state(n, &mut rng).unwrap();
        let layout = layout_for(n).unwrap();
        let names = feature_names(&layout);
        let ab = extract_features(&a, &b, &layout).unwrap();
        let ba = extract_features(&b, &a, &layout).unwrap();
        let at = |v: &[f64], name: &str| v[names.iter().position(|x| x == name).unwrap()];
        for name in &names {
            let x = at(&ab.values, name);
            if name.ends_with(".diff") {
                prop_assert!((x + at(&ba.values, name)).abs() < 1e-12);
            } else if name.ends_with(".exp_rho") {
                prop_assert_eq!(x, at(&ba.values, &name.replace("exp_rho", "exp_sigma")));
            } else if name.ends_with(".prod") || name == "fidelity" || name == "moment.M_cross" {
                prop_assert!((x - at(&ba.values, name)).abs() < 1e-10, "{}", name);
            }
        }
    }
}

#[test]
fn features_are_finite_over_1000_pairs() {
    let mut rng = SeededRandomSource::new(2024);
    for i in 0..1000 {
        let n = 1 + i % 3;
        let (a, b) = match i % 3 {
            0 => (
                random_pure_state(n, &mut rng).unwrap(),
                random_pure_state(n, &mut rng).unwrap(),
            ),
            1 => {
                let r = 1 + rng.index(1 << n);
                (
                    random_mixed_state(n, r, &mut rng).unwrap(),
                    random_mixed_state(n, r, &mut rng).unwrap(),
                )
            }
            _ => {
                let gq = 1 + i % 2;
                let u = random_unitary(gq, &mut rng).unwrap();
                let v = perturb_unitary(&u, 0.1, &mut rng).unwrap();
                (choi_state(&u).unwrap(), choi_state(&v).unwrap())
            }
        };
        let layout = layout_for(a.n_qubits()).unwrap();
        let f = extract_features(&a, &b, &layout).unwrap();
        assert_eq!(f.len(), layout.total_length);
        assert!(f.values.iter().all(|v| v.is_finite()), "pair {i}");
    }
}

#[test]
fn layout_hash_is_stable() {
    let h1: Vec<String> = (1..=4).map(|n| layout_for(n).unwrap().hash()).collect();
    let h2: Vec<String> = (1..=4).map(|n| layout_for(n).unwrap().hash()).collect();
    assert_eq!(h1, h2);
    assert!(h1.iter().all(|h| h.len() == 64));
}
