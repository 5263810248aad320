use proptest::prelude::*;
use wdist::linalg::{self, CMatrix};
use wdist::quantum::{
    choi_state, expectation, fidelity, partial_trace, pauli_strings, random_mixed_state,
    random_pure_state, random_unitary, trace_distance, DensityMatrix,
};
use wdist::SeededRandomSource;

fn state(n: usize, mixed: bool, rng: &mut SeededRandomSource) -> DensityMatrix {
    if mixed {
        let rank = 1 + rng.index(1 << n);
        random_mixed_state(n, rank, rng).unwrap()
    } else {
        random_pure_state(n, rng).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), n in 1usize..=3, mixed in any::<[bool; 3]>()) {
        let mut rng = SeededRandomSource::new(seed);
        let [a, b, c] = mixed.map(|m| state(n, m, &mut rng));
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, trace_distance(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        let ac = trace_distance(&a, &c).unwrap();
        let cb = trace_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }

    #[test]
    fn fuchs_van_de_graaf(seed in any::<u64>(), n in 1usize..=3, mixed in any::<[bool; 2]>()) {
        let mut rng = SeededRandomSource::new(seed);
        let [a, b] = mixed.map(|m| state(n, m, &mut rng));
        let f = fidelity(&a, &b).unwrap();
        let t = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(1.0 - f <= t + 1e-8);
        prop_assert!(t <= (1.0 - f * f).max(0.0).sqrt() + 1e-8);
    }

    #[test]
    fn choi_marginal_is_maximally_mixed(seed in any::<u64>(), n in 1usize..=3) {
        let u = random_unitary(n, &mut SeededRandomSource::new(seed)).unwrap();
        let phi = choi_state(&u).unwrap();
        let keep: Vec<usize> = (0..n).collect();
        let marginal = partial_trace(&phi, &keep).unwrap();
        let d = 1usize << n;
        let target = CMatrix::identity(d, d).unscale(d as f64);
        prop_assert!(linalg::max_abs(&(marginal.matrix() - target)) < 1e-10);
    }

    #[test]
    fn pauli_expectations_reconstruct_the_state(seed in any::<u64>()) {
        let mut rng = SeededRandomSource::new(seed);
        let rho = state(2, true, &mut rng);
        let mut acc = CMatrix::zeros(4, 4);
        for p in pauli_strings(2).unwrap().iter() {
            acc += p.matrix().scale(expectation(&rho, p).unwrap() / 4.0);
        }
        prop_assert!(linalg::max_abs(&(acc - rho.matrix())) < 1e-9);
    }

    #[test]
    fn sampling_replays_bitwise(seed in any::<u64>(), n in 1usize..=3) {
        let draw = || {
            let mut rng = SeededRandomSource::new(seed);
            let u = random_unitary(n, &mut rng).unwrap();
            let rho = random_mixed_state(n, 2.min(1 << n), &mut rng).unwrap();
            (u.matrix().clone(), rho.matrix().clone(), rng.uniform())
        };
        prop_assert_eq!(draw(), draw());
    }
}
