use hamming_maximal::actions::CommutingUnitaryAction;
use hamming_maximal::cesaro::{cesaro_product, CesaroTable};
use hamming_maximal::matrix::{self, ginibre, identity, random_psd};
use hamming_maximal::noise::noise_operator;
use hamming_maximal::norms::{linf_norm_positive, PositiveSequence};
use hamming_maximal::{forward_transform, inverse_transform, GroupSpec, OperatorField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_spec() -> impl Strategy<Value = GroupSpec> {
    (1usize..=3, 1usize..=4).prop_map(|(m, d)| GroupSpec::new(m, d).unwrap())
}

fn random_field(spec: GroupSpec, n: usize, seed: u64) -> OperatorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OperatorField::from_fn(spec, n, |_| ginibre(n, &mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_law(spec in small_spec(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let size = spec.size();
        let (a, b, c) = (a as usize % size, b as usize % size, c as usize % size);
        prop_assert_eq!(spec.add_index(a, b), spec.add_index(b, a));
        prop_assert_eq!(spec.add_index(spec.add_index(a, b), c), spec.add_index(a, spec.add_index(b, c)));
        prop_assert_eq!(spec.add_index(a, spec.neg_index(a)), 0);
        prop_assert_eq!(spec.sub_index(a, b), spec.add_index(a, spec.neg_index(b)));
        prop_assert_eq!(spec.weight_of_index(a), spec.weight_of_index(spec.neg_index(a)));
    }

    #[test]
    fn transform_is_unitary(spec in small_spec(), n in 1usize..=2, seed in any::<u64>()) {
        let f = random_field(spec, n, seed);
        let g = forward_transform(&f);
        prop_assert!((g.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
        prop_assert!(inverse_transform(&g).max_abs_diff(&f) <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn cesaro_recurrence_matches_product(re in -4.0f64..4.0, im in -2.0f64..2.0, n in 0usize..40) {
        let alpha = Complex64::new(re, im);
        let table = CesaroTable::new(alpha, 40);
        let product = cesaro_product(alpha, n);
        prop_assert!((table.get(n) - product).norm() <= 1e-10 * (1.0 + product.norm()));
    }

    #[test]
    fn noise_is_a_semigroup(spec in small_spec(), s in 0.0f64..2.0, t in 0.0f64..2.0, seed in any::<u64>()) {
        let f = random_field(spec, 2, seed);
        let two_steps = noise_operator(&noise_operator(&f, s).unwrap(), t).unwrap();
        let one_step = noise_operator(&f, s + t).unwrap();
        prop_assert!(two_steps.max_abs_diff(&one_step) <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn solver_primal_dominates_dual(n in 1usize..=3, len in 1usize..=4, p in prop::sample::select(vec![1.0, 1.5, 2.0, 4.0]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<_> = (0..len).map(|_| random_psd(n, &mut rng)).collect();
        let cert = linf_norm_positive(&PositiveSequence::new(xs.clone()).unwrap(), p).unwrap();
        prop_assert!(cert.dual_value <= cert.primal_value * (1.0 + 1e-12));
        prop_assert!(cert.converged);
        for x in &xs {
            let slack = matrix::hermitian_part(&(&cert.witness_a - x));
            prop_assert!(matrix::min_eigenvalue(&slack) >= -1e-12 * cert.primal_value);
        }
    }

    #[test]
    fn ergodic_means_are_unital_and_positive(spec in small_spec(), seed in any::<u64>(), k in 0usize..=4) {
        let n = 2;
        let k = k.min(spec.d());
        let action = CommutingUnitaryAction::random(spec, n, seed).unwrap();
        let unit = action.ergodic_mk(&identity(n), k).unwrap();
        prop_assert!((unit - identity(n)).norm() <= 1e-12);
        let x = random_psd(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let y = action.ergodic_mk(&x, k).unwrap();
        prop_assert!(matrix::min_eigenvalue(&matrix::hermitian_part(&y)) >= -1e-12 * matrix::frobenius_norm(&x));
    }
}
