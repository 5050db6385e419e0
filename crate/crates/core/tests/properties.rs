use dmcalc::bayes::{conventional_bayes, generalized_bayes, BayesProblem};
use dmcalc::conditional::{cond_A_given_b, cond_full, decoupling_gap};
use dmcalc::density::{prob_dyad, remote_pinch, DensityMatrix};
use dmcalc::io::{parse, to_string, MatrixJson};
use dmcalc::sample;
use dmcalc::tensor::{marginal, partial_trace, Factor};
use dmcalc::{odot, OrthonormalBasis, PsdMatrix, SymmetricMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).norm() / y.norm().max(1e-300)
}

/// A rotated spectrum with eigenvalues in `[0.05, 2]` and `zeros` of them
/// set to zero.
fn psd_strategy(n: usize) -> impl Strategy<Value = PsdMatrix> {
    (proptest::collection::vec(0.05f64..2.0, n), 0..n, any::<u64>()).prop_map(move |(mut vals, zeros, seed)| {
        for v in vals.iter_mut().take(zeros) {
            *v = 0.0;
        }
        let m = sample::rotated(&mut sample::rng(seed), &vals);
        PsdMatrix::from_matrix((&m + m.transpose()) / 2.0).unwrap()
    })
}

fn pair(max_n: usize) -> impl Strategy<Value = (PsdMatrix, PsdMatrix)> {
    (2..=max_n).prop_flat_map(|n| (psd_strategy(n), psd_strategy(n)))
}

fn triple(max_n: usize) -> impl Strategy<Value = (PsdMatrix, PsdMatrix, PsdMatrix)> {
    (2..=max_n).prop_flat_map(|n| (psd_strategy(n), psd_strategy(n), psd_strategy(n)))
}

fn probability_vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn odot_commutes((a, b) in pair(5)) {
        let (ab, ba) = (odot(&a, &b).unwrap(), odot(&b, &a).unwrap());
        prop_assert!((ab.matrix() - ba.matrix()).norm() <= 1e-9 * ab.matrix().norm().max(1.0));
    }

    #[test]
    fn odot_associates((a, b, c) in triple(4)) {
        let left = odot(&odot(&a, &b).unwrap(), &c).unwrap();
        let right = odot(&a, &odot(&b, &c).unwrap()).unwrap();
        prop_assert!((left.matrix() - right.matrix()).norm() <= 1e-8 * right.matrix().norm().max(1.0));
    }

    #[test]
    fn odot_identity_and_scaling((a, _) in pair(5), c in 0.1f64..10.0) {
        let n = a.dim();
        prop_assert!(rel(odot(&a, &PsdMatrix::identity(n)).unwrap().matrix(), a.matrix()) <= 1e-9);
        let scaled = odot(&a.scaled(c).unwrap(), &PsdMatrix::identity(n)).unwrap();
        prop_assert!(rel(scaled.matrix(), &(a.matrix() * c)) <= 1e-9);
    }

    #[test]
    fn odot_range_is_within_both((a, b) in pair(5)) {
        let c = odot(&a, &b).unwrap();
        prop_assert!(c.rank() <= a.rank().min(b.rank()));
        for u in c.range().iter() {
            prop_assert!(a.range().contains(u.as_vector()));
            prop_assert!(b.range().contains(u.as_vector()));
        }
    }

    #[test]
    fn odot_trace_below_plain_product((a, b) in pair(5)) {
        let lhs = odot(&a, &b).unwrap().trace();
        let rhs = (a.matrix() * b.matrix()).trace();
        prop_assert!(lhs <= rhs + 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn remote_pinch_below_pinch((a, _) in pair(5), seed in any::<u64>()) {
        let u = sample::unit_vector(&mut sample::rng(seed), a.dim());
        let pinch = a.as_symmetric().quadratic_form(&u).unwrap();
        prop_assert!(remote_pinch(&a, &u).unwrap() <= pinch + 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let w = sample::density(&mut rng, n);
        let basis = sample::basis(&mut rng, n);
        let total: f64 = basis.iter().map(|u| prob_dyad(&w, &u).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn marginals_are_densities(na in 2usize..4, nb in 2usize..4, seed in any::<u64>()) {
        let j = sample::generic_joint(&mut sample::rng(seed), na, nb);
        for side in [Factor::A, Factor::B] {
            prop_assert!((marginal(&j, side).psd().trace() - 1.0).abs() <= 1e-12);
        }
        let g = partial_trace(j.matrix(), (na, nb), Factor::A).unwrap();
        prop_assert!((g.trace() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conditional_trace_bounded(na in 2usize..4, nb in 2usize..4, seed in any::<u64>()) {
        let mut rng = sample::rng(seed);
        let j = sample::generic_joint(&mut rng, na, nb);
        let c = cond_full(&j).unwrap();
        prop_assert!(c.trace() <= nb as f64 + 1e-9);
        prop_assert!(decoupling_gap(&j).unwrap() >= -1e-9);
        let b = sample::unit_vector(&mut rng, nb);
        let given_b = cond_A_given_b(&j, &b).unwrap();
        prop_assert!((given_b.psd().trace() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn conventional_posterior_normalized(
        (prior, lik) in (2usize..7).prop_flat_map(|n| (probability_vector(n), proptest::collection::vec(0.01f64..1.0, n)))
    ) {
        let (post, evidence) = conventional_bayes(&prior, &lik).unwrap();
        prop_assert!((post.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let want: f64 = prior.iter().zip(&lik).map(|(p, l)| p * l).sum();
        prop_assert!((evidence - want).abs() <= 1e-15);
    }

    #[test]
    fn generalized_reduces_on_diagonals(
        (prior, lik) in (2usize..7).prop_flat_map(|n| (probability_vector(n), proptest::collection::vec(0.01f64..1.0, n)))
    ) {
        let p = BayesProblem::new(
            DensityMatrix::from_diagonal(&prior).unwrap(),
            PsdMatrix::from_diagonal(&lik).unwrap(),
        )
        .unwrap();
        let up = generalized_bayes(&p).unwrap();
        let (post, evidence) = conventional_bayes(&prior, &lik).unwrap();
        prop_assert!((up.evidence - evidence).abs() <= 1e-12);
        for (i, q) in post.iter().enumerate() {
            prop_assert!((up.posterior.matrix()[(i, i)] - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_json_round_trips(n in 1usize..6, seed in any::<u64>()) {
        let s = sample::symmetric(&mut sample::rng(seed), n, 1e3);
        let back: MatrixJson = parse(&to_string(&MatrixJson::from_matrix(s.matrix()))).unwrap();
        prop_assert_eq!(&back.to_matrix().unwrap(), s.matrix());
        prop_assert_eq!(back.to_symmetric().unwrap(), SymmetricMatrix::new(s.matrix().clone()).unwrap());
    }

    #[test]
    fn hadamard_columns_are_orthonormal(k in 0u32..6) {
        let h = OrthonormalBasis::hadamard(1 << k).unwrap();
        let gram = h.columns().transpose() * h.columns();
        prop_assert!((gram - DMatrix::identity(1 << k, 1 << k)).amax() <= 1e-14);
    }
}
