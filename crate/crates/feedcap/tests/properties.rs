//! Property tests for the structural invariants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use feedcap::estimation::{lemma1_brute, lemma1_quadratic};
use feedcap::noise::ArModel;
use feedcap::params::Sk2Params;
use feedcap::rate::{sk2_power_distinct, sk2_power_distinct_ratio};

fn beta_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.95f64..0.95, 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psd_times_l_norm_sq_is_one(betas in beta_vec(), theta in -10.0f64..10.0) {
        let m = ArModel::new(betas).unwrap();
        let z = Complex64::new(theta.cos(), theta.sin());
        let prod = m.psd(theta) * m.eval_l(z).norm_sqr();
        prop_assert!((prod - 1.0).abs() < 1e-12);
    }

    #[test]
    fn whiten_inverts_sampling(betas in beta_vec(), seed in any::<u64>()) {
        let m = ArModel::new(betas).unwrap();
        let p = m.order();
        let path = m.sample_noise(64, seed).unwrap();
        let w = m.whiten(&path.extended()).unwrap();
        prop_assert_eq!(w.len(), path.innovations.len());
        for (a, b) in w.iter().zip(&path.innovations) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let tail = m.whiten(&path.samples).unwrap();
        for (i, a) in tail.iter().enumerate() {
            prop_assert!((a - path.innovations[p + i]).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(betas in beta_vec(), seed in any::<u64>()) {
        let m = ArModel::new(betas).unwrap();
        let a = m.sample_noise(32, seed).unwrap();
        let b = m.sample_noise(32, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn l_prime_matches_finite_difference(
        betas in beta_vec(),
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let m = ArModel::new(betas).unwrap();
        let z = Complex64::new(re, im);
        let h = 1e-6;
        let fd = (m.eval_l(z + h) - m.eval_l(z - h)) / (2.0 * h);
        let an = m.eval_l_prime(z);
        prop_assert!((fd - an).norm() <= 1e-6 * an.norm().max(1.0));
    }

    #[test]
    fn lemma1_quadratic_equals_brute(
        n in 1usize..=8,
        m in 1usize..=5,
        entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 40),
        i in 0usize..5,
        j in 0usize..5,
    ) {
        let u = DMatrix::from_fn(n, m, |r, c| {
            let (re, im) = entries[(r * m + c) % entries.len()];
            Complex64::new(re, im)
        });
        let (i, j) = (i % m + 1, j % m + 1);
        let a = lemma1_quadratic(&u, i, j).unwrap();
        let b = lemma1_brute(&u, i, j).unwrap();
        prop_assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn sk2_power_forms_agree(
        betas in beta_vec(),
        m1 in 1.05f64..3.0,
        m2 in 1.05f64..3.0,
        s1 in prop::bool::ANY,
        s2 in prop::bool::ANY,
    ) {
        let model = ArModel::new(betas).unwrap();
        let g1 = Complex64::new(if s1 { m1 } else { -m1 }, 0.0);
        let g2 = Complex64::new(if s2 { m2 } else { -m2 }, 0.0);
        prop_assume!((g1 - g2).norm() > 1e-3);
        let a = sk2_power_distinct(&model, g1, g2).unwrap();
        let b = sk2_power_distinct_ratio(&model, g1, g2).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()));
    }

    #[test]
    fn message_recursion_holds(
        kind in 0usize..3,
        m1 in 1.05f64..2.2,
        m2 in 1.05f64..2.2,
        theta in 0.05f64..3.0,
    ) {
        let p = match kind {
            0 => {
                prop_assume!((m1 - m2).abs() > 1e-6);
                Sk2Params::real_distinct(m1, -m2).unwrap()
            }
            1 => Sk2Params::conjugate(m1, theta).unwrap(),
            _ => Sk2Params::repeated(m1).unwrap(),
        };
        let (a, b) = p.recursion();
        let (an, bn) = p.message_coeffs(16);
        for i in 2..16 {
            let scale = an[i].abs().max(bn[i].abs()).max(1.0);
            prop_assert!((an[i] - (a * an[i - 1] + b * an[i - 2])).abs() < 1e-9 * scale);
            prop_assert!((bn[i] - (a * bn[i - 1] + b * bn[i - 2])).abs() < 1e-9 * scale);
        }
    }
}
