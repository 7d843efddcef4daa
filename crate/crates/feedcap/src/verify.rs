//! Oracle-equivalence batteries behind the `verify` command.
//!
//! Each battery exercises one closed-form family against its independent
//! oracle over a fixed case set and reports the worst deviation observed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::estimation::{d_coeffs, gram_closed_forms, lemma1_brute, lemma1_quadratic};
use crate::noise::ArModel;
use crate::params::Sk2Params;
use crate::rate::{limit_identity_check, neville_to_zero};
use crate::rng::trial_rng;

/// Structured-inverse quadratic form vs dense inversion over 500 random
/// complex instances (n <= 8, m <= 5). Returns the worst absolute error;
/// tolerance 1e-9.
pub struct Lemma1Outcome {
    pub max_abs_error: f64,
    pub cases: usize,
}

pub fn lemma1_battery() -> Lemma1Outcome {
    let mut r = trial_rng(0xace, 5);
    let mut worst = 0.0f64;
    const CASES: usize = 500;
    for _ in 0..CASES {
        let n = r.gen_range(1..=8);
        let m = r.gen_range(1..=5);
        let u = DMatrix::from_fn(n, m, |_, _| {
            Complex64::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))
        });
        let i = r.gen_range(1..=m);
        let j = r.gen_range(1..=m);
        let a = lemma1_quadratic(&u, i, j).expect("valid indices");
        let b = lemma1_brute(&u, i, j).expect("valid indices");
        worst = worst.max((a - b).norm());
    }
    Lemma1Outcome { max_abs_error: worst, cases: CASES }
}

/// Diagonal-limit battery: raw errors must shrink linearly in eps, the
/// extrapolation anchored at eps = 1e-4 must land within 1e-5, the full
/// three-node extrapolation within 1e-8, and the diagonal residue of `g`
/// within 1e-12.
pub struct LimitIdentityOutcome {
    pub max_anchored_rel_err: f64,
    pub max_full_rel_err: f64,
    pub max_diag_residue: f64,
    pub raw_errors_linear: bool,
    pub cases: usize,
}

pub fn limit_identity_battery() -> LimitIdentityOutcome {
    let cases: Vec<(ArModel, f64)> = vec![
        (ArModel::white(), 1.5),
        (ArModel::white(), -2.0),
        (ArModel::new(vec![0.5]).unwrap(), 1.5),
        (ArModel::new(vec![0.5]).unwrap(), 2.2),
        (ArModel::new(vec![-0.6]).unwrap(), -1.4),
        (ArModel::new(vec![0.3, 0.4]).unwrap(), 1.3),
        (ArModel::new(vec![0.3, 0.4]).unwrap(), -1.4),
        (ArModel::new(vec![0.2, -0.5]).unwrap(), 1.8),
        (ArModel::new(vec![0.7]).unwrap(), 1.3),
        (ArModel::new(vec![-0.5, 0.3]).unwrap(), 2.0),
    ];
    let eps = [1e-3, 1e-4, 1e-5];
    let mut anchored_worst = 0.0f64;
    let mut full_worst = 0.0f64;
    let mut diag_worst = 0.0f64;
    let mut linear = true;
    let count = cases.len();
    for (model, gamma) in &cases {
        let rep = limit_identity_check(model, *gamma, &eps).expect("valid battery case");
        for e in &rep.per_eps {
            linear &= e.rel_err < 10.0 * e.eps;
        }
        let anchored =
            neville_to_zero(&eps[..2], &[rep.per_eps[0].f_value, rep.per_eps[1].f_value]);
        anchored_worst = anchored_worst
            .max((anchored - rep.repeated_power).abs() / rep.repeated_power.abs());
        full_worst = full_worst.max(rep.richardson_rel_err);
        diag_worst = diag_worst.max(rep.g_at_diagonal.abs());
    }
    LimitIdentityOutcome {
        max_anchored_rel_err: anchored_worst,
        max_full_rel_err: full_worst,
        max_diag_residue: diag_worst,
        raw_errors_linear: linear,
        cases: count,
    }
}

/// Gram closed forms against direct accumulation (and the pairwise form of
/// the 2x2 minor) over 20 (model, params) combinations, n <= 50.
/// Tolerance: relative 1e-8.
pub struct GramFormsOutcome {
    pub max_rel_dev: f64,
    pub combos: usize,
}

pub fn gram_forms_battery() -> GramFormsOutcome {
    let models = [
        ArModel::white(),
        ArModel::new(vec![0.5]).unwrap(),
        ArModel::new(vec![-0.4]).unwrap(),
        ArModel::new(vec![0.3, 0.4]).unwrap(),
        ArModel::new(vec![0.6, -0.3]).unwrap(),
    ];
    // magnitude ratios kept moderate so the accumulation oracle itself
    // stays exact in f64 at n = 50
    let cases = [
        Sk2Params::real_distinct(1.4, -1.4).unwrap(), // gamma1 = -gamma2
        Sk2Params::real_distinct(1.45, 1.35).unwrap(),
        Sk2Params::conjugate(1.4, std::f64::consts::FRAC_PI_4).unwrap(),
        Sk2Params::repeated(1.4).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut combos = 0;
    for model in &models {
        for params in &cases {
            combos += 1;
            let dc = d_coeffs(model, params, 50).expect("battery within range");
            for n in [1usize, 2, 3, 5, 10, 25, 50] {
                let mut g11 = 0.0;
                let mut g22 = 0.0;
                let mut g12 = 0.0;
                for k in 0..n {
                    g11 += dc.d1[k] * dc.d1[k];
                    g22 += dc.d2[k] * dc.d2[k];
                    g12 += dc.d1[k] * dc.d2[k];
                }
                let mut diff_sum = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let t = dc.d1[i] * dc.d2[j] - dc.d1[j] * dc.d2[i];
                        diff_sum += t * t;
                    }
                }
                let forms = gram_closed_forms(model, params, n).expect("battery within range");
                let scale = g11.max(g22).max(1.0);
                worst = worst.max((forms.d1_sq - g11).abs() / scale);
                worst = worst.max((forms.d2_sq - g22).abs() / scale);
                worst = worst.max((forms.cross - g12).abs() / scale);
                let closed_diff = forms.d1_sq * forms.d2_sq - forms.cross * forms.cross;
                worst = worst.max((closed_diff - diff_sum).abs() / diff_sum.max(scale));
                let det = (1.0 + g11) * (1.0 + g22) - g12 * g12;
                worst = worst.max((forms.det - det).abs() / det.abs().max(1.0));
            }
        }
    }
    GramFormsOutcome { max_rel_dev: worst, combos }
}
