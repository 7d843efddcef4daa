//! Gaussian MMSE machinery for the whitened channel.
//!
//! After whitening, the receiver sees `Ytil_n = d_{1,n} U_1 + d_{2,n} U_2 + W_n`
//! with deterministic gains `d_{i,n}` (the message coefficients filtered by
//! `L(B)`). Everything here is a function of those gains: the
//! structured-inverse quadratic forms, finite-horizon MMSE values,
//! closed-form Gram accumulations, and the O(1)-per-step rank-2 Gram
//! recursion the simulator runs.
//!
//! Numerical regimes: the direct formulas hold while `|gamma|^{4n}` fits in
//! an f64. Past that, log-domain variants keep exact log-determinants by
//! tracking an explicit rescaling exponent. With distinct real root
//! magnitudes the 2x2 determinant loses `(gamma_max/gamma_min)^{2n}` digits
//! to cancellation, so the log-domain path switches to sign/log evaluation
//! of the closed forms in that regime.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::FeedcapError;
use crate::noise::ArModel;
use crate::params::{try_collapse_real, RootKind, Sk2Params};

/// Which message component an MMSE refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageIndex {
    U1,
    U2,
}

/// Whitened-channel message gains `d_{1,k}`, `d_{2,k}` for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DCoeffs {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl DCoeffs {
    pub fn len(&self) -> usize {
        self.d1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d1.is_empty()
    }

    /// Drop the first `skip` entries; used by the simulator, whose
    /// estimator conditions on whitened outputs from index p+1 onward.
    pub fn tail(&self, skip: usize) -> DCoeffs {
        DCoeffs { d1: self.d1[skip..].to_vec(), d2: self.d2[skip..].to_vec() }
    }
}

/// Message gains seen through the whitening filter.
///
/// Distinct roots: `d_{1,n} = -c_1 g_2 L(1/g_1) g_1^n - c_2 g_1 L(1/g_2) g_2^n`
/// and `d_{2,n} = c_1 L(1/g_1) g_1^n + c_2 L(1/g_2) g_2^n`. Repeated root:
/// `d_{1,n} = [(2-n) L + L'/g] g^{n-1}`, `d_{2,n} = [(n-1) L - L'/g] g^{n-2}`.
pub fn d_coeffs(model: &ArModel, params: &Sk2Params, n: usize) -> Result<DCoeffs, FeedcapError> {
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    match params.kind() {
        RootKind::Repeated => {
            let g = params.roots().0.re;
            let l = model.eval_l_real(1.0 / g);
            let lp = model.eval_l_prime_real(1.0 / g);
            for k in 1..=n {
                let kf = k as f64;
                d1.push(((2.0 - kf) * l + lp / g) * g.powi(k as i32 - 1));
                d2.push(((kf - 1.0) * l - lp / g) * g.powi(k as i32 - 2));
            }
        }
        _ => {
            let (g1, g2) = params.roots();
            let (c1, c2) = params.pf_weights();
            let l1 = model.eval_l(1.0 / g1);
            let l2 = model.eval_l(1.0 / g2);
            let (w1, w2) = (c1 * l1, c2 * l2);
            let mut p1 = Complex64::new(1.0, 0.0);
            let mut p2 = Complex64::new(1.0, 0.0);
            for _ in 1..=n {
                p1 *= g1;
                p2 *= g2;
                d1.push(try_collapse_real(-(w1 * g2 * p1 + w2 * g1 * p2))?);
                d2.push(try_collapse_real(w1 * p1 + w2 * p2)?);
            }
        }
    }
    if d1.iter().chain(d2.iter()).any(|x| !x.is_finite()) {
        return Err(FeedcapError::NonFinite("d_coeffs (horizon beyond f64 range)"));
    }
    Ok(DCoeffs { d1, d2 })
}

// ---------------------------------------------------------------------------
// Lemma-style structured quadratic forms
// ---------------------------------------------------------------------------

/// Quadratic form `u_i^* (I_n + U U^*)^{-1} u_j` evaluated through the small
/// `m x m` matrix `A = I_m + U^* U` and its minors: `1 - M_ii/|A|` on the
/// diagonal and `(-1)^{i+j+1} M_ji / |A|` off it. Indices are 1-based.
pub fn lemma1_quadratic(
    u: &DMatrix<Complex64>,
    i: usize,
    j: usize,
) -> Result<Complex64, FeedcapError> {
    let m = u.ncols();
    if i == 0 || j == 0 || i > m || j > m {
        return Err(FeedcapError::IndexOutOfRange { i, j, m });
    }
    let a = DMatrix::<Complex64>::identity(m, m) + u.adjoint() * u;
    let det = a.clone().determinant();
    if i == j {
        let m_ii = minor(&a, i - 1, i - 1);
        Ok(Complex64::new(1.0, 0.0) - m_ii / det)
    } else {
        let m_ji = minor(&a, j - 1, i - 1);
        let sign = if (i + j + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * m_ji / det)
    }
}

/// Same contract as [`lemma1_quadratic`], by explicit `n x n` inversion.
/// This is the dense oracle the quadratic form is checked against.
pub fn lemma1_brute(
    u: &DMatrix<Complex64>,
    i: usize,
    j: usize,
) -> Result<Complex64, FeedcapError> {
    let (n, m) = (u.nrows(), u.ncols());
    if i == 0 || j == 0 || i > m || j > m {
        return Err(FeedcapError::IndexOutOfRange { i, j, m });
    }
    let big = DMatrix::<Complex64>::identity(n, n) + u * u.adjoint();
    let inv = big.try_inverse().expect("I + UU* is positive definite");
    let ui = u.column(i - 1);
    let uj = u.column(j - 1);
    Ok((ui.adjoint() * inv * uj)[(0, 0)])
}

/// Determinant of `a` with row `r` and column `c` removed.
fn minor(a: &DMatrix<Complex64>, r: usize, c: usize) -> Complex64 {
    let sub = a.clone().remove_row(r).remove_column(c);
    if sub.nrows() == 0 {
        Complex64::new(1.0, 0.0) // empty-matrix convention
    } else {
        sub.determinant()
    }
}

// ---------------------------------------------------------------------------
// Finite-horizon MMSE, linear domain
// ---------------------------------------------------------------------------

/// `E|U_i - E[U_i | Ytil_1^n]|^2 = (1 + D_other^T D_other) / |I_2 + D^T D|`.
/// Valid while the determinant fits in an f64.
pub fn mmse_u(dc: &DCoeffs, n: usize, which: MessageIndex) -> f64 {
    assert!(n >= 1 && n <= dc.len());
    let (g11, g22, g12) = gram_sums(&dc.d1[..n], &dc.d2[..n]);
    let det = (1.0 + g11) * (1.0 + g22) - g12 * g12;
    let num = match which {
        MessageIndex::U1 => 1.0 + g22,
        MessageIndex::U2 => 1.0 + g11,
    };
    num / det
}

/// Prediction error of `V_n` given `Ytil_1^{n-1}`:
/// `(a_n^2 + b_n^2 + ||a_n D_2 - b_n D_1||^2) / |I_2 + D^T D|` over the
/// first n-1 gains.
pub fn mmse_v(params: &Sk2Params, dc: &DCoeffs, n: usize) -> f64 {
    assert!(n >= 2 && n - 1 <= dc.len());
    let (a, b) = params.message_coeff(n);
    let w = n - 1;
    let (g11, g22, g12) = gram_sums(&dc.d1[..w], &dc.d2[..w]);
    let det = (1.0 + g11) * (1.0 + g22) - g12 * g12;
    let mut cross = 0.0;
    for k in 0..w {
        let t = a * dc.d2[k] - b * dc.d1[k];
        cross += t * t;
    }
    (a * a + b * b + cross) / det
}

fn gram_sums(d1: &[f64], d2: &[f64]) -> (f64, f64, f64) {
    let mut g11 = 0.0;
    let mut g22 = 0.0;
    let mut g12 = 0.0;
    for (&x, &y) in d1.iter().zip(d2) {
        g11 += x * x;
        g22 += y * y;
        g12 += x * y;
    }
    (g11, g22, g12)
}

// ---------------------------------------------------------------------------
// Closed-form Gram accumulations
// ---------------------------------------------------------------------------

/// The scalar products of the gain vectors and the 2x2 determinant,
/// evaluated in closed form (no summation over steps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramForms {
    pub d1_sq: f64,
    pub d2_sq: f64,
    pub cross: f64,
    pub det: f64,
}

/// Closed forms for `D_1^T D_1`, `D_2^T D_2`, `D_1^T D_2` and
/// `|I_2 + D^T D|` at horizon `n` (index-1 start). Distinct roots use the
/// geometric-sum matrix; the repeated root uses the `S_n^(1)`, `S_n^(2)`
/// power sums.
pub fn gram_closed_forms(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<GramForms, FeedcapError> {
    assert!(n >= 1);
    let forms = match params.kind() {
        RootKind::Repeated => case_b_forms(model, params, n),
        _ => case_a_forms(model, params, n)?,
    };
    Ok(forms)
}

fn case_a_forms(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<GramForms, FeedcapError> {
    let (g1, g2) = params.roots();
    let (c1, c2) = params.pf_weights();
    let l1 = model.eval_l(1.0 / g1);
    let l2 = model.eval_l(1.0 / g2);
    let one = Complex64::new(1.0, 0.0);
    let l11 = c1 * c1 * l1 * l1 / (g1 * g1 - one);
    let l22 = c2 * c2 * l2 * l2 / (g2 * g2 - one);
    let l12 = c1 * c2 * l1 * l2 / (g1 * g2 - one);
    let p1 = g1.powu(n as u32);
    let p2 = g2.powu(n as u32);
    // entries of the geometric-sum matrix L_n^(2)
    let a11 = l11 * g1 * g1 * (p1 * p1 - one);
    let a12 = l12 * g1 * g2 * (p1 * p2 - one);
    let a22 = l22 * g2 * g2 * (p2 * p2 - one);
    // D1 = [-g2 -g1] v_k, D2 = [1 1] v_k
    let d1_sq = g2 * g2 * a11 + 2.0 * g1 * g2 * a12 + g1 * g1 * a22;
    let d2_sq = a11 + 2.0 * a12 + a22;
    let cross = -(g2 * a11 + (g1 + g2) * a12 + g1 * a22);
    let d1_sq = try_collapse_real(d1_sq)?;
    let d2_sq = try_collapse_real(d2_sq)?;
    let cross = try_collapse_real(cross)?;
    let det = (1.0 + d1_sq) * (1.0 + d2_sq) - cross * cross;
    Ok(GramForms { d1_sq, d2_sq, cross, det })
}

/// `S_n^(1) = sum_{k=1}^{n-1} k g^{2k}` in closed form.
fn s1_closed(g: f64, n: usize) -> f64 {
    let nf = n as f64;
    let g2 = g * g;
    let gm = g2 - 1.0;
    let g2n = g2.powi(n as i32);
    nf * g2n / gm - g2 * g2 * g2.powi(n as i32 - 1) / (gm * gm) + g2 / (gm * gm)
}

/// `S_n^(2) = sum_{k=1}^{n-1} k^2 g^{2k}` in closed form.
fn s2_closed(g: f64, n: usize) -> f64 {
    let nf = n as f64;
    let g2 = g * g;
    let gm = g2 - 1.0;
    let g2n = g2.powi(n as i32);
    nf * nf * g2n / gm - 2.0 * g2 * nf * g2n / (gm * gm)
        + g2 * g2 * (g2 + 1.0) * g2.powi(n as i32 - 1) / (gm * gm * gm)
        - (g2 + 1.0) * g2 / (gm * gm * gm)
}

fn case_b_forms(model: &ArModel, params: &Sk2Params, n: usize) -> GramForms {
    let g = params.roots().0.re;
    let l = model.eval_l_real(1.0 / g);
    let lp = model.eval_l_prime_real(1.0 / g);
    let g2 = g * g;
    let gm = g2 - 1.0;
    let g2n = g2.powi(n as i32);
    let nf = n as f64;
    let d1_sq = l * l * g2 * s2_closed(g, n - 1) - 2.0 * l * lp * g * s1_closed(g, n - 1)
        + l * l
        + lp * lp / g2 * (g2n - 1.0) / gm
        + 2.0 * l * lp / g;
    let d2_sq = l * l / g2 * s2_closed(g, n) - 2.0 * l * lp / (g2 * g) * s1_closed(g, n)
        + lp * lp / (g2 * g2) * (g2n - 1.0) / gm;
    let cross = l * (lp + lp / g2 - l * g) * s1_closed(g, n - 1)
        + l * lp / (g2 * g2) * g2n * (nf - 1.0)
        - l * l * g * s2_closed(g, n - 1)
        - lp * lp / (g2 * g) * (g2n - 1.0) / gm
        - l * lp / g2;
    let det = (1.0 + d1_sq) * (1.0 + d2_sq) - cross * cross;
    GramForms { d1_sq, d2_sq, cross, det }
}

// ---------------------------------------------------------------------------
// Log-domain MMSE
// ---------------------------------------------------------------------------

/// `ln E|U_i - E[U_i | Ytil_1^n]|^2`, valid for any horizon.
pub fn log_mmse_u(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
    which: MessageIndex,
) -> Result<f64, FeedcapError> {
    log_quantities(model, params, n).map(|q| match which {
        MessageIndex::U1 => q.log_num_u1 - q.log_det,
        MessageIndex::U2 => q.log_num_u2 - q.log_det,
    })
}

/// `ln E|V_n - E[V_n | Ytil_1^{n-1}]|^2`, valid for any horizon.
pub fn log_mmse_v(model: &ArModel, params: &Sk2Params, n: usize) -> Result<f64, FeedcapError> {
    assert!(n >= 2);
    let q = log_quantities(model, params, n - 1)?;
    Ok(q.log_num_v_next - q.log_det)
}

/// `ln |I_2 + D_n^T D_n|`, valid for any horizon.
pub fn log_det_gram(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<f64, FeedcapError> {
    log_quantities(model, params, n).map(|q| q.log_det)
}

struct LogQuantities {
    log_det: f64,
    log_num_u1: f64, // ln(1 + D2^T D2)
    log_num_u2: f64, // ln(1 + D1^T D1)
    /// ln(a^2 + b^2 + ||a D2 - b D1||^2) with (a, b) the message
    /// coefficients at step n+1 (numerator of the V-prediction error).
    log_num_v_next: f64,
}

fn log_quantities(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<LogQuantities, FeedcapError> {
    let (g1, g2) = params.roots();
    let dl = (g1.norm().ln() - g2.norm().ln()).abs();
    // With nearly equal magnitudes the running accumulation loses nothing;
    // past this, the 2x2 determinant cancels catastrophically and the
    // sign/log closed forms take over (real roots only in that regime).
    if 2.0 * n as f64 * dl < 16.0 {
        log_quantities_accumulated(model, params, n)
    } else {
        log_quantities_closed(model, params, n)
    }
}

/// Rescaled-frame accumulation: gains generated by the shared second-order
/// recursion, every rescale tracked in an explicit exponent.
fn log_quantities_accumulated(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<LogQuantities, FeedcapError> {
    const THRESH: f64 = 1e100;
    let head = d_coeffs(model, params, 2.min(n).max(1))?;
    let (a, b) = params.recursion();
    // message coefficients follow the same recursion; carry the pair for
    // indices (k, k+1) in the same scaled frame so index n+1 never leaves
    // f64 range
    let (mut ma_prev, mut mb_prev) = (1.0f64, 0.0f64); // index 1
    let (mut ma, mut mb) = (0.0f64, 1.0f64); // index 2

    let mut ls = 0.0f64;
    let (mut d1_prev, mut d2_prev) = (0.0, 0.0);
    let (mut d1_cur, mut d2_cur) = (head.d1[0], head.d2[0]);
    let (mut g11, mut g22, mut g12) = (0.0f64, 0.0, 0.0);
    for k in 1..=n {
        if k > 1 {
            let (nd1, nd2) = if k == 2 {
                (head.d1[1], head.d2[1])
            } else {
                (a * d1_cur + b * d1_prev, a * d2_cur + b * d2_prev)
            };
            d1_prev = d1_cur;
            d2_prev = d2_cur;
            d1_cur = nd1;
            d2_cur = nd2;
            let (na, nb) = (a * ma + b * ma_prev, a * mb + b * mb_prev);
            ma_prev = ma;
            mb_prev = mb;
            ma = na;
            mb = nb;
        }
        g11 += d1_cur * d1_cur;
        g22 += d2_cur * d2_cur;
        g12 += d1_cur * d2_cur;
        let m = g11
            .max(g22)
            .max(g12.abs())
            .max(d1_cur.abs().max(d2_cur.abs()))
            .max(ma.abs().max(mb.abs()));
        if m > THRESH {
            let delta = m.ln();
            let inv = 1.0 / m;
            let half = inv.sqrt();
            g11 *= inv;
            g22 *= inv;
            g12 *= inv;
            d1_prev *= half;
            d2_prev *= half;
            d1_cur *= half;
            d2_cur *= half;
            ma_prev *= half;
            mb_prev *= half;
            ma *= half;
            mb *= half;
            ls += delta;
        }
    }
    let w = (-ls).exp();
    let det_scaled = w * w + w * (g11 + g22) + (g11 * g22 - g12 * g12);
    if !det_scaled.is_finite() || det_scaled <= 0.0 {
        return Err(FeedcapError::NonFinite("log-domain determinant"));
    }
    let log_det = 2.0 * ls + det_scaled.ln();
    let log_num_u1 = ls + (w + g22).ln();
    let log_num_u2 = ls + (w + g11).ln();
    // a^2 + b^2 + (a^2 G22 - 2ab G12 + b^2 G11) in the scaled frame
    let qform = ma * ma * g22 - 2.0 * ma * mb * g12 + mb * mb * g11;
    let log_num_v = 2.0 * ls + (w * (ma * ma + mb * mb) + qform).ln();
    Ok(LogQuantities { log_det, log_num_u1, log_num_u2, log_num_v_next: log_num_v })
}

/// Sign/log evaluation of the closed forms for distinct real magnitudes.
fn log_quantities_closed(
    model: &ArModel,
    params: &Sk2Params,
    n: usize,
) -> Result<LogQuantities, FeedcapError> {
    let (g1c, g2c) = params.roots();
    if g1c.im != 0.0 || g2c.im != 0.0 {
        // conjugate pairs have equal magnitudes and never reach this branch
        return Err(FeedcapError::NonFinite("sign/log route requires real roots"));
    }
    let (g1, g2) = (g1c.re, g2c.re);
    let (c1c, c2c) = params.pf_weights();
    let (c1, c2) = (c1c.re, c2c.re);
    let l1 = model.eval_l_real(1.0 / g1);
    let l2 = model.eval_l_real(1.0 / g2);
    let l11 = c1 * c1 * l1 * l1 / (g1 * g1 - 1.0);
    let l22 = c2 * c2 * l2 * l2 / (g2 * g2 - 1.0);
    let l12 = c1 * c2 * l1 * l2 / (g1 * g2 - 1.0);

    let p1 = LogVal::pow(g1, 2 * n as i64); // g1^{2n}
    let p2 = LogVal::pow(g2, 2 * n as i64);
    let p12 = LogVal::pow(g1 * g2, n as i64);
    let one = LogVal::from_f64(1.0);
    let m_one = LogVal::from_f64(-1.0);

    let a11 = LogVal::from_f64(l11 * g1 * g1).mul(p1.add(m_one));
    let a12 = LogVal::from_f64(l12 * g1 * g2).mul(p12.add(m_one));
    let a22 = LogVal::from_f64(l22 * g2 * g2).mul(p2.add(m_one));

    let d1_sq = LogVal::from_f64(g2 * g2)
        .mul(a11)
        .add(LogVal::from_f64(2.0 * g1 * g2).mul(a12))
        .add(LogVal::from_f64(g1 * g1).mul(a22));
    let d2_sq = a11.add(LogVal::from_f64(2.0).mul(a12)).add(a22);

    // pairwise block: Q = K [ (g1^{2n}-1)(g2^{2n}-1)/((g1^2-1)(g2^2-1))
    //                        - ((g1 g2)^n - 1)^2/(g1 g2 - 1)^2 ]
    let kq = {
        let t = c1 * c2 * l1 * l2 * (g1 - g2);
        t * t * g1 * g1 * g2 * g2
    };
    let ta = p1
        .add(m_one)
        .mul(p2.add(m_one))
        .mul(LogVal::from_f64(1.0 / ((g1 * g1 - 1.0) * (g2 * g2 - 1.0))));
    let tb = p12.add(m_one).mul(p12.add(m_one)).mul(LogVal::from_f64(
        1.0 / ((g1 * g2 - 1.0) * (g1 * g2 - 1.0)),
    ));
    let q = LogVal::from_f64(kq).mul(ta.add(tb.neg()));

    let det = one.add(d1_sq).add(d2_sq).add(q);
    let num_u1 = one.add(d2_sq);
    let num_u2 = one.add(d1_sq);

    // numerator of the V-prediction error at step n+1:
    // a^2 + b^2 + [g2^n g1^n] L_n^(2) [g2^n g1^n]^T  (closed form of
    // ||a D2 - b D1||^2 with (a, b) at index n+1)
    let g1n = LogVal::pow(g1, n as i64);
    let g2n = LogVal::pow(g2, n as i64);
    let p1n1 = LogVal::pow(g1, n as i64 + 1);
    let p2n1 = LogVal::pow(g2, n as i64 + 1);
    let an = p1n1
        .mul(LogVal::from_f64(-c1 * g2))
        .add(p2n1.mul(LogVal::from_f64(-c2 * g1)));
    let bn = p1n1
        .mul(LogVal::from_f64(c1))
        .add(p2n1.mul(LogVal::from_f64(c2)));
    let cross_norm = g2n
        .mul(g2n)
        .mul(a11)
        .add(LogVal::from_f64(2.0).mul(g1n).mul(g2n).mul(a12))
        .add(g1n.mul(g1n).mul(a22));
    let num_v = an.mul(an).add(bn.mul(bn)).add(cross_norm);

    for v in [det, num_u1, num_u2, num_v] {
        if v.sign <= 0.0 {
            return Err(FeedcapError::NonFinite("sign/log closed forms"));
        }
    }
    Ok(LogQuantities {
        log_det: det.ln,
        log_num_u1: num_u1.ln,
        log_num_u2: num_u2.ln,
        log_num_v_next: num_v.ln,
    })
}

/// Sign + log-magnitude value for products and sums far outside f64 range.
#[derive(Debug, Clone, Copy)]
struct LogVal {
    sign: f64, // -1.0, 0.0, or 1.0
    ln: f64,   // ln |value|; -inf for zero
}

impl LogVal {
    fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self { sign: 0.0, ln: f64::NEG_INFINITY }
        } else {
            Self { sign: x.signum(), ln: x.abs().ln() }
        }
    }

    /// `x^k` for integer k (x real, possibly negative).
    fn pow(x: f64, k: i64) -> Self {
        let sign = if x < 0.0 && k % 2 != 0 { -1.0 } else { 1.0 };
        Self { sign, ln: k as f64 * x.abs().ln() }
    }

    fn neg(self) -> Self {
        Self { sign: -self.sign, ln: self.ln }
    }

    fn mul(self, o: Self) -> Self {
        if self.sign == 0.0 || o.sign == 0.0 {
            return Self::from_f64(0.0);
        }
        Self { sign: self.sign * o.sign, ln: self.ln + o.ln }
    }

    fn add(self, o: Self) -> Self {
        if self.sign == 0.0 {
            return o;
        }
        if o.sign == 0.0 {
            return self;
        }
        let m = self.ln.max(o.ln);
        let s = self.sign * (self.ln - m).exp() + o.sign * (o.ln - m).exp();
        if s == 0.0 {
            return Self::from_f64(0.0);
        }
        Self { sign: s.signum(), ln: m + s.abs().ln() }
    }
}

// ---------------------------------------------------------------------------
// Rank-2 Gram recursion
// ---------------------------------------------------------------------------

/// Running Gram matrix `G = D^T D` and correlation vector `s = D^T Ytil` in
/// a rescaled frame: stored values equal the true ones times
/// `exp(-log_scale)`, so determinants stay exact in log form while every
/// stored number stays inside f64 range.
#[derive(Debug, Clone)]
pub struct GramState {
    g11: f64,
    g12: f64,
    g22: f64,
    s1: f64,
    s2: f64,
    n: usize,
    log_scale: f64,
    rescale_threshold: f64,
}

impl Default for GramState {
    fn default() -> Self {
        Self::new()
    }
}

impl GramState {
    pub fn new() -> Self {
        Self::with_rescale_threshold(1e100)
    }

    /// Lowered thresholds force frequent rescaling; used to check that
    /// rescaled and plain runs agree.
    pub fn with_rescale_threshold(threshold: f64) -> Self {
        GramState {
            g11: 0.0,
            g12: 0.0,
            g22: 0.0,
            s1: 0.0,
            s2: 0.0,
            n: 0,
            log_scale: 0.0,
            rescale_threshold: threshold,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Absorb one whitened observation `y` with gain vector `d`.
    pub fn update(&mut self, d: [f64; 2], y: f64) -> Result<(), FeedcapError> {
        if !(d[0].is_finite() && d[1].is_finite() && y.is_finite()) {
            return Err(FeedcapError::NonFinite("gram update input"));
        }
        let half = (-self.log_scale / 2.0).exp();
        let d1 = d[0] * half;
        let d2 = d[1] * half;
        let ys = y * half;
        self.g11 += d1 * d1;
        self.g12 += d1 * d2;
        self.g22 += d2 * d2;
        self.s1 += d1 * ys;
        self.s2 += d2 * ys;
        self.n += 1;
        let m = self
            .g11
            .max(self.g22)
            .max(self.g12.abs())
            .max(self.s1.abs())
            .max(self.s2.abs());
        if m > self.rescale_threshold {
            let inv = 1.0 / m;
            self.g11 *= inv;
            self.g12 *= inv;
            self.g22 *= inv;
            self.s1 *= inv;
            self.s2 *= inv;
            self.log_scale += m.ln();
        }
        Ok(())
    }

    /// Posterior mean and covariance of `(U_1, U_2)` given the absorbed
    /// observations: mean `(I_2 + G)^{-1} s`, covariance `(I_2 + G)^{-1}`.
    pub fn posterior(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let w = (-self.log_scale).exp();
        let a11 = w + self.g11;
        let a22 = w + self.g22;
        let a12 = self.g12;
        let det = a11 * a22 - a12 * a12;
        let mean = [
            (a22 * self.s1 - a12 * self.s2) / det,
            (a11 * self.s2 - a12 * self.s1) / det,
        ];
        let cov = [
            [w * a22 / det, -w * a12 / det],
            [-w * a12 / det, w * a11 / det],
        ];
        (mean, cov)
    }

    /// `ln |I_2 + G|`, exact through the tracked exponent.
    pub fn log_det(&self) -> f64 {
        let w = (-self.log_scale).exp();
        let det = (w + self.g11) * (w + self.g22) - self.g12 * self.g12;
        2.0 * self.log_scale + det.ln()
    }

    /// Posterior variance (MMSE) of one component.
    pub fn mmse(&self, which: MessageIndex) -> f64 {
        let (_, cov) = self.posterior();
        match which {
            MessageIndex::U1 => cov[0][0],
            MessageIndex::U2 => cov[1][1],
        }
    }
}

/// Rank-1 counterpart for the first-order scheme: scalar gram `g = sum d^2`
/// and correlation `s = sum d y`; posterior mean `s/(1+g)`, MMSE `1/(1+g)`.
#[derive(Debug, Clone, Default)]
pub struct ScalarGram {
    g: f64,
    s: f64,
    n: usize,
    log_scale: f64,
}

impl ScalarGram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, d: f64, y: f64) -> Result<(), FeedcapError> {
        if !(d.is_finite() && y.is_finite()) {
            return Err(FeedcapError::NonFinite("gram update input"));
        }
        let half = (-self.log_scale / 2.0).exp();
        let ds = d * half;
        self.g += ds * ds;
        self.s += ds * y * half;
        self.n += 1;
        if self.g > 1e100 {
            let m = self.g;
            self.g = 1.0;
            self.s /= m;
            self.log_scale += m.ln();
        }
        Ok(())
    }

    pub fn posterior_mean(&self) -> f64 {
        let w = (-self.log_scale).exp();
        self.s / (w + self.g)
    }

    pub fn mmse(&self) -> f64 {
        let w = (-self.log_scale).exp();
        w / (w + self.g)
    }

    pub fn log_mmse(&self) -> f64 {
        let w = (-self.log_scale).exp();
        -self.log_scale - (w + self.g).ln()
    }
}
