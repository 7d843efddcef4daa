//! Constrained rate maximization for the first- and second-order schemes.
//!
//! The first-order scheme attains `max log |gamma|` subject to
//! `(gamma^2 - 1) / L^2(1/gamma) = P`; in the substitution `x = 1/gamma`
//! this is a polynomial root problem of degree `2p + 2`. The second-order
//! scheme attains `max 2 log min(|gamma_1|, |gamma_2|)` subject to a
//! power map over root pairs, searched over three families: conjugate
//! pairs, real distinct pairs, and repeated roots.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::FeedcapError;
use crate::noise::ArModel;
use crate::par;
use crate::params::{try_collapse_real, Sk2Params};

/// Separation below which the distinct-root power formula is refused.
pub const NEAR_REPEATED_GUARD: f64 = 1e-6;

/// Search controls; defaults match the documented solver configuration.
#[derive(Debug, Clone)]
pub struct SearchOpts {
    /// Points on the theta grid over (0, pi) for conjugate pairs.
    pub grid_theta: usize,
    /// Points per axis of the real-pair coarse grid.
    pub grid_real: usize,
    /// Bisection tolerance on root magnitudes.
    pub tol: f64,
    /// Upper bound of the search box; default `(1 + P)^{1/2} + 2`.
    pub gamma_max: Option<f64>,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts { grid_theta: 1000, grid_real: 200, tol: 1e-10, gamma_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Sk1,
    Sk2CaseA,
    Sk2CaseB,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Sk1 => write!(f, "sk1"),
            Scheme::Sk2CaseA => write!(f, "sk2_case_a"),
            Scheme::Sk2CaseB => write!(f, "sk2_case_b"),
        }
    }
}

/// The optimizing parameters attached to a solved rate.
#[derive(Debug, Clone)]
pub enum OptimalParams {
    Sk1 { gamma: f64 },
    Sk2(Sk2Params),
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Width of the final search bracket or refinement step; 0 when the
    /// solution came from a machine-precision root polish.
    pub bracket_width: f64,
    /// The optimizer ran into the search box edge.
    pub boundary_hit: bool,
    /// The returned power is strictly below the budget (not a boundary
    /// solve); flagged because the optimum is expected on the boundary.
    pub interior: bool,
}

#[derive(Debug, Clone)]
pub struct RateResult {
    pub rate_nats: f64,
    pub scheme: Scheme,
    pub params: OptimalParams,
    pub power_at_solution: f64,
    pub diagnostics: Diagnostics,
}

impl RateResult {
    pub fn rate_bits(&self) -> f64 {
        self.rate_nats / std::f64::consts::LN_2
    }
}

// ---------------------------------------------------------------------------
// First-order scheme
// ---------------------------------------------------------------------------

/// Power consumed by the first-order scheme at root `gamma`:
/// `(gamma^2 - 1) / L^2(1/gamma)`.
pub fn sk1_power(model: &ArModel, gamma: f64) -> Result<f64, FeedcapError> {
    if !gamma.is_finite() || gamma.abs() <= 1.0 {
        return Err(FeedcapError::InvalidRoot(format!("require |gamma| > 1, got {gamma}")));
    }
    let l = model.eval_l_real(1.0 / gamma);
    // cannot vanish: |beta_k / gamma| < 1 keeps every factor away from 0
    debug_assert!(l != 0.0);
    Ok((gamma * gamma - 1.0) / (l * l))
}

/// Maximal rate of the first-order scheme: with `x = 1/gamma`, the real
/// roots of `P x^2 L^2(x) - (1 - x^2) = 0` inside the unit interval are
/// found (companion matrix plus a sign-scan backstop) and the smallest
/// `|x|` wins; the rate is `-log |x_min|`.
pub fn sk1_rate(model: &ArModel, power: f64) -> Result<RateResult, FeedcapError> {
    if !power.is_finite() || power <= 0.0 {
        return Err(FeedcapError::NonPositivePower(power));
    }
    // q(x) = P x^2 L(x)^2 + x^2 - 1
    let phi = model.filter_coeffs();
    let lsq = poly_mul(phi, phi);
    let mut q = vec![0.0; lsq.len() + 2];
    q[0] = -1.0;
    q[2] += 1.0;
    for (i, c) in lsq.iter().enumerate() {
        q[i + 2] += power * c;
    }
    let roots = real_roots_in_open_unit_interval(&q);
    let x_min = roots
        .iter()
        .copied()
        .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .ok_or_else(|| {
            FeedcapError::Infeasible("no real root of the power polynomial in (0,1)".into())
        })?;
    let gamma = 1.0 / x_min;
    let rate_nats = gamma.abs().ln();
    let power_at_solution = sk1_power(model, gamma)?;
    Ok(RateResult {
        rate_nats,
        scheme: Scheme::Sk1,
        params: OptimalParams::Sk1 { gamma },
        power_at_solution,
        diagnostics: Diagnostics {
            iterations: roots.len(),
            bracket_width: 0.0,
            boundary_hit: false,
            interior: (power_at_solution - power).abs() > 1e-6 * power,
        },
    })
}

/// Closed-form AR(1) feedback capacity: `-log x_0` with `x_0` the unique
/// positive root of `P x^2 = (1 - x^2) / (1 + |beta_1| x)^2`.
pub fn ar1_capacity(beta1: f64, power: f64) -> Result<f64, FeedcapError> {
    if !power.is_finite() || power <= 0.0 {
        return Err(FeedcapError::NonPositivePower(power));
    }
    if !beta1.is_finite() || beta1.abs() >= 1.0 {
        return Err(FeedcapError::InvalidBeta { index: 0, value: beta1 });
    }
    let b = beta1.abs();
    let h = |x: f64| power * x * x * (1.0 + b * x).powi(2) - (1.0 - x * x);
    // uniqueness: count sign changes on a fine grid
    let grid = 4096;
    let mut crossings = 0;
    let mut prev = h(0.0);
    for k in 1..=grid {
        let cur = h(k as f64 / grid as f64);
        if prev < 0.0 && cur >= 0.0 || prev >= 0.0 && cur < 0.0 {
            crossings += 1;
        }
        prev = cur;
    }
    debug_assert_eq!(crossings, 1, "positive root is not unique");
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(-(0.5 * (lo + hi)).ln())
}

// ---------------------------------------------------------------------------
// Second-order power maps
// ---------------------------------------------------------------------------

/// Power consumed by a distinct root pair, in the algebraically stable
/// factored form: with `u = L(1/g1)/sqrt(g1^2-1)`, `v = L(1/g2)/sqrt(g2^2-1)`
/// and `w = sqrt(g1^2-1) sqrt(g2^2-1) / (g1 g2 - 1)`,
///
/// `f = (g1^2-1)(g2^2-1)(g1 g2-1)^2 / (L1^2 L2^2) *
///      [ ((u-v)/(g1-g2))^2 + 2uv / ((g1 g2 - 1)^2 (1 + w)) ]`
///
/// which equals the quotient form of [`sk2_power_distinct_ratio`] but
/// stays accurate arbitrarily close to the diagonal (the `1 - w`
/// cancellation is factored out exactly).
pub fn sk2_power_distinct(
    model: &ArModel,
    g1: Complex64,
    g2: Complex64,
) -> Result<f64, FeedcapError> {
    validate_pair(g1, g2)?;
    let one = Complex64::new(1.0, 0.0);
    let l1 = model.eval_l(1.0 / g1);
    let l2 = model.eval_l(1.0 / g2);
    let s1 = (g1 * g1 - one).sqrt();
    let s2 = (g2 * g2 - one).sqrt();
    let u = l1 / s1;
    let v = l2 / s2;
    let q = (u - v) / (g1 - g2);
    let w = s1 * s2 / (g1 * g2 - one);
    let core = q * q + 2.0 * u * v / ((g1 * g2 - one) * (g1 * g2 - one) * (one + w));
    let f = (g1 * g1 - one) * (g2 * g2 - one) * (g1 * g2 - one) * (g1 * g2 - one)
        / (l1 * l1 * l2 * l2)
        * core;
    try_collapse_real(f)
}

/// The quotient form of the distinct-pair power, straight from the
/// definition of `Delta` and the `L_ij` matrix. Kept as an independent
/// algebraic route; loses accuracy near the diagonal.
pub fn sk2_power_distinct_ratio(
    model: &ArModel,
    g1: Complex64,
    g2: Complex64,
) -> Result<f64, FeedcapError> {
    validate_pair(g1, g2)?;
    let one = Complex64::new(1.0, 0.0);
    let d = g1 - g2;
    let c1 = one / (g1 * d);
    let c2 = -one / (g2 * d);
    let l1 = model.eval_l(1.0 / g1);
    let l2 = model.eval_l(1.0 / g2);
    let l11 = c1 * c1 * l1 * l1 / (g1 * g1 - one);
    let l22 = c2 * c2 * l2 * l2 / (g2 * g2 - one);
    let l12 = c1 * c2 * l1 * l2 / (g1 * g2 - one);
    let delta = d * d * (l11 * l22 - l12 * l12);
    let f = (l11 / (g2 * g2) + l22 / (g1 * g1) + 2.0 * l12 / (g1 * g2)) / delta;
    try_collapse_real(f)
}

fn validate_pair(g1: Complex64, g2: Complex64) -> Result<(), FeedcapError> {
    if !(g1.re.is_finite() && g1.im.is_finite() && g2.re.is_finite() && g2.im.is_finite()) {
        return Err(FeedcapError::InvalidRoot("non-finite root".into()));
    }
    if g1.norm() <= 1.0 || g2.norm() <= 1.0 {
        return Err(FeedcapError::InvalidRoot(format!(
            "require |gamma| > 1, got ({g1}, {g2})"
        )));
    }
    let sep = (g1 - g2).norm();
    if sep < NEAR_REPEATED_GUARD {
        return Err(FeedcapError::NearRepeatedRoots { sep });
    }
    Ok(())
}

/// Power consumed by a repeated real root:
/// `(g^2-1)^3 L'^2 / (g^4 L^4) + 2 (g^2-1)^2 L' / (g L^3) + (g^4-1)/L^2`,
/// all evaluated at `1/g`. This is the continuous limit of the
/// distinct-pair power as the roots coincide.
pub fn sk2_power_repeated(model: &ArModel, gamma: f64) -> Result<f64, FeedcapError> {
    if !gamma.is_finite() || gamma.abs() <= 1.0 {
        return Err(FeedcapError::InvalidRoot(format!("require |gamma| > 1, got {gamma}")));
    }
    let l = model.eval_l_real(1.0 / gamma);
    let lp = model.eval_l_prime_real(1.0 / gamma);
    let g2m = gamma * gamma - 1.0;
    Ok(g2m.powi(3) * lp * lp / (gamma.powi(4) * l.powi(4))
        + 2.0 * g2m * g2m * lp / (gamma * l.powi(3))
        + (gamma.powi(4) - 1.0) / (l * l))
}

/// Power of the scheme parameterized by `params`, dispatching to the
/// matching formula.
pub fn sk2_power(model: &ArModel, params: &Sk2Params) -> Result<f64, FeedcapError> {
    let (g1, g2) = params.roots();
    match params.kind() {
        crate::params::RootKind::Repeated => sk2_power_repeated(model, g1.re),
        _ => sk2_power_distinct(model, g1, g2),
    }
}

// ---------------------------------------------------------------------------
// Second-order rate search
// ---------------------------------------------------------------------------

/// Maximal rate of the second-order scheme under power budget `power`:
/// best of (i) conjugate pairs, bisecting the max feasible modulus along
/// each ray of a theta grid and refining the best ray, (ii) real distinct
/// pairs on a coarse sign-aware grid refined by shrinking coordinate
/// descent, (iii) repeated roots bisected per sign.
pub fn sk2_rate(
    model: &ArModel,
    power: f64,
    opts: &SearchOpts,
) -> Result<RateResult, FeedcapError> {
    if !power.is_finite() || power <= 0.0 {
        return Err(FeedcapError::NonPositivePower(power));
    }
    let gmax = opts.gamma_max.unwrap_or((1.0 + power).sqrt() + 2.0);

    let conj = search_conjugate(model, power, gmax, opts);
    let real = search_real_pairs(model, power, gmax, opts);
    let rep = search_repeated(model, power, gmax, opts.tol);

    let mut best: Option<RateResult> = None;
    for cand in [conj, real, rep].into_iter().flatten() {
        best = Some(match best {
            None => cand,
            Some(cur) => {
                if cand.rate_nats > cur.rate_nats {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    best.ok_or_else(|| {
        FeedcapError::Infeasible(format!(
            "power budget {power} admits no root pair in the search box (gamma_max = {gmax})"
        ))
    })
}

/// Combined bound: the better of the first- and second-order schemes,
/// winner tagged in `scheme`.
pub fn combined_rate(
    model: &ArModel,
    power: f64,
    opts: &SearchOpts,
) -> Result<RateResult, FeedcapError> {
    let r1 = sk1_rate(model, power)?;
    let r2 = sk2_rate(model, power, opts)?;
    Ok(if r2.rate_nats > r1.rate_nats { r2 } else { r1 })
}

fn search_conjugate(
    model: &ArModel,
    power: f64,
    gmax: f64,
    opts: &SearchOpts,
) -> Option<RateResult> {
    let n = opts.grid_theta.max(2);
    let ray = |theta: f64| -> Option<(f64, bool, f64)> {
        max_feasible_modulus(
            |r| {
                let g1 = Complex64::from_polar(r, theta);
                sk2_power_distinct(model, g1, g1.conj())
            },
            power,
            gmax,
            opts.tol,
        )
    };
    let grid = par::map_indexed(n, |j| {
        let theta = PI * (j + 1) as f64 / (n + 1) as f64;
        (theta, ray(theta))
    });
    let (mut best_theta, mut best) = (0.0, None::<(f64, bool, f64)>);
    for (theta, res) in grid {
        if let Some((r, hit, width)) = res {
            if best.is_none_or(|(br, ..)| r > br) {
                best = Some((r, hit, width));
                best_theta = theta;
            }
        }
    }
    let (mut r_best, mut hit, mut width) = best?;
    // refine theta by shrinking three-point search around the best ray
    let mut span = PI / (n + 1) as f64;
    let mut iterations = 0;
    while span > 1e-6 && iterations < 500 {
        let mut moved = false;
        for theta in [best_theta - 0.5 * span, best_theta + 0.5 * span] {
            if theta <= 1e-9 || theta >= PI - 1e-9 {
                continue;
            }
            iterations += 1;
            if let Some((r, h, w)) = ray(theta) {
                if r > r_best {
                    r_best = r;
                    hit = h;
                    width = w;
                    best_theta = theta;
                    moved = true;
                }
            }
        }
        if !moved {
            span *= 0.5;
        }
    }
    let params = Sk2Params::conjugate(r_best, best_theta).ok()?;
    Some(finish_sk2(model, params, Scheme::Sk2CaseA, power, iterations, hit, width))
}

fn search_real_pairs(
    model: &ArModel,
    power: f64,
    gmax: f64,
    opts: &SearchOpts,
) -> Option<RateResult> {
    let n = opts.grid_real.max(2);
    let mag = |i: usize| 1.0 + (i + 1) as f64 * (gmax - 1.0) / n as f64;
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    // parallel over (sign pattern, row); each task scans one row of the grid
    let rows = par::map_indexed(4 * n, |t| {
        let (s, i) = (t / n, t % n);
        let (s1, s2) = signs[s];
        let g1 = s1 * mag(i);
        let mut row_best: Option<(f64, f64, f64)> = None; // (rate, g1, g2)
        for j in 0..n {
            let g2 = s2 * mag(j);
            if let Ok(p) = sk2_power_distinct(
                model,
                Complex64::new(g1, 0.0),
                Complex64::new(g2, 0.0),
            ) {
                if p <= power {
                    let rate = 2.0 * g1.abs().min(g2.abs()).ln();
                    if row_best.is_none_or(|(r, ..)| rate > r) {
                        row_best = Some((rate, g1, g2));
                    }
                }
            }
        }
        row_best
    });
    // index-ordered reduction with lexicographic tie-break
    let mut best: Option<(f64, f64, f64)> = None;
    for cand in rows.into_iter().flatten() {
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let key = |c: &(f64, f64, f64)| {
                    (c.0, c.1.abs().min(c.2.abs()), c.1.abs().max(c.2.abs()), c.1, c.2)
                };
                if key(&cand).partial_cmp(&key(&cur)).unwrap() == std::cmp::Ordering::Greater {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    let (_, mut g1, mut g2) = best?;
    // coordinate descent with shrinking steps on the constrained objective
    let mut step = (gmax - 1.0) / n as f64;
    let mut rate = 2.0 * g1.abs().min(g2.abs()).ln();
    let mut iterations = 0;
    while step > 1e-7 && iterations < 400 {
        iterations += 1;
        let mut moved = false;
        for (d1, d2) in [
            (step, 0.0),
            (-step, 0.0),
            (0.0, step),
            (0.0, -step),
            (step, step),
            (-step, -step),
            (step, -step),
            (-step, step),
        ] {
            let (n1, n2) = (g1 + d1, g2 + d2);
            if n1.abs() <= 1.0 + 1e-9 || n2.abs() <= 1.0 + 1e-9 {
                continue;
            }
            if n1.abs() > gmax || n2.abs() > gmax {
                continue;
            }
            let Ok(p) =
                sk2_power_distinct(model, Complex64::new(n1, 0.0), Complex64::new(n2, 0.0))
            else {
                continue;
            };
            if p <= power {
                let r = 2.0 * n1.abs().min(n2.abs()).ln();
                if r > rate + 1e-15 {
                    rate = r;
                    g1 = n1;
                    g2 = n2;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let params = Sk2Params::real_distinct(g1, g2).ok()?;
    let hit = g1.abs() >= gmax - 1e-9 || g2.abs() >= gmax - 1e-9;
    Some(finish_sk2(model, params, Scheme::Sk2CaseA, power, iterations, hit, step))
}

fn search_repeated(
    model: &ArModel,
    power: f64,
    gmax: f64,
    tol: f64,
) -> Option<RateResult> {
    let mut best: Option<(f64, bool, f64)> = None;
    for sign in [1.0, -1.0] {
        if let Some((m, hit, width)) =
            max_feasible_modulus(|r| sk2_power_repeated(model, sign * r), power, gmax, tol)
        {
            if best.is_none_or(|(bm, ..)| m > bm) {
                best = Some((sign * m, hit, width));
            }
        }
    }
    let (g, hit, width) = best?;
    let params = Sk2Params::repeated(g).ok()?;
    Some(finish_sk2(model, params, Scheme::Sk2CaseB, power, 0, hit, width))
}

/// Largest modulus in (1, gmax] whose power stays within budget, assuming
/// the power map is increasing in the modulus beyond the feasibility onset.
/// Returns the modulus, whether the search box edge was the binding
/// constraint, and the final bracket width.
fn max_feasible_modulus(
    power_at: impl Fn(f64) -> Result<f64, FeedcapError>,
    budget: f64,
    gmax: f64,
    tol: f64,
) -> Option<(f64, bool, f64)> {
    let mut lo = 1.0 + 1e-9;
    match power_at(lo) {
        Ok(p) if p <= budget => {}
        _ => return None,
    }
    let mut hi = gmax;
    match power_at(hi) {
        Ok(p) if p <= budget => return Some((gmax, true, 0.0)),
        Ok(_) => {}
        Err(_) => return None,
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match power_at(mid) {
            Ok(p) if p <= budget => lo = mid,
            _ => hi = mid,
        }
    }
    Some((lo, false, hi - lo))
}

fn finish_sk2(
    model: &ArModel,
    params: Sk2Params,
    scheme: Scheme,
    budget: f64,
    iterations: usize,
    boundary_hit: bool,
    bracket_width: f64,
) -> RateResult {
    let power_at_solution = sk2_power(model, &params).unwrap_or(f64::NAN);
    RateResult {
        rate_nats: params.rate_nats(),
        scheme,
        params: OptimalParams::Sk2(params),
        power_at_solution,
        diagnostics: Diagnostics {
            iterations,
            bracket_width,
            boundary_hit,
            interior: boundary_hit || (budget - power_at_solution) > 1e-6 * budget,
        },
    }
}

// ---------------------------------------------------------------------------
// Repeated-root limit identity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EpsCheck {
    pub eps: f64,
    pub f_value: f64,
    pub rel_err: f64,
}

/// Numerical record of the diagonal limit of the distinct-pair power.
#[derive(Debug, Clone)]
pub struct LimitIdentityReport {
    /// `g(gamma, gamma)`; vanishes identically.
    pub g_at_diagonal: f64,
    /// Central finite-difference estimate of `dg/dgamma_1` on the
    /// diagonal; vanishes analytically.
    pub g_prime_fd: f64,
    /// The repeated-root power the limit must reach.
    pub repeated_power: f64,
    /// Distinct-pair power at each offset, with its raw relative error.
    pub per_eps: Vec<EpsCheck>,
    /// Extrapolation of `f(gamma + eps, gamma)` to `eps = 0` over all
    /// offsets (the convergence is first order in eps, so raw errors
    /// shrink only linearly; extrapolation removes the leading terms).
    pub richardson: f64,
    pub richardson_rel_err: f64,
}

/// Cross-check of the diagonal limit: evaluates `g` and its slope on the
/// diagonal, the distinct-root power at each offset in `eps_seq`, and the
/// extrapolated limit against the repeated-root closed form.
pub fn limit_identity_check(
    model: &ArModel,
    gamma: f64,
    eps_seq: &[f64],
) -> Result<LimitIdentityReport, FeedcapError> {
    if !gamma.is_finite() || gamma.abs() <= 1.0 {
        return Err(FeedcapError::InvalidRoot(format!("require |gamma| > 1, got {gamma}")));
    }
    let g_form = |a: f64, b: f64| -> f64 {
        let la = model.eval_l_real(1.0 / a);
        let lb = model.eval_l_real(1.0 / b);
        la * la / (a * a - 1.0) + lb * lb / (b * b - 1.0) - 2.0 * la * lb / (a * b - 1.0)
    };
    let g_at_diagonal = g_form(gamma, gamma);
    let h = 3e-6 * gamma.abs();
    let g_prime_fd = (g_form(gamma + h, gamma) - g_form(gamma - h, gamma)) / (2.0 * h);
    let repeated_power = sk2_power_repeated(model, gamma)?;

    let mut per_eps = Vec::with_capacity(eps_seq.len());
    for &eps in eps_seq {
        let f_value = sk2_power_distinct(
            model,
            Complex64::new(gamma + eps, 0.0),
            Complex64::new(gamma, 0.0),
        )?;
        per_eps.push(EpsCheck {
            eps,
            f_value,
            rel_err: (f_value - repeated_power).abs() / repeated_power.abs(),
        });
    }
    let hs: Vec<f64> = per_eps.iter().map(|e| e.eps).collect();
    let fs: Vec<f64> = per_eps.iter().map(|e| e.f_value).collect();
    let richardson = neville_to_zero(&hs, &fs);
    let richardson_rel_err = (richardson - repeated_power).abs() / repeated_power.abs();
    Ok(LimitIdentityReport {
        g_at_diagonal,
        g_prime_fd,
        repeated_power,
        per_eps,
        richardson,
        richardson_rel_err,
    })
}

/// Polynomial extrapolation of samples `(h_i, f_i)` to `h = 0` (Neville).
pub fn neville_to_zero(hs: &[f64], fs: &[f64]) -> f64 {
    assert_eq!(hs.len(), fs.len());
    assert!(!hs.is_empty());
    let n = hs.len();
    let mut cur = fs.to_vec();
    for lvl in 1..n {
        for i in 0..n - lvl {
            cur[i] = (hs[i] * cur[i + 1] - hs[i + lvl] * cur[i]) / (hs[i] - hs[i + lvl]);
        }
    }
    cur[0]
}

// ---------------------------------------------------------------------------
// Polynomial helpers
// ---------------------------------------------------------------------------

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ck)| i as f64 * ck).collect()
}

/// Real roots of `q` with `0 < |x| < 1`: companion-matrix eigenvalues
/// polished by Newton, merged with a dense sign-scan bisection backstop.
fn real_roots_in_open_unit_interval(q: &[f64]) -> Vec<f64> {
    let dq = poly_deriv(q);
    let scale: f64 = q.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = Vec::new();
    let mut push = |x: f64| {
        if x.abs() > 1e-12
            && x.abs() < 1.0 - 1e-12
            && !roots.iter().any(|r| (r - x).abs() < 1e-9)
        {
            roots.push(x);
        }
    };

    // companion-matrix candidates
    let mut monic = q.to_vec();
    while monic.len() > 1 && monic.last().unwrap().abs() < 1e-14 * scale {
        monic.pop();
    }
    if monic.len() > 1 {
        let d = monic.len() - 1;
        let lead = monic[d];
        let comp = DMatrix::<f64>::from_fn(d, d, |i, j| {
            if j == d - 1 {
                -monic[i] / lead
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        for ev in comp.complex_eigenvalues().iter() {
            if ev.im.abs() < 1e-6 * (1.0 + ev.re.abs()) {
                if let Some(x) = polish_newton(q, &dq, ev.re, scale) {
                    push(x);
                }
            }
        }
    }

    // sign-scan backstop: a crossing in (0,1) and (-1,0) always exists
    let grid = 20_000;
    let mut prev_x = -1.0 + 1e-12;
    let mut prev_f = poly_eval(q, prev_x);
    for k in 1..=grid {
        let x = -1.0 + 2.0 * k as f64 / grid as f64 - 1e-12;
        let f = poly_eval(q, x);
        if prev_f == 0.0 {
            push(prev_x);
        } else if prev_f * f < 0.0 {
            push(bisect_poly(q, prev_x, x));
        }
        prev_x = x;
        prev_f = f;
    }
    roots
}

fn polish_newton(q: &[f64], dq: &[f64], x0: f64, scale: f64) -> Option<f64> {
    let mut x = x0;
    for _ in 0..60 {
        let f = poly_eval(q, x);
        let d = poly_eval(dq, x);
        if d == 0.0 {
            break;
        }
        let nx = x - f / d;
        if !nx.is_finite() {
            return None;
        }
        if (nx - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = nx;
            break;
        }
        x = nx;
    }
    (poly_eval(q, x).abs() <= 1e-9 * scale.max(1.0)).then_some(x)
}

fn bisect_poly(q: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = poly_eval(q, lo);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = poly_eval(q, mid);
        if (flo <= 0.0) == (fm <= 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
