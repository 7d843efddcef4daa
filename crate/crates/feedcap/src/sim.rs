//! Monte Carlo implementation of the feedback coding schemes.
//!
//! Each trial draws the Gaussian message, a stationary noise path, and runs
//! the exact coding loop: the transmitter sends the receiver's current
//! prediction error of the message process, both sides reconstruct
//! `Y*_i = V_i + Z_i`, whiten it, and feed the rank-2 (or rank-1) Gram
//! recursion. The estimator conditions on whitened outputs from index p+1
//! onward, exactly the estimator whose finite-horizon error the closed
//! forms describe, so empirical statistics are compared against those
//! forms directly.
//!
//! Trials are independent streams derived from (seed, trial index);
//! aggregation walks trials in index order, so reports are bit-identical
//! regardless of worker count.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::FeedcapError;
use crate::estimation::{self, GramState, ScalarGram};
use crate::noise::ArModel;
use crate::par;
use crate::params::{RootKind, Sk2Params};
use crate::rng;

/// Statistical gates applied to a finished report: means within 3 standard
/// errors, MSE ratios within [0.8, 1.25] once at least this many trials
/// contribute.
pub const MSE_RATIO_MIN_TRIALS: u64 = 10_000;
pub const MSE_RATIO_BOUNDS: (f64, f64) = (0.8, 1.25);
pub const MEAN_SIGMA_GATE: f64 = 3.0;

/// Scheme selection for a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeParams {
    Sk1 { gamma: f64 },
    Sk2(Sk2Params),
}

impl SchemeParams {
    pub fn max_root_abs(&self) -> f64 {
        match self {
            SchemeParams::Sk1 { gamma } => gamma.abs(),
            SchemeParams::Sk2(p) => p.max_root_abs(),
        }
    }

    pub fn min_root_abs(&self) -> f64 {
        match self {
            SchemeParams::Sk1 { gamma } => gamma.abs(),
            SchemeParams::Sk2(p) => p.min_root_abs(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: ArModel,
    pub scheme: SchemeParams,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    /// Permit horizons past the linear-domain guard by running the Gram
    /// recursion in its rescaled frame. Raw channel values still bound the
    /// horizon at the larger log-domain guard.
    pub log_domain: bool,
}

impl SimConfig {
    /// Longest horizon the linear-domain bookkeeping supports: the 2x2
    /// determinant grows like `gamma_max^{4n}` and must stay inside f64
    /// range (`e^690` with margin).
    pub fn horizon_guard(&self) -> usize {
        let lg = self.scheme.max_root_abs().ln();
        (690.0 / (4.0 * lg)).floor() as usize
    }

    /// Guard for the log-domain path: raw per-step values (message process,
    /// whitened outputs) grow like `gamma_max^n`.
    pub fn horizon_guard_log(&self) -> usize {
        let lg = self.scheme.max_root_abs().ln();
        (690.0 / lg).floor() as usize
    }

    pub fn validate(&self) -> Result<(), FeedcapError> {
        if self.horizon == 0 {
            return Err(FeedcapError::EmptySample(0));
        }
        if self.trials == 0 {
            return Err(FeedcapError::Infeasible("trials must be >= 1".into()));
        }
        match &self.scheme {
            SchemeParams::Sk1 { gamma } => {
                if !gamma.is_finite() || gamma.abs() <= 1.0 {
                    return Err(FeedcapError::InvalidRoot(format!(
                        "require |gamma| > 1, got {gamma}"
                    )));
                }
            }
            SchemeParams::Sk2(p) => {
                let (_, b) = p.recursion();
                debug_assert!(b != 0.0);
            }
        }
        let n_max = if self.log_domain {
            self.horizon_guard_log()
        } else {
            self.horizon_guard()
        };
        if self.horizon > n_max {
            return Err(FeedcapError::HorizonGuard { horizon: self.horizon, n_max });
        }
        Ok(())
    }
}

/// Per-trial outcome: squared channel inputs and final squared estimation
/// errors of the message components.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub x_sq: Vec<f64>,
    pub sq_err_u1: f64,
    /// Absent for the rank-1 scheme.
    pub sq_err_u2: Option<f64>,
}

/// One simulated trial, deterministic in (config.seed, trial_index).
pub fn run_trial(config: &SimConfig, trial_index: u64) -> Result<TrialTrace, FeedcapError> {
    run_trial_impl(config, trial_index, false)
}

pub(crate) fn run_trial_impl(
    config: &SimConfig,
    trial_index: u64,
    zero_noise: bool,
) -> Result<TrialTrace, FeedcapError> {
    match &config.scheme {
        SchemeParams::Sk2(p) => sk2_trial(config, *p, trial_index, zero_noise),
        SchemeParams::Sk1 { gamma } => sk1_trial_inner(config, *gamma, trial_index, zero_noise),
    }
}

fn sk2_trial(
    config: &SimConfig,
    params: Sk2Params,
    trial_index: u64,
    zero_noise: bool,
) -> Result<TrialTrace, FeedcapError> {
    let model = &config.model;
    let p = model.order();
    let n = config.horizon;
    let phi = model.filter_coeffs();
    let mut rng = rng::trial_rng(config.seed, trial_index);
    let u1: f64 = rng.sample(StandardNormal);
    let u2: f64 = rng.sample(StandardNormal);
    let mut noise = model.sample_noise_with(n, &mut rng)?;
    if zero_noise {
        noise.samples.iter_mut().for_each(|z| *z = 0.0);
    }
    let dc = estimation::d_coeffs(model, &params, n)?;
    let (an, bn) = params.message_coeffs(n);

    let mut gram = GramState::new();
    let mut ystar = vec![0.0; n];
    let mut x_sq = vec![0.0; n];
    for i in 1..=n {
        // prediction of V_i from whitened outputs p+1..i-1 (none absorbed
        // yet => prior mean 0); the first two inputs carry the message raw
        let vhat = if i <= 2 {
            0.0
        } else {
            let (mean, _) = gram.posterior();
            an[i - 1] * mean[0] + bn[i - 1] * mean[1]
        };
        let v = an[i - 1] * u1 + bn[i - 1] * u2;
        let x = v - vhat;
        if !x.is_finite() {
            return Err(FeedcapError::NonFinite("channel input (horizon too long)"));
        }
        let y = x + noise.samples[i - 1];
        ystar[i - 1] = y + vhat;
        x_sq[i - 1] = x * x;
        if i > p {
            let ytil: f64 = (0..=p).map(|k| phi[k] * ystar[i - 1 - k]).sum();
            gram.update([dc.d1[i - 1], dc.d2[i - 1]], ytil)?;
        }
    }
    let (mean, _) = gram.posterior();
    Ok(TrialTrace {
        x_sq,
        sq_err_u1: (u1 - mean[0]).powi(2),
        sq_err_u2: Some((u2 - mean[1]).powi(2)),
    })
}

fn sk1_trial_inner(
    config: &SimConfig,
    gamma: f64,
    trial_index: u64,
    zero_noise: bool,
) -> Result<TrialTrace, FeedcapError> {
    let model = &config.model;
    let p = model.order();
    let n = config.horizon;
    let phi = model.filter_coeffs();
    let l = model.eval_l_real(1.0 / gamma);
    let mut rng = rng::trial_rng(config.seed, trial_index);
    let u: f64 = rng.sample(StandardNormal);
    let mut noise = model.sample_noise_with(n, &mut rng)?;
    if zero_noise {
        noise.samples.iter_mut().for_each(|z| *z = 0.0);
    }

    let mut gram = ScalarGram::new();
    let mut ystar = vec![0.0; n];
    let mut x_sq = vec![0.0; n];
    let mut gpow = 1.0; // gamma^{i-1}
    for i in 1..=n {
        if i > 1 {
            gpow *= gamma;
        }
        let uhat = if i == 1 { 0.0 } else { gram.posterior_mean() };
        let vhat = if i == 1 { 0.0 } else { gpow * uhat };
        let x = gpow * u - vhat;
        if !x.is_finite() {
            return Err(FeedcapError::NonFinite("channel input (horizon too long)"));
        }
        let y = x + noise.samples[i - 1];
        ystar[i - 1] = y + vhat;
        x_sq[i - 1] = x * x;
        if i > p {
            let ytil: f64 = (0..=p).map(|k| phi[k] * ystar[i - 1 - k]).sum();
            gram.update(gpow * l, ytil)?;
        }
    }
    Ok(TrialTrace {
        x_sq,
        sq_err_u1: (u - gram.posterior_mean()).powi(2),
        sq_err_u2: None,
    })
}

// ---------------------------------------------------------------------------
// Aggregated report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepStat {
    pub step: usize,
    pub mean_x_sq: f64,
    pub se_x_sq: f64,
    pub theory_x_sq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub mse_u1: f64,
    pub theory_mse_u1: f64,
    pub ratio_u1: f64,
    pub mse_u2: Option<f64>,
    pub theory_mse_u2: Option<f64>,
    pub ratio_u2: Option<f64>,
    /// Empirical decay exponent `-(1/2n) ln MSE` per component.
    pub exponent_u1: f64,
    pub exponent_u2: Option<f64>,
    /// Exponent of the finite-horizon theory value at the same n.
    pub theory_exponent_u1: f64,
    /// Asymptotic target `ln min |gamma_i|`.
    pub exponent_target: f64,
    /// Average empirical power over all steps.
    pub head_power_mean: f64,
    /// Average over the last two thirds of the horizon.
    pub tail_power_mean: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Record of the scheme parameters with fixed field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub kind: String,
    pub gamma1_re: f64,
    pub gamma1_im: f64,
    pub gamma2_re: f64,
    pub gamma2_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub model: ModelRecord,
    pub params: ParamsRecord,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    pub per_step: Vec<StepStat>,
    pub summary: Summary,
}

/// Run all trials and aggregate against the closed-form theory curves.
pub fn simulate(config: &SimConfig) -> Result<SimReport, FeedcapError> {
    config.validate()?;
    let n = config.horizon;
    let trials = config.trials as usize;
    let traces = par::map_indexed(trials, |t| run_trial(config, t as u64));
    let mut collected = Vec::with_capacity(trials);
    for t in traces {
        collected.push(t?);
    }

    // fixed-order reduction over trials
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut err1_sum = 0.0f64;
    let mut err2_sum = 0.0f64;
    for tr in &collected {
        for i in 0..n {
            sum[i] += tr.x_sq[i];
            sum_sq[i] += tr.x_sq[i] * tr.x_sq[i];
        }
        err1_sum += tr.sq_err_u1;
        err2_sum += tr.sq_err_u2.unwrap_or(0.0);
    }
    let tf = trials as f64;
    // statistical gates only apply in the linear-domain regime; past it the
    // trials themselves sit beyond f64 precision (the scheme must resolve
    // the message to gamma^-n) and only the theory curves remain exact
    let gated = n <= config.horizon_guard();
    let theory = theory_curves(config)?;
    let per_step: Vec<StepStat> = (0..n)
        .map(|i| {
            let mean = sum[i] / tf;
            let var = (sum_sq[i] / tf - mean * mean).max(0.0);
            let se = if trials > 1 { (var / (tf - 1.0)).sqrt() } else { 0.0 };
            StepStat { step: i + 1, mean_x_sq: mean, se_x_sq: se, theory_x_sq: theory.x_sq[i] }
        })
        .collect();

    let p = config.model.order();
    let mse_u1 = err1_sum / tf;
    let theory_mse_u1 = theory.log_mse_u1.exp();
    let theory_mse_u2 = theory.log_mse_u2.map(|l| l.exp());
    let mse_u2 = match &config.scheme {
        SchemeParams::Sk1 { .. } => None,
        SchemeParams::Sk2(_) => Some(err2_sum / tf),
    };

    let exponent = |mse: f64| -mse.ln() / (2.0 * n as f64);
    let mut checks = Vec::new();

    if gated {
        // per-step power against theory, 3 SE, for steps with a usable window
        let mut worst_z: f64 = 0.0;
        let mut violations = 0usize;
        for s in per_step.iter().skip(p + 1) {
            if s.se_x_sq > 0.0 {
                let z = (s.mean_x_sq - s.theory_x_sq).abs() / s.se_x_sq;
                if z > worst_z {
                    worst_z = z;
                }
                if z > MEAN_SIGMA_GATE {
                    violations += 1;
                }
            }
        }
        checks.push(CheckResult {
            name: "power_within_3se".into(),
            passed: violations == 0,
            detail: format!("worst |z| = {worst_z:.3} over steps {}..{n}", p + 2),
        });

        let gate_ratio =
            |name: &str, mse: f64, th: f64, checks: &mut Vec<CheckResult>| {
                let ratio = mse / th;
                if config.trials >= MSE_RATIO_MIN_TRIALS {
                    checks.push(CheckResult {
                        name: name.into(),
                        passed: ratio >= MSE_RATIO_BOUNDS.0 && ratio <= MSE_RATIO_BOUNDS.1,
                        detail: format!("ratio = {ratio:.4}"),
                    });
                }
            };
        gate_ratio("mse_ratio_u1", mse_u1, theory_mse_u1, &mut checks);
        if let (Some(m), Some(t)) = (mse_u2, theory_mse_u2) {
            gate_ratio("mse_ratio_u2", m, t, &mut checks);
        }
    } else {
        checks.push(CheckResult {
            name: "gates_skipped".into(),
            passed: true,
            detail: format!(
                "horizon {n} beyond the linear-domain guard {}; empirical \
                 trajectories exceed f64 trial precision, theory curves exact",
                config.horizon_guard()
            ),
        });
    }
    let ratio_u1 = mse_u1 / theory_mse_u1;
    let ratio_u2 = match (mse_u2, theory_mse_u2) {
        (Some(m), Some(t)) => Some(m / t),
        _ => None,
    };

    let passed = checks.iter().all(|c| c.passed);
    let head_power_mean = per_step.iter().map(|s| s.mean_x_sq).sum::<f64>() / n as f64;
    let tail_from = n / 3;
    let tail_power_mean = per_step[tail_from..]
        .iter()
        .map(|s| s.mean_x_sq)
        .sum::<f64>()
        / (n - tail_from) as f64;

    let summary = Summary {
        mse_u1,
        theory_mse_u1,
        ratio_u1,
        mse_u2,
        theory_mse_u2,
        ratio_u2,
        exponent_u1: exponent(mse_u1),
        exponent_u2: mse_u2.map(exponent),
        theory_exponent_u1: -theory.log_mse_u1 / (2.0 * n as f64),
        exponent_target: config.scheme.min_root_abs().ln(),
        head_power_mean,
        tail_power_mean,
        passed,
        checks,
    };

    let params = match &config.scheme {
        SchemeParams::Sk1 { gamma } => ParamsRecord {
            kind: "sk1".into(),
            gamma1_re: *gamma,
            gamma1_im: 0.0,
            gamma2_re: 0.0,
            gamma2_im: 0.0,
        },
        SchemeParams::Sk2(p) => {
            let (g1, g2) = p.roots();
            let kind = match p.kind() {
                RootKind::RealDistinct => "real_distinct",
                RootKind::ConjugatePair => "conjugate_pair",
                RootKind::Repeated => "repeated",
            };
            ParamsRecord {
                kind: kind.into(),
                gamma1_re: g1.re,
                gamma1_im: g1.im,
                gamma2_re: g2.re,
                gamma2_im: g2.im,
            }
        }
    };

    Ok(SimReport {
        model: ModelRecord { betas: config.model.betas().to_vec() },
        params,
        horizon: n,
        trials: config.trials,
        seed: config.seed,
        per_step,
        summary,
    })
}

/// Theory curves for a run: per-step `E[X_i^2]` and the final message
/// MMSEs, all derived through a rescaled window accumulation so the same
/// code serves linear-domain and log-domain horizons.
struct TheoryCurves {
    x_sq: Vec<f64>,
    log_mse_u1: f64,
    log_mse_u2: Option<f64>,
}

fn theory_curves(config: &SimConfig) -> Result<TheoryCurves, FeedcapError> {
    let model = &config.model;
    let p = model.order();
    let n = config.horizon;
    match &config.scheme {
        SchemeParams::Sk1 { gamma } => {
            let l = model.eval_l_real(1.0 / gamma);
            let lg = gamma.abs().ln();
            let lc = (l * l / (gamma * gamma - 1.0)).ln();
            // ln sum_{k=p+1}^{j} gamma^{2(k-1)} L^2
            let ln_gsum = |j: usize| -> f64 {
                lc + 2.0 * j as f64 * lg + (-(-((2 * (j - p)) as f64) * lg).exp()).ln_1p()
            };
            let mut x_sq = Vec::with_capacity(n);
            for i in 1..=n {
                let vlog = 2.0 * (i as f64 - 1.0) * lg;
                if i == 1 || i - 1 < p + 1 {
                    x_sq.push(vlog.exp());
                } else {
                    x_sq.push((vlog - ln_one_plus_exp(ln_gsum(i - 1))).exp());
                }
            }
            let log_mse_u1 = if n <= p { 0.0 } else { -ln_one_plus_exp(ln_gsum(n)) };
            Ok(TheoryCurves { x_sq, log_mse_u1, log_mse_u2: None })
        }
        SchemeParams::Sk2(params) => {
            let dc = estimation::d_coeffs(model, params, n)?;
            let mut wg = WindowGram::new();
            let mut x_sq = Vec::with_capacity(n);
            for i in 1..=n {
                if i <= 2 || wg.is_empty() {
                    let (a, b) = params.message_coeff(i);
                    x_sq.push(a * a + b * b);
                } else {
                    let (a, b) = params.message_coeff(i);
                    x_sq.push(wg.log_pred_err(a, b).exp());
                }
                if i > p {
                    wg.absorb(dc.d1[i - 1], dc.d2[i - 1]);
                }
            }
            Ok(TheoryCurves {
                x_sq,
                log_mse_u1: wg.log_mmse_u1(),
                log_mse_u2: Some(wg.log_mmse_u2()),
            })
        }
    }
}

/// `ln(1 + e^x)` without overflow.
fn ln_one_plus_exp(x: f64) -> f64 {
    if x > 36.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Gram accumulation over the estimator's observation window, stored times
/// `exp(-ls)` like [`GramState`] but without observations.
struct WindowGram {
    ls: f64,
    g11: f64,
    g22: f64,
    g12: f64,
    n: usize,
}

impl WindowGram {
    fn new() -> Self {
        WindowGram { ls: 0.0, g11: 0.0, g22: 0.0, g12: 0.0, n: 0 }
    }

    fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn absorb(&mut self, d1: f64, d2: f64) {
        let h = (-self.ls / 2.0).exp();
        let a = d1 * h;
        let b = d2 * h;
        self.g11 += a * a;
        self.g22 += b * b;
        self.g12 += a * b;
        self.n += 1;
        let m = self.g11.max(self.g22).max(self.g12.abs());
        if m > 1e100 {
            let inv = 1.0 / m;
            self.g11 *= inv;
            self.g22 *= inv;
            self.g12 *= inv;
            self.ls += m.ln();
        }
    }

    fn log_det(&self) -> f64 {
        let w = (-self.ls).exp();
        2.0 * self.ls + ((w + self.g11) * (w + self.g22) - self.g12 * self.g12).ln()
    }

    fn log_mmse_u1(&self) -> f64 {
        let w = (-self.ls).exp();
        self.ls + (w + self.g22).ln() - self.log_det()
    }

    fn log_mmse_u2(&self) -> f64 {
        let w = (-self.ls).exp();
        self.ls + (w + self.g11).ln() - self.log_det()
    }

    /// `ln` of `(a^2 + b^2 + ||a D2 - b D1||^2) / |I_2 + D^T D|` over the
    /// absorbed window, with raw message coefficients `(a, b)`.
    fn log_pred_err(&self, a: f64, b: f64) -> f64 {
        let h = (-self.ls / 2.0).exp();
        let asc = a * h;
        let bsc = b * h;
        let w = (-self.ls).exp();
        let qform = asc * asc * self.g22 - 2.0 * asc * bsc * self.g12 + bsc * bsc * self.g11;
        2.0 * self.ls + (w * (asc * asc + bsc * bsc) + qform).ln() - self.log_det()
    }
}

/// Linear-domain closed form of the rank-1 message MMSE, kept as the
/// direct route the window accumulation is checked against.
#[cfg(test)]
fn sk1_theory_mse(model: &ArModel, gamma: f64, p: usize, n: usize) -> f64 {
    let l = model.eval_l_real(1.0 / gamma);
    let gsum = l * l * (gamma.powi(2 * n as i32) - gamma.powi(2 * p as i32))
        / (gamma * gamma - 1.0);
    1.0 / (1.0 + gsum)
}
