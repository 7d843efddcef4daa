//! Stationary AR(p) Gaussian noise: spectral polynomial, PSD, exact
//! stationary sampling and the whitening filter.
//!
//! The process is parameterized by real coefficients `beta_k` with
//! `|beta_k| < 1`. Its spectral factor is the polynomial
//! `L(z) = prod_k (1 + beta_k z)`, the PSD is `1 / |L(e^{i theta})|^2`, and
//! applying `L(B)` (B the backward shift) to the process recovers the unit
//! white innovations.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::FeedcapError;
use crate::rng;

/// AR(p) noise model with cached filter coefficients.
///
/// Immutable after construction; freely shareable across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    betas: Vec<f64>,
    /// Coefficients of `L(z) = prod (1 + beta_k z)`; `phi[0] = 1`, length p+1.
    phi: Vec<f64>,
}

impl ArModel {
    /// Build a model from the root parameters `beta_k`; rejects any
    /// coefficient with `|beta| >= 1` or non-finite.
    pub fn new(betas: Vec<f64>) -> Result<Self, FeedcapError> {
        for (index, &value) in betas.iter().enumerate() {
            if !value.is_finite() || value.abs() >= 1.0 {
                return Err(FeedcapError::InvalidBeta { index, value });
            }
        }
        let phi = expand_filter(&betas);
        Ok(Self { betas, phi })
    }

    /// White noise (p = 0).
    pub fn white() -> Self {
        Self { betas: Vec::new(), phi: vec![1.0] }
    }

    pub fn order(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Filter coefficients `phi_0..phi_p` of `L(B)`; `phi_0 = 1`.
    pub fn filter_coeffs(&self) -> &[f64] {
        &self.phi
    }

    /// `L(z) = prod_k (1 + beta_k z)`; the empty product is 1.
    pub fn eval_l(&self, z: Complex64) -> Complex64 {
        self.betas
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &b| acc * (1.0 + b * z))
    }

    /// `L'(z) = sum_k beta_k prod_{j != k} (1 + beta_j z)`.
    pub fn eval_l_prime(&self, z: Complex64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..self.betas.len() {
            let mut term = Complex64::new(self.betas[k], 0.0);
            for (j, &b) in self.betas.iter().enumerate() {
                if j != k {
                    term *= 1.0 + b * z;
                }
            }
            sum += term;
        }
        sum
    }

    /// `L` at a real argument.
    pub fn eval_l_real(&self, x: f64) -> f64 {
        self.betas.iter().fold(1.0, |acc, &b| acc * (1.0 + b * x))
    }

    /// `L'` at a real argument.
    pub fn eval_l_prime_real(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..self.betas.len() {
            let mut term = self.betas[k];
            for (j, &b) in self.betas.iter().enumerate() {
                if j != k {
                    term *= 1.0 + b * x;
                }
            }
            sum += term;
        }
        sum
    }

    /// Power spectral density `1 / |L(e^{i theta})|^2`; strictly positive
    /// and even in theta.
    pub fn psd(&self, theta: f64) -> f64 {
        let z = Complex64::new(theta.cos(), theta.sin());
        1.0 / self.eval_l(z).norm_sqr()
    }

    /// Stationary autocovariances `r_0..r_p` from the Yule-Walker system of
    /// the expanded AR coefficients.
    pub fn stationary_autocov(&self) -> Vec<f64> {
        let p = self.order();
        if p == 0 {
            return vec![1.0];
        }
        // AR form: Z_n = sum_k a_k Z_{n-k} + W_n with a_k = -phi_k.
        let a: Vec<f64> = self.phi[1..].iter().map(|&c| -c).collect();
        let mut m = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut rhs = DVector::<f64>::zeros(p + 1);
        rhs[0] = 1.0;
        for j in 0..=p {
            m[(j, j)] += 1.0;
            for (k, &ak) in a.iter().enumerate() {
                let lag = (j as isize - (k as isize + 1)).unsigned_abs();
                m[(j, lag)] -= ak;
            }
        }
        let sol = m
            .lu()
            .solve(&rhs)
            .expect("Yule-Walker system is nonsingular for |beta_k| < 1");
        sol.iter().copied().collect()
    }

    /// Draw a stationary path of length `n`. The p values preceding the
    /// sample window come from the exact stationary distribution
    /// (Yule-Walker covariance), and every in-window value follows the AR
    /// recursion `Z_n = -sum phi_k Z_{n-k} + W_n` with fresh unit normals,
    /// so the whitening filter recovers the stored innovations exactly.
    pub fn sample_noise(&self, n: usize, seed: u64) -> Result<NoisePath, FeedcapError> {
        let mut r = rng::trial_rng(seed, 0);
        let mut path = self.sample_noise_with(n, &mut r)?;
        path.seed = seed;
        Ok(path)
    }

    /// Same as [`ArModel::sample_noise`] but drawing from a caller-supplied
    /// generator (one trial stream in the simulator).
    pub fn sample_noise_with<R: Rng>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<NoisePath, FeedcapError> {
        if n == 0 {
            return Err(FeedcapError::EmptySample(n));
        }
        let p = self.order();
        let presamples = if p == 0 {
            Vec::new()
        } else {
            let r = self.stationary_autocov();
            let cov = DMatrix::<f64>::from_fn(p, p, |i, j| r[i.abs_diff(j)]);
            let chol = Cholesky::new(cov)
                .expect("stationary covariance is positive definite for |beta_k| < 1");
            let normals = DVector::<f64>::from_fn(p, |_, _| rng.sample(StandardNormal));
            let z0 = chol.l() * normals;
            z0.iter().copied().collect::<Vec<f64>>()
        };
        let mut innovations = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let w: f64 = rng.sample(StandardNormal);
            innovations.push(w);
            let mut acc = w;
            for k in 1..=p {
                let z = if i >= k {
                    samples[i - k]
                } else {
                    presamples[p + i - k]
                };
                acc -= self.phi[k] * z;
            }
            samples.push(acc);
        }
        Ok(NoisePath { samples, presamples, innovations, seed: 0 })
    }

    /// Apply the whitening filter `L(B)`: `out_n = sum_k phi_k series_{n-k}`
    /// for `n >= p+1`. Output is `p` entries shorter than the input.
    pub fn whiten(&self, series: &[f64]) -> Result<Vec<f64>, FeedcapError> {
        let p = self.order();
        if series.len() < p + 1 {
            return Err(FeedcapError::SeriesTooShort { len: series.len(), order: p });
        }
        let out = (p..series.len())
            .map(|i| (0..=p).map(|k| self.phi[k] * series[i - k]).sum())
            .collect();
        Ok(out)
    }
}

/// One sampled realization of the noise process.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    /// `Z_1..Z_n`.
    pub samples: Vec<f64>,
    /// Stationary pre-sample state `Z_{1-p}..Z_0` (empty for p = 0).
    pub presamples: Vec<f64>,
    /// Unit-variance innovations `W_1..W_n` that drove the recursion.
    pub innovations: Vec<f64>,
    /// Seed used by [`ArModel::sample_noise`] (0 when drawn from an
    /// external stream).
    pub seed: u64,
}

impl NoisePath {
    /// Pre-sample state followed by the samples; whitening this extended
    /// series recovers all n innovations.
    pub fn extended(&self) -> Vec<f64> {
        let mut v = self.presamples.clone();
        v.extend_from_slice(&self.samples);
        v
    }
}

/// Expand `prod_k (1 + beta_k B)` by iterated convolution.
fn expand_filter(betas: &[f64]) -> Vec<f64> {
    let mut phi = vec![1.0];
    for &b in betas {
        let mut next = vec![0.0; phi.len() + 1];
        for (i, &c) in phi.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * b;
        }
        phi = next;
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_bad_betas() {
        assert!(ArModel::new(vec![1.0]).is_err());
        assert!(ArModel::new(vec![-1.0]).is_err());
        assert!(ArModel::new(vec![0.3, f64::NAN]).is_err());
        assert!(ArModel::new(vec![0.999, -0.999]).is_ok());
    }

    #[test]
    fn filter_expansion() {
        let m = ArModel::new(vec![0.3, 0.4]).unwrap();
        // (1 + 0.3 B)(1 + 0.4 B) = 1 + 0.7 B + 0.12 B^2
        assert_eq!(m.filter_coeffs().len(), 3);
        assert!(close(m.filter_coeffs()[0], 1.0, 0.0));
        assert!(close(m.filter_coeffs()[1], 0.7, 1e-15));
        assert!(close(m.filter_coeffs()[2], 0.12, 1e-15));
    }

    #[test]
    fn eval_l_examples() {
        let white = ArModel::white();
        assert_eq!(white.eval_l(C::new(0.7, 0.2)), C::new(1.0, 0.0));

        let m1 = ArModel::new(vec![0.5]).unwrap();
        assert_eq!(m1.eval_l(C::new(1.0, 0.0)), C::new(1.5, 0.0));

        let m2 = ArModel::new(vec![0.5, -0.25]).unwrap();
        let v = m2.eval_l(C::new(2.0, 0.0));
        assert!(close(v.re, 1.0, 1e-15) && v.im == 0.0);
    }

    #[test]
    fn eval_l_prime_examples() {
        let white = ArModel::white();
        assert_eq!(white.eval_l_prime(C::new(0.3, -0.8)), C::new(0.0, 0.0));

        let m1 = ArModel::new(vec![0.5]).unwrap();
        assert_eq!(m1.eval_l_prime(C::new(9.0, 2.0)), C::new(0.5, 0.0));

        let m2 = ArModel::new(vec![0.3, 0.4]).unwrap();
        let v = m2.eval_l_prime(C::new(1.0, 0.0));
        assert!(close(v.re, 0.3 * 1.4 + 0.4 * 1.3, 1e-15));
    }

    #[test]
    fn eval_l_prime_matches_finite_difference() {
        let m = ArModel::new(vec![0.5, -0.3, 0.2]).unwrap();
        let mut r = rng::trial_rng(11, 0);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 100 {
            let z = C::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            if z.norm() > 2.0 {
                continue;
            }
            checked += 1;
            let fd = (m.eval_l(z + h) - m.eval_l(z - h)) / (2.0 * h);
            let an = m.eval_l_prime(z);
            assert!((fd - an).norm() <= 1e-6 * an.norm().max(1.0));
        }
    }

    #[test]
    fn psd_examples_and_identity() {
        let white = ArModel::white();
        assert!(close(white.psd(0.71), 1.0, 1e-15));

        let m = ArModel::new(vec![0.5]).unwrap();
        assert!(close(m.psd(0.0), 4.0 / 9.0, 1e-15));
        assert!(close(m.psd(std::f64::consts::PI), 4.0, 1e-12));

        let m2 = ArModel::new(vec![0.3, -0.6]).unwrap();
        for k in 0..64 {
            let th = -3.0 + 6.0 * k as f64 / 63.0;
            let z = C::new(th.cos(), th.sin());
            let prod = m2.psd(th) * m2.eval_l(z).norm_sqr();
            assert!(close(prod, 1.0, 1e-12));
            assert!(close(m2.psd(th), m2.psd(-th), 1e-14));
            assert!(m2.psd(th) > 0.0);
        }
    }

    #[test]
    fn yule_walker_ar1() {
        let m = ArModel::new(vec![0.5]).unwrap();
        let r = m.stationary_autocov();
        // Z_n = -0.5 Z_{n-1} + W_n: r0 = 1/(1-0.25), r1 = -0.5 r0.
        assert!(close(r[0], 4.0 / 3.0, 1e-12));
        assert!(close(r[1], -2.0 / 3.0, 1e-12));
    }

    #[test]
    fn white_noise_unit_variance() {
        let m = ArModel::white();
        let n = 100_000;
        let path = m.sample_noise(n, 1234).unwrap();
        let var = path.samples.iter().map(|z| z * z).sum::<f64>() / n as f64;
        assert!(var > 0.98 && var < 1.02, "var = {var}");
    }

    #[test]
    fn ar1_variance_and_lag1_match_yule_walker() {
        let m = ArModel::new(vec![0.5]).unwrap();
        let n = 100_000;
        let path = m.sample_noise(n, 99).unwrap();
        let r = m.stationary_autocov();
        let var = path.samples.iter().map(|z| z * z).sum::<f64>() / n as f64;
        // sample variance of a dependent Gaussian series: se ~ r0 sqrt(2 (1+2 sum rho^2)/n)
        let rho1 = r[1] / r[0];
        let infl = (1.0 + 2.0 * rho1 * rho1 / (1.0 - rho1 * rho1)).sqrt();
        let se_var = r[0] * (2.0 / n as f64).sqrt() * infl;
        assert!((var - r[0]).abs() < 3.0 * se_var, "var {var} vs {}", r[0]);

        let lag1 = path.samples.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n - 1) as f64;
        let se_lag = r[0] * (2.0 / n as f64).sqrt() * infl;
        assert!((lag1 - r[1]).abs() < 3.0 * se_lag, "lag1 {lag1} vs {}", r[1]);
    }

    #[test]
    fn sampling_is_reproducible_and_rejects_empty() {
        let m = ArModel::new(vec![0.3, 0.4]).unwrap();
        let a = m.sample_noise(500, 7).unwrap();
        let b = m.sample_noise(500, 7).unwrap();
        assert_eq!(a, b);
        let c = m.sample_noise(500, 8).unwrap();
        assert_ne!(a, c);
        assert!(m.sample_noise(0, 7).is_err());
    }

    #[test]
    fn whiten_examples() {
        let white = ArModel::white();
        let s = vec![0.1, -0.4, 2.0];
        assert_eq!(white.whiten(&s).unwrap(), s);

        let m = ArModel::new(vec![0.5]).unwrap();
        assert_eq!(m.whiten(&[1.0, 1.0, 1.0]).unwrap(), vec![1.5, 1.5]);
        assert!(m.whiten(&[1.0]).is_err());
    }

    #[test]
    fn whiten_recovers_innovations() {
        for betas in [vec![0.5], vec![0.3, 0.4], vec![-0.6, 0.2, 0.4]] {
            let m = ArModel::new(betas).unwrap();
            let p = m.order();
            let path = m.sample_noise(200, 21).unwrap();
            // plain samples: exact from index p+1 onward
            let w_tail = m.whiten(&path.samples).unwrap();
            for (i, w) in w_tail.iter().enumerate() {
                assert!(close(*w, path.innovations[p + i], 1e-10));
            }
            // with the pre-sample state retained: all n innovations
            let w_full = m.whiten(&path.extended()).unwrap();
            assert_eq!(w_full.len(), path.innovations.len());
            for (w, v) in w_full.iter().zip(&path.innovations) {
                assert!(close(*w, *v, 1e-10));
            }
        }
    }

    #[test]
    fn whitened_innovations_have_unit_variance() {
        let m = ArModel::new(vec![0.7, -0.4]).unwrap();
        let path = m.sample_noise(50_000, 3).unwrap();
        let w = m.whiten(&path.samples).unwrap();
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert!(var > 0.97 && var < 1.03, "var = {var}");
    }

    #[test]
    fn stationary_start_agrees_with_burn_in() {
        // cross-check path: long burn-in instead of the exact stationary draw
        let m = ArModel::new(vec![0.6, -0.3]).unwrap();
        let p = m.order();
        let n = 60_000;
        let burn = 10 * p;
        let mut r = rng::trial_rng(5, 1);
        let mut z = vec![0.0; burn + n];
        for i in 0..z.len() {
            let w: f64 = r.sample(StandardNormal);
            let mut acc = w;
            for k in 1..=p {
                if i >= k {
                    acc -= m.filter_coeffs()[k] * z[i - k];
                }
            }
            z[i] = acc;
        }
        let burned = &z[burn..];
        let var_burn = burned.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let path = m.sample_noise(n, 5).unwrap();
        let var_stat = path.samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let r0 = m.stationary_autocov()[0];
        assert!((var_burn - r0).abs() < 0.05 * r0, "burn {var_burn} vs {r0}");
        assert!((var_stat - r0).abs() < 0.05 * r0, "stat {var_stat} vs {r0}");
    }
}
