//! Characteristic-root parameters of the second-order message recursion.
//!
//! The message process follows `V_{i+1} = a V_i + b V_{i-1}` with
//! `V_1 = U_1`, `V_2 = U_2`; its behaviour is governed by the roots
//! `gamma_1, gamma_2` of `lambda^2 - a lambda - b = 0`. Admissible
//! parameters have both root moduli strictly above 1 and `b != 0`, which
//! leaves three families: distinct real roots, a complex-conjugate pair,
//! and a repeated real root.

use num_complex::Complex64;

use crate::error::FeedcapError;

/// Relative imaginary residue allowed when collapsing conjugate-pair
/// arithmetic to real values.
pub(crate) const IMAG_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    RealDistinct,
    ConjugatePair,
    Repeated,
}

/// Validated root pair plus the derived recursion coefficients
/// `a = gamma_1 + gamma_2`, `b = -gamma_1 gamma_2` (both real).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sk2Params {
    kind: RootKind,
    gamma1: Complex64,
    gamma2: Complex64,
    a: f64,
    b: f64,
}

impl Sk2Params {
    /// Distinct real roots, each with modulus above 1.
    pub fn real_distinct(g1: f64, g2: f64) -> Result<Self, FeedcapError> {
        if !(g1.is_finite() && g2.is_finite()) {
            return Err(FeedcapError::InvalidRoot("non-finite root".into()));
        }
        if g1.abs() <= 1.0 || g2.abs() <= 1.0 {
            return Err(FeedcapError::InvalidRoot(format!(
                "require |gamma| > 1, got ({g1}, {g2})"
            )));
        }
        if g1 == g2 {
            return Err(FeedcapError::InvalidRoot(
                "equal roots: use Sk2Params::repeated".into(),
            ));
        }
        Ok(Self {
            kind: RootKind::RealDistinct,
            gamma1: Complex64::new(g1, 0.0),
            gamma2: Complex64::new(g2, 0.0),
            a: g1 + g2,
            b: -g1 * g2,
        })
    }

    /// Conjugate pair `r e^{+- i theta}` with `r > 1`, `theta in (0, pi)`.
    pub fn conjugate(r: f64, theta: f64) -> Result<Self, FeedcapError> {
        if !(r.is_finite() && theta.is_finite()) {
            return Err(FeedcapError::InvalidRoot("non-finite parameters".into()));
        }
        if r <= 1.0 {
            return Err(FeedcapError::InvalidRoot(format!("require r > 1, got {r}")));
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(FeedcapError::InvalidRoot(format!(
                "require theta in (0, pi), got {theta}"
            )));
        }
        let g1 = Complex64::from_polar(r, theta);
        Ok(Self {
            kind: RootKind::ConjugatePair,
            gamma1: g1,
            gamma2: g1.conj(),
            a: 2.0 * r * theta.cos(),
            b: -r * r,
        })
    }

    /// Repeated real root with `|gamma| > 1`.
    pub fn repeated(g: f64) -> Result<Self, FeedcapError> {
        if !g.is_finite() || g.abs() <= 1.0 {
            return Err(FeedcapError::InvalidRoot(format!(
                "require |gamma| > 1, got {g}"
            )));
        }
        Ok(Self {
            kind: RootKind::Repeated,
            gamma1: Complex64::new(g, 0.0),
            gamma2: Complex64::new(g, 0.0),
            a: 2.0 * g,
            b: -g * g,
        })
    }

    pub fn kind(&self) -> RootKind {
        self.kind
    }

    pub fn roots(&self) -> (Complex64, Complex64) {
        (self.gamma1, self.gamma2)
    }

    /// Recursion coefficients `(a, b)`.
    pub fn recursion(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn min_root_abs(&self) -> f64 {
        self.gamma1.norm().min(self.gamma2.norm())
    }

    pub fn max_root_abs(&self) -> f64 {
        self.gamma1.norm().max(self.gamma2.norm())
    }

    /// Rate delivered by these roots: `2 log min(|gamma_1|, |gamma_2|)`.
    pub fn rate_nats(&self) -> f64 {
        2.0 * self.min_root_abs().ln()
    }

    /// Partial-fraction weights `c_1 = 1/(gamma_1 (gamma_1 - gamma_2))`,
    /// `c_2 = 1/(gamma_2 (gamma_2 - gamma_1))` (distinct roots only).
    pub(crate) fn pf_weights(&self) -> (Complex64, Complex64) {
        debug_assert!(self.kind != RootKind::Repeated);
        let d = self.gamma1 - self.gamma2;
        (1.0 / (self.gamma1 * d), -1.0 / (self.gamma2 * d))
    }

    /// Message coefficients `(a_n, b_n)` with `V_n = a_n U_1 + b_n U_2`.
    pub fn message_coeff(&self, n: usize) -> (f64, f64) {
        debug_assert!(n >= 1);
        match self.kind {
            RootKind::Repeated => {
                let g = self.gamma1.re;
                let an = (2.0 - n as f64) * g.powi(n as i32 - 1);
                let bn = (n as f64 - 1.0) * g.powi(n as i32 - 2);
                (an, bn)
            }
            _ => {
                let (c1, c2) = self.pf_weights();
                let p1 = self.gamma1.powu(n as u32);
                let p2 = self.gamma2.powu(n as u32);
                let an = -(c1 * self.gamma2 * p1 + c2 * self.gamma1 * p2);
                let bn = c1 * p1 + c2 * p2;
                (collapse_real(an), collapse_real(bn))
            }
        }
    }

    /// The full sequences `a_1..a_n`, `b_1..b_n`.
    pub fn message_coeffs(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for k in 1..=n {
            let (ak, bk) = self.message_coeff(k);
            a.push(ak);
            b.push(bk);
        }
        (a, b)
    }
}

/// Take the real part, asserting the imaginary residue is negligible.
pub(crate) fn collapse_real(z: Complex64) -> f64 {
    debug_assert!(
        z.im.abs() <= IMAG_RESIDUE_TOL * z.re.abs().max(1.0),
        "imaginary residue {} on {}",
        z.im,
        z.re
    );
    z.re
}

/// Fallible variant for runtime checking of conjugate-pair arithmetic.
pub(crate) fn try_collapse_real(z: Complex64) -> Result<f64, FeedcapError> {
    let scale = z.re.abs().max(1.0);
    if z.im.abs() > IMAG_RESIDUE_TOL * scale {
        return Err(FeedcapError::ImaginaryResidue { residue: z.im.abs() / scale });
    }
    Ok(z.re)
}
