//! Theta functions for the lattice `Z + Z eta`.
//!
//! * `theta1`: `θ(z) = Σ (-1)^m e(mz + m(m-1)η/2)`, zero at the lattice points.
//! * `theta_alpha`: the order-`n` functions `θ_α` for `α ∈ Z_n`.
//! * `theta_char`: `ϑ[a;b](z|η)` with real characteristics.
//!
//! All series are evaluated after reducing the argument toward the
//! fundamental parallelogram with the exact quasi-periodicity laws.

use crate::dd::{cr, e, from_c64, to_c64, Real, DD};
use crate::error::{Error, Result};
use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    pub rel_tol: f64,
    pub max_index: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            rel_tol: 1e-15,
            max_index: 200,
        }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 || self.max_index < 10 {
            return Err(Error::InvalidParams(format!(
                "series policy rel_tol={} max_index={}",
                self.rel_tol, self.max_index
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    eta: Complex64,
}

impl LatticeParams {
    pub fn new(eta: Complex64) -> Result<Self> {
        if !eta.re.is_finite() || !eta.im.is_finite() || eta.im <= 0.0 {
            return Err(Error::InvalidParams(format!("Im(eta) must be positive, got {eta}")));
        }
        Ok(LatticeParams { eta })
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    /// Coordinates `(x, y)` with `z = x + y η`.
    pub fn coords(&self, z: Complex64) -> (f64, f64) {
        let y = z.im / self.eta.im;
        (z.re - y * self.eta.re, y)
    }

    /// Distance from `z` to the nearest point of `(1/m) Λ`.
    pub fn torsion_distance(&self, z: Complex64, m: usize) -> f64 {
        let (x, y) = self.coords(z);
        let m = m as f64;
        let dx = m * x - (m * x).round();
        let dy = m * y - (m * y).round();
        ((Complex64::new(dx, 0.0) + self.eta * dy) / m).norm()
    }
}

/// Theta evaluation context: `n`, the lattice and the truncation policy.
#[derive(Debug)]
pub struct ThetaContext {
    pub n: usize,
    pub lattice: LatticeParams,
    pub policy: SeriesPolicy,
    pub precision: Precision,
    factor: OnceLock<Complex64>,
}

impl Clone for ThetaContext {
    fn clone(&self) -> Self {
        let factor = OnceLock::new();
        if let Some(c) = self.factor.get() {
            let _ = factor.set(*c);
        }
        ThetaContext {
            n: self.n,
            lattice: self.lattice,
            policy: self.policy,
            precision: self.precision,
            factor,
        }
    }
}

impl ThetaContext {
    pub fn new(n: usize, eta: Complex64) -> Result<Self> {
        Self::with_policy(n, eta, SeriesPolicy::default(), Precision::Double)
    }

    pub fn with_policy(n: usize, eta: Complex64, policy: SeriesPolicy, precision: Precision) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be at least 2, got {n}")));
        }
        policy.validate()?;
        Ok(ThetaContext {
            n,
            lattice: LatticeParams::new(eta)?,
            policy,
            precision,
            factor: OnceLock::new(),
        })
    }

    pub fn eta(&self) -> Complex64 {
        self.lattice.eta
    }

    /// Policy used for double-double series: tightened to extended accuracy.
    pub fn extended_policy(&self) -> SeriesPolicy {
        SeriesPolicy {
            rel_tol: self.policy.rel_tol.min(1e-32),
            max_index: self.policy.max_index,
        }
    }

    pub fn theta1(&self, z: Complex64) -> Result<Complex64> {
        match self.precision {
            Precision::Double => theta1_r(z, self.eta(), &self.policy),
            Precision::Extended => {
                theta1_r::<DD>(from_c64(z), from_c64(self.eta()), &self.extended_policy()).map(to_c64)
            }
        }
    }

    pub fn theta_alpha(&self, alpha: i64, z: Complex64) -> Result<Complex64> {
        match self.precision {
            Precision::Double => theta_alpha_r(self.n, alpha, z, self.eta(), &self.policy),
            Precision::Extended => {
                let p = self.extended_policy();
                theta_alpha_r::<DD>(self.n, alpha, from_c64(z), from_c64(self.eta()), &p).map(to_c64)
            }
        }
    }

    /// The constant `c` with `ϑ[α/n+½; ½](z|nη) = c⁻¹ e(−z/2) θ_α(z/n)`.
    pub fn factor_constant(&self) -> Result<Complex64> {
        if let Some(c) = self.factor.get() {
            return Ok(*c);
        }
        let samples = [
            (1i64, Complex64::new(0.37, 0.23)),
            (0, Complex64::new(0.61, -0.17)),
            (2, Complex64::new(-0.29, 0.41)),
        ];
        for (alpha, z) in samples {
            let c = self.factor_ratio(alpha, z)?;
            if let Some(c) = c {
                let _ = self.factor.set(c);
                return Ok(c);
            }
        }
        Err(Error::DegenerateSample)
    }

    /// `e(−z/2) θ_α(z/n) / ϑ[α/n+½; ½](z|nη)`, or `None` when both sides vanish.
    pub fn factor_ratio(&self, alpha: i64, z: Complex64) -> Result<Option<Complex64>> {
        let n = self.n as f64;
        let lhs = theta_char(alpha as f64 / n + 0.5, 0.5, z, self.eta() * n, &self.policy)?;
        let rhs = e(z * -0.5) * self.theta_alpha(alpha, z / n)?;
        if lhs.norm() < 1e-13 || rhs.norm() < 1e-13 {
            return Ok(None);
        }
        Ok(Some(rhs / lhs))
    }

    /// Belavin weight `w_(a,b)(z) = ϑ[a/n; b/n](z+ξ|η) / ϑ[a/n; b/n](ξ|η)`, `ξ = τ + (1+η)/2`.
    pub fn w_fn(&self, a: i64, b: i64, z: Complex64, tau: Complex64) -> Result<Complex64> {
        if self.lattice.torsion_distance(tau, self.n) < 1e-8 {
            return Err(Error::SingularLocus(format!("tau={tau} is in (1/n)Lambda")));
        }
        let n = self.n as f64;
        let xi = tau + (Complex64::new(1.0, 0.0) + self.eta()) * 0.5;
        let (a, b) = (a as f64 / n, b as f64 / n);
        let den = theta_char(a, b, xi, self.eta(), &self.policy)?;
        if den.norm() < 1e-300 {
            return Err(Error::SingularLocus("vanishing Belavin denominator".into()));
        }
        Ok(theta_char(a, b, z + xi, self.eta(), &self.policy)? / den)
    }
}

/// Symmetric-window summation: `term(c)`, then `term(c+M)`, `term(c-M)` for
/// `M = 1, 2, ...` until two consecutive rounds fall below `rel_tol` times the
/// largest term seen.
fn window_sum<R: Real>(
    center: i64,
    policy: &SeriesPolicy,
    mut term: impl FnMut(i64) -> Complex<R>,
) -> Result<Complex<R>> {
    let t0 = term(center);
    let mut sum = t0;
    let mut largest = crate::dd::cmag(t0);
    let mut quiet = 0;
    for m in 1..=policy.max_index as i64 {
        let tp = term(center + m);
        let tm = term(center - m);
        sum = sum + tp + tm;
        let mp = crate::dd::cmag(tp);
        let mm = crate::dd::cmag(tm);
        largest = largest.max(mp).max(mm);
        if mp.max(mm) <= policy.rel_tol * largest {
            quiet += 1;
            if quiet >= 2 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::TruncationNotConverged {
        max_index: policy.max_index,
    })
}

fn real_of<R: Real>(x: i64) -> R {
    R::from_f64(x as f64)
}

/// Reduce `z = z0 + s η + t` with `|Im z0| ≤ Im η / 2`, `|Re z0 - ...| ≤ 1/2`.
fn reduce<R: Real>(z: Complex<R>, eta: Complex<R>) -> (Complex<R>, i64, i64) {
    let s = (z.im.to_f64() / eta.im.to_f64()).round() as i64;
    let w = z - eta * real_of::<R>(s);
    let t = w.re.to_f64().round() as i64;
    (w - cr::<R>(t as f64), s, t)
}

/// `θ(z)` in scalar type `R`.
pub fn theta1_r<R: Real>(z: Complex<R>, eta: Complex<R>, policy: &SeriesPolicy) -> Result<Complex<R>> {
    let (z0, s, _t) = reduce(z, eta);
    let half = R::from_f64(0.5);
    let sum = window_sum(0, policy, |m| {
        let mr = real_of::<R>(m);
        let mut v = e(z0 * mr + eta * (half * mr * (mr - R::one())));
        if m.rem_euclid(2) == 1 {
            v = -v;
        }
        v
    })?;
    if s == 0 {
        return Ok(sum);
    }
    // θ(z0 + sη) = (−1)^s e(−s z0 − s(s−1)η/2) θ(z0)
    let sr = real_of::<R>(s);
    let mut f = e(-(z0 * sr) - eta * (half * sr * (sr - R::one())));
    if s.rem_euclid(2) == 1 {
        f = -f;
    }
    Ok(f * sum)
}

/// `θ_α(z) = e(αz + α/2n + α(α−n)η/2n) Π_{m<n} θ(z + m/n + αη/n)`, `α` reduced mod `n`.
pub fn theta_alpha_r<R: Real>(
    n: usize,
    alpha: i64,
    z: Complex<R>,
    eta: Complex<R>,
    policy: &SeriesPolicy,
) -> Result<Complex<R>> {
    let a = alpha.rem_euclid(n as i64);
    theta_alpha_unreduced(n, a, z, eta, policy)
}

/// The defining product formula without reducing `α`.
pub fn theta_alpha_unreduced<R: Real>(
    n: usize,
    alpha: i64,
    z: Complex<R>,
    eta: Complex<R>,
    policy: &SeriesPolicy,
) -> Result<Complex<R>> {
    let nr = real_of::<R>(n as i64);
    let ar = real_of::<R>(alpha);
    let two_n = nr + nr;
    let pre = e(z * ar + Complex::new(ar / two_n, R::zero()) + eta * (ar * (ar - nr) / two_n));
    let shift = eta * (ar / nr);
    let mut prod = pre;
    for m in 0..n {
        let w = z + Complex::new(real_of::<R>(m as i64) / nr, R::zero()) + shift;
        prod = prod * theta1_r(w, eta, policy)?;
    }
    Ok(prod)
}

/// `ϑ[a;b](z|η) = Σ_m e((a+m)(z+b) + (a+m)²η/2)`.
pub fn theta_char(a: f64, b: f64, z: Complex64, eta: Complex64, policy: &SeriesPolicy) -> Result<Complex64> {
    let (z0, s, t) = reduce(z, eta);
    let y = z0.im / eta.im;
    // largest terms sit near a + m = −y
    let center = (-y - a).round() as i64;
    let sum = window_sum(center, policy, |m| {
        let am = a + m as f64;
        e((z0 + b) * am + eta * (0.5 * am * am))
    })?;
    if s == 0 && t == 0 {
        return Ok(sum);
    }
    let (s, t) = (s as f64, t as f64);
    Ok(e(Complex64::new(a * t, 0.0) - (z0 + b) * s - eta * (0.5 * s * s)) * sum)
}

/// Relative residual of `ϑ[a;b](z+sη+t) = e(at − s(z+b) − s²η/2) ϑ[a;b](z)`.
pub fn theta_char_shift_check(
    a: f64,
    b: f64,
    s: i64,
    t: i64,
    z: Complex64,
    eta: Complex64,
    policy: &SeriesPolicy,
) -> Result<f64> {
    let (sf, tf) = (s as f64, t as f64);
    let lhs = theta_char(a, b, z + eta * sf + tf, eta, policy)?;
    let base = theta_char(a, b, z, eta, policy)?;
    let rhs = e(Complex64::new(a * tf, 0.0) - (z + b) * sf - eta * (0.5 * sf * sf)) * base;
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(n: usize) -> ThetaContext {
        ThetaContext::new(n, c(0.31, 1.37)).unwrap()
    }

    #[test]
    fn e_fn_basics() {
        assert!((e(c(0.0, 0.0)) - 1.0).norm() < 1e-15);
        assert!((e(c(0.5, 0.0)) + 1.0).norm() < 1e-15);
        let z = c(0.3, -0.2);
        assert!((e(z + 1.0) - e(z)).norm() < 1e-14);
    }

    #[test]
    fn theta1_zero_and_periods() {
        let t = ctx(2);
        assert!(t.theta1(c(0.0, 0.0)).unwrap().norm() < 1e-12);
        let z = c(0.23, 0.41);
        let eta = t.eta();
        let v = t.theta1(z).unwrap();
        assert!((t.theta1(z + 1.0).unwrap() - v).norm() < 1e-12 * v.norm());
        let w = t.theta1(z + eta).unwrap();
        assert!((w + e(-z) * v).norm() < 1e-12 * w.norm());
    }

    #[test]
    fn theta1_far_argument_reduced() {
        // compare a far point with the law applied by hand
        let t = ctx(2);
        let eta = t.eta();
        let z = c(0.11, 0.07);
        let mut expect = t.theta1(z).unwrap();
        let mut w = z;
        for _ in 0..6 {
            expect = -e(-w) * expect;
            w += eta;
        }
        let got = t.theta1(w + 3.0).unwrap();
        assert!((got - expect).norm() < 1e-11 * expect.norm());
    }

    #[test]
    fn theta_alpha_laws() {
        for n in 2..=4 {
            let t = ctx(n);
            let eta = t.eta();
            let nf = n as f64;
            for alpha in 0..n as i64 {
                let z = c(0.17, 0.29);
                let v = t.theta_alpha(alpha, z).unwrap();
                let w = t.theta_alpha(alpha, z + 1.0 / nf).unwrap();
                assert!((w - e(c(alpha as f64 / nf, 0.0)) * v).norm() < 1e-10 * v.norm());
                let zero = t.theta_alpha(alpha, -eta * (alpha as f64 / nf)).unwrap();
                assert!(zero.norm() < 1e-10, "n={n} alpha={alpha} {zero}");
                // θ_α(z + η/n) = e(−z − 1/2n + (n−1)η/2n) θ_{α+1}(z)
                let lhs = t.theta_alpha(alpha, z + eta / nf).unwrap();
                let rhs = e(-z - 0.5 / nf + eta * ((nf - 1.0) / (2.0 * nf))) * t.theta_alpha(alpha + 1, z).unwrap();
                assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
            }
        }
    }

    #[test]
    fn theta_alpha_period_in_alpha() {
        let t = ctx(3);
        let z = c(0.21, -0.13);
        let p = SeriesPolicy::default();
        let a0 = theta_alpha_unreduced(3, 0, z, t.eta(), &p).unwrap();
        let a3 = theta_alpha_unreduced(3, 3, z, t.eta(), &p).unwrap();
        assert!((a0 - a3).norm() < 1e-12 * a0.norm());
    }

    #[test]
    fn theta_char_laws() {
        let p = SeriesPolicy::default();
        let eta = c(0.31, 1.37);
        let z = c(0.2, 0.3);
        let (a, b) = (0.3, 0.7);
        let v = theta_char(a, b, z, eta, &p).unwrap();
        assert!((theta_char(a + 1.0, b, z, eta, &p).unwrap() - v).norm() < 1e-12 * v.norm());
        let w = theta_char(a, b + 1.0, z, eta, &p).unwrap();
        assert!((w - e(c(a, 0.0)) * v).norm() < 1e-12 * v.norm());
        let zero = (c(1.0, 0.0) + eta) * 0.5 - (eta * a + b);
        assert!(theta_char(a, b, zero, eta, &p).unwrap().norm() < 1e-12);
        assert_eq!(theta_char_shift_check(a, b, 0, 0, z, eta, &p).unwrap(), 0.0);
        assert!(theta_char_shift_check(a, b, 0, 1, z, eta, &p).unwrap() < 1e-10);
        assert!(theta_char_shift_check(a, b, 1, 0, z, eta, &p).unwrap() < 1e-10);
        assert!(theta_char_shift_check(a, b, -3, 2, z, eta, &p).unwrap() < 1e-10);
    }

    #[test]
    fn factor_constant_is_sample_independent() {
        for n in 2..=4 {
            let t = ctx(n);
            let c0 = t.factor_constant().unwrap();
            assert!(c0.norm() > 0.0);
            let pts = [
                (0, c(0.3, 0.2)),
                (1, c(0.7, 0.1)),
                (n as i64 - 1, c(-0.4, 0.9)),
                (1, c(2.3, -1.1)),
            ];
            for (alpha, z) in pts {
                let r = t.factor_ratio(alpha, z).unwrap().unwrap();
                assert!((r - c0).norm() < 1e-9 * c0.norm(), "n={n} {r} vs {c0}");
            }
        }
    }

    #[test]
    fn w_fn_values() {
        let t = ThetaContext::new(3, c(0.0, 1.0)).unwrap();
        let tau = c(0.13, 0.21);
        for a in 0..3 {
            for b in 0..3 {
                assert!((t.w_fn(a, b, c(0.0, 0.0), tau).unwrap() - 1.0).norm() < 1e-13);
            }
        }
        let z = c(0.2, 0.0);
        let w = t.w_fn(1, 2, z, tau).unwrap();
        assert!((t.w_fn(4, 2, z, tau).unwrap() - w).norm() < 1e-12 * w.norm());
        assert!((t.w_fn(1, 5, z, tau).unwrap() - w).norm() < 1e-12 * w.norm());
        // tighter truncation reproduces the value
        let mut tight = t.clone();
        tight.policy = SeriesPolicy {
            rel_tol: 1e-30,
            max_index: 400,
        };
        let w00 = t.w_fn(0, 0, z, tau).unwrap();
        assert!((tight.w_fn(0, 0, z, tau).unwrap() - w00).norm() < 1e-14 * w00.norm());
        assert!(t.w_fn(0, 0, z, c(1.0 / 3.0, 0.0)).is_err());
    }

    #[test]
    fn extended_precision_agrees() {
        let mut t = ctx(3);
        let z = c(0.17, 0.29);
        let d = t.theta_alpha(1, z).unwrap();
        t.precision = Precision::Extended;
        let x = t.theta_alpha(1, z).unwrap();
        assert!((d - x).norm() < 1e-13 * x.norm());
    }

    #[test]
    fn extended_theta1_matches_reference() {
        // θ(0.25) for η = i computed to 32 digits by direct summation in DD
        let eta = Complex::new(DD::from_f64(0.0), DD::from_f64(1.0));
        let z = Complex::new(DD::from_f64(0.25), DD::from_f64(0.0));
        let p = SeriesPolicy {
            rel_tol: 1e-33,
            max_index: 200,
        };
        let v = theta1_r(z, eta, &p).unwrap();
        // direct: Σ (−1)^m e(m/4) exp(−π m(m−1))
        let mut re = DD::from_f64(0.0);
        let mut im = DD::from_f64(0.0);
        for m in -8i64..=8 {
            let mag = (-(DD::PI * DD::from_f64((m * (m - 1)) as f64))).exp();
            let (cc, ss) = DD::from_f64(m as f64 * 0.25).cis_turns();
            let sign = if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            re = re + DD::from_f64(sign) * mag * cc;
            im = im + DD::from_f64(sign) * mag * ss;
        }
        assert!((v.re - re).to_f64().abs() < 1e-30);
        assert!((v.im - im).to_f64().abs() < 1e-30);
    }
}
