//! The elliptic R-matrix `R_{n,k,τ}(z)` on `V ⊗ V`, its symmetries, limits,
//! the Belavin family and determinant formulas.
//!
//! Basis convention: `x_i ⊗ x_j` has flat index `i·n + j`, indices in `Z_n`.

use crate::dd::{e, from_c64, to_c64, Real, DD};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, RankPolicy};
use crate::theta::{theta_alpha_r, Precision, SeriesPolicy, ThetaContext};
use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};

pub type OperatorV2 = CMatrix;

/// Points closer than this to `(1/n)Λ` are treated as torsion by `r_matrix`.
pub const TORSION_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct AlgebraParams {
    pub n: usize,
    pub k: usize,
    kp: usize,
    pub tau: Complex64,
    pub theta: ThetaContext,
    pub ranks: RankPolicy,
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl AlgebraParams {
    pub fn new(n: usize, k: usize, eta: Complex64, tau: Complex64) -> Result<Self> {
        Self::with_context(k, tau, ThetaContext::new(n, eta)?, RankPolicy::default())
    }

    pub fn with_context(k: usize, tau: Complex64, theta: ThetaContext, ranks: RankPolicy) -> Result<Self> {
        let n = theta.n;
        if k < 1 || k >= n || gcd(n, k) != 1 {
            return Err(Error::InvalidParams(format!(
                "need 1 <= k < n with gcd(n,k)=1, got n={n} k={k}"
            )));
        }
        if !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::InvalidParams(format!("tau={tau}")));
        }
        ranks.validate()?;
        let kp = (1..n).find(|&x| (x * k) % n == 1).expect("k invertible mod n");
        Ok(AlgebraParams {
            n,
            k,
            kp,
            tau,
            theta,
            ranks,
        })
    }

    /// The default generic point: `η = 0.31 + 1.37i`, `τ = 0.1234 + 0.4321η`.
    pub fn generic(n: usize, k: usize) -> Result<Self> {
        let eta = default_eta();
        Self::new(n, k, eta, default_tau(eta))
    }

    /// `k'` with `kk' ≡ 1 mod n`, `1 ≤ k' < n`.
    pub fn k_prime(&self) -> usize {
        self.kp
    }

    pub fn eta(&self) -> Complex64 {
        self.theta.eta()
    }

    pub fn with_tau(&self, tau: Complex64) -> Self {
        let mut p = self.clone();
        p.tau = tau;
        p
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::with_context(k, self.tau, self.theta.clone(), self.ranks)
    }

    pub fn with_precision(&self, precision: Precision) -> Self {
        let mut p = self.clone();
        p.theta.precision = precision;
        p
    }

    /// Distance from `τ` to `(1/m)Λ`.
    pub fn torsion_distance(&self, m: usize) -> f64 {
        self.theta.lattice.torsion_distance(self.tau, m)
    }

    pub fn tau_on_torsion(&self) -> bool {
        self.torsion_distance(self.n) < TORSION_TOL
    }
}

pub fn default_eta() -> Complex64 {
    Complex64::new(0.31, 1.37)
}

pub fn default_tau(eta: Complex64) -> Complex64 {
    Complex64::new(0.1234, 0.0) + eta * 0.4321
}

/// `ζ = a/n + (b/n)η`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfPeriodPoint {
    pub a: i64,
    pub b: i64,
}

impl HalfPeriodPoint {
    pub fn new(a: i64, b: i64) -> Self {
        HalfPeriodPoint { a, b }
    }

    pub fn value(&self, n: usize, eta: Complex64) -> Complex64 {
        (Complex64::new(self.a as f64, 0.0) + eta * self.b as f64) / n as f64
    }
}

#[derive(Clone, Debug)]
pub struct BasisOps {
    pub s: CMatrix,
    pub t: CMatrix,
    pub n: CMatrix,
    pub p: CMatrix,
}

fn zn(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// `S x_α = e(α/n) x_α`, `T x_α = x_{α+1}`, `N x_α = x_{−α}`, `P(u⊗v) = v⊗u`.
pub fn basis_ops(n: usize) -> BasisOps {
    let mut s = CMatrix::zeros(n, n);
    let mut t = CMatrix::zeros(n, n);
    let mut nn = CMatrix::zeros(n, n);
    for a in 0..n {
        s[(a, a)] = e(Complex64::new(a as f64 / n as f64, 0.0));
        t[(zn(a as i64 + 1, n), a)] = Complex64::one();
        nn[(zn(-(a as i64), n), a)] = Complex64::one();
    }
    BasisOps {
        s,
        t,
        n: nn,
        p: swap(n),
    }
}

pub fn swap(n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            p[(j * n + i, i * n + j)] = Complex64::one();
        }
    }
    p
}

/// Integer power of an invertible matrix.
pub fn mat_pow(m: &CMatrix, e: i64) -> CMatrix {
    let base = if e < 0 {
        m.clone().try_inverse().expect("invertible")
    } else {
        m.clone()
    };
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..e.unsigned_abs() {
        out = &out * &base;
    }
    out
}

/// R-matrix entries in scalar type `R`, row-major `n²×n²`.
///
/// The coefficient of `x_{j−r} ⊗ x_{i+r}` in `R(z)(x_i ⊗ x_j)` is
/// `Π_{α≠j−i−r} θ_α(−z) / Π_{α≥1} θ_α(0) · θ_{j−i+r(k−1)}(−z+τ) / θ_{kr}(τ)`,
/// the factor `θ_{j−i−r}(−z)` being cancelled against the denominator.
pub fn r_entries<R: Real>(
    n: usize,
    k: usize,
    tau: Complex<R>,
    eta: Complex<R>,
    z: Complex<R>,
    policy: &SeriesPolicy,
) -> Result<Vec<Complex<R>>> {
    let th = |a: usize, w: Complex<R>| theta_alpha_r(n, a as i64, w, eta, policy);
    let mut minus_z = Vec::with_capacity(n);
    let mut shifted = Vec::with_capacity(n);
    let mut at_tau = Vec::with_capacity(n);
    let mut den0 = Complex::<R>::one();
    let zero = Complex::<R>::zero();
    for a in 0..n {
        minus_z.push(th(a, -z)?);
        shifted.push(th(a, tau - z)?);
        at_tau.push(th(a, tau)?);
        if a > 0 {
            den0 = den0 * th(a, zero)?;
        }
    }
    // Π_{α≠β} θ_α(−z) through prefix and suffix products
    let mut prefix = vec![Complex::<R>::one(); n + 1];
    let mut suffix = vec![Complex::<R>::one(); n + 1];
    for a in 0..n {
        prefix[a + 1] = prefix[a] * minus_z[a];
        suffix[n - a - 1] = suffix[n - a] * minus_z[n - a - 1];
    }
    let omit: Vec<Complex<R>> = (0..n).map(|b| prefix[b] * suffix[b + 1] / den0).collect();
    let dim = n * n;
    let mut out = vec![zero; dim * dim];
    let (ni, ki) = (n as i64, k as i64);
    for i in 0..ni {
        for j in 0..ni {
            let col = (i * ni + j) as usize;
            for r in 0..ni {
                let beta = zn(j - i - r, n);
                let num = shifted[zn(j - i + r * (ki - 1), n)];
                let coef = omit[beta] * num / at_tau[zn(ki * r, n)];
                let row = zn(j - r, n) * n + zn(i + r, n);
                out[row * dim + col] = out[row * dim + col] + coef;
            }
        }
    }
    Ok(out)
}

fn to_cmatrix<R: Real>(dim: usize, v: &[Complex<R>]) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, c| to_c64(v[r * dim + c]))
}

fn require_generic(params: &AlgebraParams) -> Result<()> {
    if params.tau_on_torsion() {
        Err(Error::TauOnTorsion)
    } else {
        Ok(())
    }
}

/// `R_τ(z)`; entries computed in double-double when the context asks for
/// extended precision.
pub fn r_matrix(params: &AlgebraParams, z: Complex64) -> Result<OperatorV2> {
    require_generic(params)?;
    let n = params.n;
    let th = &params.theta;
    match th.precision {
        Precision::Double => {
            let v = r_entries(n, params.k, params.tau, th.eta(), z, &th.policy)?;
            Ok(to_cmatrix(n * n, &v))
        }
        Precision::Extended => {
            let v = r_matrix_dd(params, z)?;
            Ok(to_cmatrix(n * n, &v))
        }
    }
}

/// `R_τ(z)` entries in double-double, row-major.
pub fn r_matrix_dd(params: &AlgebraParams, z: Complex64) -> Result<Vec<Complex<DD>>> {
    require_generic(params)?;
    let th = &params.theta;
    r_entries::<DD>(
        params.n,
        params.k,
        from_c64(params.tau),
        from_c64(th.eta()),
        from_c64(z),
        &th.extended_policy(),
    )
}

/// `sym_m = I − m P`.
pub fn sym_op(m: i64, n: usize) -> OperatorV2 {
    CMatrix::identity(n * n, n * n) - swap(n) * Complex64::new(m as f64, 0.0)
}

/// `b(z) = e(−nz + τ + ½ − (n+1)η/2)`.
pub fn b_fn(params: &AlgebraParams, z: Complex64) -> Complex64 {
    let n = params.n as f64;
    e(-z * n + params.tau + 0.5 - params.eta() * ((n + 1.0) / 2.0))
}

/// `f(z, ζ, τ) = e(−bnz) e(bτ + (b + a(n−1))/2 − b(n+b)η/2)` for `ζ = a/n + bη/n`.
pub fn f_fn(params: &AlgebraParams, z: Complex64, zeta: HalfPeriodPoint) -> Complex64 {
    f_fn_tau(params.n, params.eta(), params.tau, z, zeta)
}

pub fn f_fn_tau(n: usize, eta: Complex64, tau: Complex64, z: Complex64, zeta: HalfPeriodPoint) -> Complex64 {
    let nf = n as f64;
    let (a, b) = (zeta.a as f64, zeta.b as f64);
    e(-z * (b * nf)) * e(tau * b + (b + a * (nf - 1.0)) / 2.0 - eta * (b * (nf + b) / 2.0))
}

/// `C = T^b S^{ka}` for `ζ = a/n + bη/n`.
pub fn shift_conjugator(n: usize, k: usize, zeta: HalfPeriodPoint) -> CMatrix {
    let ops = basis_ops(n);
    mat_pow(&ops.t, zeta.b) * mat_pow(&ops.s, k as i64 * zeta.a)
}

/// `R_±(ζ) = lim_{τ→0} R_τ(±τ + ζ) = f(0,ζ,0) (I ⊗ C⁻¹) sym_{±1} (C ⊗ I)`.
pub fn r_plus_limit(params: &AlgebraParams, zeta: HalfPeriodPoint, sign: i64) -> OperatorV2 {
    let n = params.n;
    let c = shift_conjugator(n, params.k, zeta);
    let cinv = c.clone().try_inverse().expect("invertible");
    let id = CMatrix::identity(n, n);
    let f = f_fn_tau(n, params.eta(), Complex64::zero(), Complex64::zero(), zeta);
    (kron(&id, &cinv) * sym_op(sign.signum(), n) * kron(&c, &id)) * f
}

/// `I_(a,b) x_i = ω^{ib} x_{i−a}`.
pub fn heisenberg_op(n: usize, a: i64, b: i64) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n as i64 {
        m[(zn(i - a, n), i as usize)] = e(Complex64::new((i * b) as f64 / n as f64, 0.0));
    }
    m
}

fn belavin_sum(params: &AlgebraParams, z: Complex64, shift: impl Fn(i64) -> i64) -> Result<OperatorV2> {
    require_generic(params)?;
    let n = params.n;
    let mut out = CMatrix::zeros(n * n, n * n);
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            let w = params.theta.w_fn(a, b, z, params.tau)?;
            let i = heisenberg_op(n, shift(a), b);
            // I_p is unitary
            out += kron(&i, &i.adjoint()) * w;
        }
    }
    Ok(out)
}

/// `S(z) = Σ_p w_p(z) I_p ⊗ I_p⁻¹`.
pub fn belavin_s(params: &AlgebraParams, z: Complex64) -> Result<OperatorV2> {
    belavin_sum(params, z, |a| a)
}

/// `S_k(z) = Σ w_(a,b)(z) I_(−k'a,b) ⊗ I_(−k'a,b)⁻¹`.
pub fn belavin_sk(params: &AlgebraParams, z: Complex64) -> Result<OperatorV2> {
    let kp = params.k_prime() as i64;
    belavin_sum(params, z, |a| -kp * a)
}

/// `Π_{α∈Z_n} θ_α(w)`.
pub fn theta_prod(params: &AlgebraParams, w: Complex64) -> Result<Complex64> {
    let mut p = Complex64::one();
    for a in 0..params.n as i64 {
        p *= params.theta.theta_alpha(a, w)?;
    }
    Ok(p)
}

/// `D(z) = (Π θ_α(−z−τ)/θ_α(−τ))^{n(n−1)/2} (Π θ_α(−z+τ)/θ_α(τ))^{n(n+1)/2}`.
pub fn det_closed_form(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    require_generic(params)?;
    let n = params.n as i32;
    let t = params.tau;
    let minus = theta_prod(params, -z - t)? / theta_prod(params, -t)?;
    let plus = theta_prod(params, -z + t)? / theta_prod(params, t)?;
    Ok(minus.powi(n * (n - 1) / 2) * plus.powi(n * (n + 1) / 2))
}

/// `ln D(z)` up to `2πi Z`; avoids overflow of the large powers in `D`.
pub fn det_closed_form_ln(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    require_generic(params)?;
    let n = params.n as f64;
    let t = params.tau;
    let minus = (theta_prod(params, -z - t)? / theta_prod(params, -t)?).ln();
    let plus = (theta_prod(params, -z + t)? / theta_prod(params, t)?).ln();
    Ok(minus * (n * (n - 1.0) / 2.0) + plus * (n * (n + 1.0) / 2.0))
}

/// `ln` of the Odesskii closed form, up to `2πi Z`.
pub fn odesskii_det_ln(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    require_generic(params)?;
    let n = params.n as f64;
    let t = params.tau;
    let sign = Complex64::new(0.0, std::f64::consts::PI * (n * (n - 1.0) / 2.0));
    let pre = Complex64::new(0.0, std::f64::consts::TAU) * t * (n * n * n * (n - 1.0) / 2.0);
    let ratio = (theta_prod(params, -z - t)? / theta_prod(params, -z + t)?).ln();
    Ok(sign + pre + ratio * (n * (n - 1.0) / 2.0))
}

/// The scalar `p(z) = Π θ_α(−z+τ)/θ_α(τ)` relating `R` to Odesskii's normalisation.
pub fn odesskii_prefactor(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    require_generic(params)?;
    Ok(theta_prod(params, -z + params.tau)? / theta_prod(params, params.tau)?)
}

/// `(−1)^{n(n−1)/2} e(n³(n−1)τ/2) (Π θ_α(−z−τ) / Π θ_α(−z+τ))^{n(n−1)/2}`.
///
/// The sign comes from `Π θ_α(τ) / Π θ_α(−τ) = −e(n²τ)`.
pub fn odesskii_det_closed_form(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    require_generic(params)?;
    let n = params.n as i64;
    let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let t = params.tau;
    let pre = e(t * ((n * n * n * (n - 1)) as f64 / 2.0)) * sign;
    let ratio = theta_prod(params, -z - t)? / theta_prod(params, -z + t)?;
    Ok(pre * ratio.powi((n * (n - 1) / 2) as i32))
}

/// Relative residual of `R_{n,k,τ}(z)ᵀ = e(−n²z) R_{n,n−k,−τ}(−z)`.
pub fn dual_transpose_check(params: &AlgebraParams, z: Complex64) -> Result<f64> {
    let n = params.n;
    let lhs = r_matrix(params, z)?.transpose();
    let dual = params.with_k(n - params.k)?.with_tau(-params.tau);
    let rhs = r_matrix(&dual, -z)? * e(-z * (n * n) as f64);
    Ok(crate::linalg::rel_residual(&lhs, &rhs))
}

/// Determinant by partial-pivot LU in double-double.
pub fn det_dd(dim: usize, entries: &[Complex<DD>]) -> Complex<DD> {
    let mut a = entries.to_vec();
    let mut det = Complex::<DD>::one();
    let mag = |z: &Complex<DD>| z.re.to_f64().abs() + z.im.to_f64().abs();
    for c in 0..dim {
        let p = (c..dim)
            .max_by(|&x, &y| mag(&a[x * dim + c]).partial_cmp(&mag(&a[y * dim + c])).unwrap())
            .unwrap();
        if mag(&a[p * dim + c]) == 0.0 {
            return Complex::zero();
        }
        if p != c {
            for k in 0..dim {
                a.swap(p * dim + k, c * dim + k);
            }
            det = -det;
        }
        let piv = a[c * dim + c];
        det = det * piv;
        for r in c + 1..dim {
            let f = a[r * dim + c] / piv;
            if f.re.is_zero() && f.im.is_zero() {
                continue;
            }
            for k in c + 1..dim {
                let v = a[r * dim + k] - f * a[c * dim + k];
                a[r * dim + k] = v;
            }
        }
    }
    det
}

/// `det R_τ(z)`, in double-double when the context is extended.
pub fn r_det(params: &AlgebraParams, z: Complex64) -> Result<Complex64> {
    match params.theta.precision {
        Precision::Double => Ok(crate::linalg::det(&r_matrix(params, z)?)),
        Precision::Extended => {
            let dim = params.n * params.n;
            Ok(to_c64(det_dd(dim, &r_matrix_dd(params, z)?)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rel_residual, svd_rank};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_operator_relations() {
        for n in 2..=5 {
            let o = basis_ops(n);
            let w = e(c(1.0 / n as f64, 0.0));
            assert!(rel_residual(&(&o.s * &o.t), &(&o.t * &o.s * w)) < 1e-14);
            assert!(rel_residual(&(&o.p * &o.p), &CMatrix::identity(n * n, n * n)) < 1e-15);
            assert!(rel_residual(&(&o.n * &o.n), &CMatrix::identity(n, n)) < 1e-15);
            for a in 0..n {
                assert!((o.s[(a, a)] - e(c(a as f64 / n as f64, 0.0))).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn k_prime() {
        let p = AlgebraParams::generic(5, 2).unwrap();
        assert_eq!(p.k_prime(), 3);
        assert!(AlgebraParams::generic(4, 2).is_err());
        assert!(AlgebraParams::generic(3, 3).is_err());
    }

    #[test]
    fn r_at_zero_is_identity() {
        for (n, k) in [(2, 1), (3, 1), (3, 2), (4, 3), (5, 2)] {
            let p = AlgebraParams::generic(n, k).unwrap();
            let r = r_matrix(&p, c(0.0, 0.0)).unwrap();
            assert!(rel_residual(&r, &CMatrix::identity(n * n, n * n)) < 1e-10);
        }
    }

    #[test]
    fn nullity_at_tau() {
        let p = AlgebraParams::new(3, 1, c(0.0, 1.0), c(0.13, 0.21)).unwrap();
        let r = r_matrix(&p, p.tau).unwrap();
        assert_eq!(svd_rank(&r, &p.ranks).unwrap().rank, 3);
        let r = r_matrix(&p, c(0.31, 0.17)).unwrap();
        assert_eq!(svd_rank(&r, &p.ranks).unwrap().rank, 9);
    }

    #[test]
    fn sym_ops() {
        assert!(rel_residual(&sym_op(0, 3), &CMatrix::identity(9, 9)) < 1e-15);
        let pol = RankPolicy::default();
        assert_eq!(svd_rank(&sym_op(1, 3), &pol).unwrap().rank, 3);
        assert_eq!(svd_rank(&sym_op(-1, 3), &pol).unwrap().rank, 6);
    }

    #[test]
    fn plus_limit_at_zero_and_small_tau() {
        let p = AlgebraParams::generic(3, 1).unwrap();
        let z0 = HalfPeriodPoint::new(0, 0);
        assert!(rel_residual(&r_plus_limit(&p, z0, 1), &sym_op(1, 3)) < 1e-15);
        assert!(rel_residual(&r_plus_limit(&p, z0, -1), &sym_op(-1, 3)) < 1e-15);
        // compare with R_τ(±τ + ζ) at small τ
        let zeta = HalfPeriodPoint::new(1, 2);
        let zv = zeta.value(3, p.eta());
        for sign in [1i64, -1] {
            let mut prev = f64::INFINITY;
            for eps in [1e-3, 1e-4, 1e-5] {
                let q = p.with_tau(c(0.6, 0.8) * eps);
                let r = r_matrix(&q, q.tau * sign as f64 + zv).unwrap();
                let d = rel_residual(&r, &r_plus_limit(&p, zeta, sign));
                assert!(d < prev);
                prev = d;
            }
            assert!(prev < 1e-3, "sign {sign}: {prev}");
        }
    }

    #[test]
    fn f_and_b() {
        let p = AlgebraParams::generic(3, 1).unwrap();
        let z = c(0.3, 0.1);
        assert!((f_fn(&p, z, HalfPeriodPoint::new(0, 0)) - 1.0).norm() < 1e-15);
        assert!(b_fn(&p, z).norm() > 0.0);
    }

    #[test]
    fn extended_det_agrees_with_double() {
        let p = AlgebraParams::generic(3, 1).unwrap();
        let z = c(0.21, 0.33);
        let d = r_det(&p, z).unwrap();
        let x = r_det(&p.with_precision(Precision::Extended), z).unwrap();
        assert!((d - x).norm() < 1e-9 * x.norm());
        let closed = det_closed_form(&p, z).unwrap();
        assert!((x / closed - 1.0).norm() < 1e-12);
    }

    #[test]
    fn theta_prod_sign_flip() {
        for n in 2..=6 {
            let p = AlgebraParams::generic(n, 1).unwrap();
            let r = theta_prod(&p, p.tau).unwrap() / theta_prod(&p, -p.tau).unwrap();
            assert!((r / e(p.tau * (n * n) as f64) + 1.0).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn odesskii_det_small_n() {
        for (n, k) in [(2, 1), (3, 1), (4, 1)] {
            let p = AlgebraParams::generic(n, k).unwrap();
            for z in [c(0.21, 0.05), c(-0.1, 0.4), c(0.33, -0.27)] {
                let r = r_matrix(&p, z).unwrap() / odesskii_prefactor(&p, z).unwrap();
                let d = r.lu().determinant();
                let x = odesskii_det_closed_form(&p, z).unwrap();
                assert!((d / x - 1.0).norm() < 1e-8, "n={n} z={z}");
            }
        }
    }
}
