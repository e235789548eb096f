//! Dense complex linear algebra with gap-validated numerical rank.

use crate::error::{Error, Result};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, svd_scratch, ComputeSvdVectors, SvdParams};
use faer::{auto, Mat, MatRef, Par, Spec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use crate::exact::{exact_rank, ExactMatrix};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub rel_threshold: f64,
    pub min_gap: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy {
            rel_threshold: 1e-9,
            min_gap: 1e4,
        }
    }
}

impl RankPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) || self.min_gap.is_nan() || self.min_gap <= 1.0 {
            return Err(Error::InvalidParams(format!("rank policy {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// smallest kept over largest dropped singular value
    pub gap: f64,
    /// singular values in decreasing order, relative to the largest
    pub sigma: Vec<f64>,
}

impl RankInfo {
    pub fn ambiguous(&self, policy: &RankPolicy) -> bool {
        self.gap < policy.min_gap
    }

    pub fn check(self, policy: &RankPolicy) -> Result<RankInfo> {
        if self.ambiguous(policy) {
            Err(Error::AmbiguousRank {
                rank: self.rank,
                gap: self.gap,
                min_gap: policy.min_gap,
            })
        } else {
            Ok(self)
        }
    }
}

/// Full SVD, singular values decreasing.
struct Svd {
    u: CMatrix,
    v: CMatrix,
    sigma: Vec<f64>,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

fn to_faer(m: &CMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    let mut s = qr_svd(m, false).sigma;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Full SVD (or singular values only) with `a` as given.
fn qr_svd(a: &CMatrix, vectors: bool) -> Svd {
    let (r, c) = a.shape();
    let mut s = Mat::<Complex64>::zeros(r.min(c), 1);
    let (ur, vc) = if vectors { (r, c) } else { (0, 0) };
    let mut u = Mat::<Complex64>::zeros(ur, ur);
    let mut v = Mat::<Complex64>::zeros(vc, vc);
    // Divide and conquer loses accuracy on strongly clustered spectra (for
    // example projectors), so always use bidiagonal QR iteration.
    let params: Spec<SvdParams, Complex64> = Spec::new(SvdParams {
        recursion_threshold: usize::MAX,
        ..auto!(Complex64)
    });
    let mode = if vectors {
        ComputeSvdVectors::Full
    } else {
        ComputeSvdVectors::No
    };
    let (cu, cv) = (mode, mode);
    let mut buf = MemBuffer::new(svd_scratch::<Complex64>(r, c, cu, cv, Par::Seq, params));
    svd::svd(
        to_faer(a).as_ref(),
        s.as_mut().col_mut(0).as_diagonal_mut(),
        vectors.then(|| u.as_mut()),
        vectors.then(|| v.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    )
    .expect("svd converges");
    Svd {
        u: from_faer(u.as_ref()),
        v: from_faer(v.as_ref()),
        sigma: (0..s.nrows()).map(|i| s[(i, 0)].re).collect(),
    }
}

fn svd_sorted(m: &CMatrix) -> Svd {
    let scale = max_abs(m);
    let a = if scale > 0.0 { m.unscale(scale) } else { m.clone() };
    qr_svd(&a, true)
}

fn cut(sorted: &[f64], policy: &RankPolicy) -> (usize, f64) {
    let smax = sorted.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = sorted.iter().take_while(|&&s| s > policy.rel_threshold * smax).count();
    let gap = if rank == sorted.len() || sorted[rank] == 0.0 {
        f64::INFINITY
    } else {
        sorted[rank - 1] / sorted[rank]
    };
    (rank, gap)
}

/// Numerical rank. Does not fail on a small gap; see [`RankInfo::check`].
pub fn rank_info(m: &CMatrix, policy: &RankPolicy) -> RankInfo {
    rank_info_scaled(m, policy, None)
}

/// Rank with an optional reference scale (for instance a product of factor
/// norms). A matrix whose Frobenius norm is below `rel_threshold * scale` has
/// rank 0, with the gap measured against the scale.
pub fn rank_info_scaled(m: &CMatrix, policy: &RankPolicy, scale: Option<f64>) -> RankInfo {
    let fro = m.norm();
    if let Some(s) = scale {
        if fro <= policy.rel_threshold * s {
            let gap = if fro == 0.0 { f64::INFINITY } else { s / fro };
            return RankInfo {
                rank: 0,
                gap,
                sigma: vec![],
            };
        }
    }
    if m.nrows() == 0 || m.ncols() == 0 || fro == 0.0 {
        return RankInfo {
            rank: 0,
            gap: f64::INFINITY,
            sigma: vec![],
        };
    }
    decompose(m, policy).1
}

fn decompose(m: &CMatrix, policy: &RankPolicy) -> (Svd, RankInfo) {
    let svd = svd_sorted(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let sorted: Vec<f64> = if smax > 0.0 {
        svd.sigma.iter().map(|s| s / smax).collect()
    } else {
        vec![0.0; svd.sigma.len()]
    };
    let (rank, gap) = cut(&sorted, policy);
    (
        svd,
        RankInfo {
            rank,
            gap,
            sigma: sorted,
        },
    )
}

/// Gap-validated rank.
pub fn svd_rank(m: &CMatrix, policy: &RankPolicy) -> Result<RankInfo> {
    rank_info(m, policy).check(policy)
}

#[derive(Clone, Debug)]
pub struct Subspace {
    pub ambient_dim: usize,
    /// orthonormal columns
    pub basis: CMatrix,
    pub tol_used: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: CMatrix::zeros(ambient_dim, 0),
            tol_used: 0.0,
        }
    }

    pub fn ambient(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: CMatrix::identity(ambient_dim, ambient_dim),
            tol_used: 0.0,
        }
    }

    /// Orthonormalised span of the columns of `m`.
    pub fn span(m: &CMatrix, policy: &RankPolicy) -> Result<Self> {
        image(m, policy)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `I - P`
    pub fn complement_projector(&self) -> CMatrix {
        CMatrix::identity(self.ambient_dim, self.ambient_dim) - self.projector()
    }

    pub fn contains(&self, v: &CMatrix, tol: f64) -> bool {
        let r = v - &self.basis * (self.basis.adjoint() * v);
        r.norm() <= tol * v.norm().max(f64::MIN_POSITIVE)
    }
}

fn check_ambient(list: &[&Subspace]) -> Result<usize> {
    let n = list
        .first()
        .map(|s| s.ambient_dim)
        .ok_or_else(|| Error::DimensionMismatch("empty subspace list".into()))?;
    if list.iter().any(|s| s.ambient_dim != n) {
        return Err(Error::DimensionMismatch("ambient dimensions differ".into()));
    }
    Ok(n)
}

pub fn kernel(m: &CMatrix, policy: &RankPolicy) -> Result<Subspace> {
    let c = m.ncols();
    if m.norm() == 0.0 || m.nrows() == 0 {
        return Ok(Subspace::ambient(c));
    }
    let (svd, info) = decompose(m, policy);
    let info = info.check(policy)?;
    let basis = svd.v.columns(info.rank, c - info.rank).into_owned();
    Ok(Subspace {
        ambient_dim: c,
        basis,
        tol_used: policy.rel_threshold,
    })
}

pub fn image(m: &CMatrix, policy: &RankPolicy) -> Result<Subspace> {
    let r = m.nrows();
    if m.norm() == 0.0 || m.ncols() == 0 {
        return Ok(Subspace::zero(r));
    }
    let (svd, info) = decompose(m, policy);
    let info = info.check(policy)?;
    let basis = svd.u.columns(0, info.rank).into_owned();
    Ok(Subspace {
        ambient_dim: r,
        basis,
        tol_used: policy.rel_threshold,
    })
}

pub fn subspace_sum(list: &[&Subspace], policy: &RankPolicy) -> Result<Subspace> {
    let n = check_ambient(list)?;
    let total: usize = list.iter().map(|s| s.dim()).sum();
    let mut m = CMatrix::zeros(n, total);
    let mut at = 0;
    for s in list {
        m.view_mut((0, at), (n, s.dim())).copy_from(&s.basis);
        at += s.dim();
    }
    image(&m, policy)
}

pub fn subspace_intersect(list: &[&Subspace], policy: &RankPolicy) -> Result<Subspace> {
    let n = check_ambient(list)?;
    let parts: Vec<&&Subspace> = list.iter().filter(|s| s.dim() < n).collect();
    if parts.is_empty() {
        return Ok(Subspace::ambient(n));
    }
    if parts.iter().any(|s| s.dim() == 0) {
        return Ok(Subspace::zero(n));
    }
    let mut m = CMatrix::zeros(n * parts.len(), n);
    for (i, s) in parts.iter().enumerate() {
        m.view_mut((i * n, 0), (n, n)).copy_from(&s.complement_projector());
    }
    kernel(&m, policy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubspaceComparison {
    pub equal: bool,
    pub max_principal_angle: f64,
}

/// Largest principal angle between equal-dimensional subspaces.
pub fn max_principal_angle(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() != b.dim() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.dim() == 0 {
        return 0.0;
    }
    // sin of the largest angle is the spectral norm of (I - P_a) B
    let r = &b.basis - &a.basis * (a.basis.adjoint() * &b.basis);
    let s = singular_values(&r).first().copied().unwrap_or(0.0);
    s.min(1.0).asin()
}

pub fn subspace_equal(a: &Subspace, b: &Subspace, tol: f64) -> Result<SubspaceComparison> {
    check_ambient(&[a, b])?;
    let angle = max_principal_angle(a, b);
    Ok(SubspaceComparison {
        equal: a.dim() == b.dim() && angle < tol,
        max_principal_angle: angle,
    })
}

/// Kronecker product `a ⊗ b` in row-major multi-index order.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Spectral norm.
pub fn norm2(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`
pub fn rel_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

/// LU determinant with partial pivoting.
pub fn det(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// `ln det m` up to `2πi Z`, accumulated from the LU pivots.
pub fn log_det(m: &CMatrix) -> Complex64 {
    let lu = m.clone().lu();
    let sign: Complex64 = lu.p().determinant();
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].ln()).sum::<Complex64>() + sign.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_rank(n: usize, r: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        random(n, r, rng) * random(r, n, rng)
    }

    #[test]
    fn rank_basics() {
        let p = RankPolicy::default();
        let i = svd_rank(&identity(5), &p).unwrap();
        assert_eq!(i.rank, 5);
        assert!(i.gap.is_infinite());
        assert_eq!(svd_rank(&CMatrix::zeros(4, 4), &p).unwrap().rank, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_rank(8, 3, &mut rng);
        assert_eq!(svd_rank(&m, &p).unwrap().rank, 3);
    }

    #[test]
    fn scaled_rank_zero() {
        let p = RankPolicy::default();
        let m = CMatrix::from_element(3, 3, Complex64::new(1e-14, 0.0));
        let r = rank_info_scaled(&m, &p, Some(1.0));
        assert_eq!(r.rank, 0);
        assert!(r.gap > 1e4);
        // without the scale the matrix has rank 1
        assert_eq!(rank_info(&m, &p).rank, 1);
    }

    #[test]
    fn ambiguous_rank_reported() {
        let p = RankPolicy::default();
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-8, 0.0),
            Complex64::new(1e-10, 0.0),
        ]));
        assert!(matches!(svd_rank(&m, &p), Err(Error::AmbiguousRank { .. })));
    }

    #[test]
    fn kernel_and_image() {
        let p = RankPolicy::default();
        let k = kernel(&CMatrix::zeros(4, 4), &p).unwrap();
        assert_eq!(k.dim(), 4);
        assert_eq!(image(&identity(4), &p).unwrap().dim(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_rank(7, 4, &mut rng);
        let k = kernel(&m, &p).unwrap();
        let im = image(&m, &p).unwrap();
        assert_eq!(k.dim() + im.dim(), 7);
        assert!((&m * &k.basis).norm() < 1e-12 * m.norm());
        let gram = im.basis.adjoint() * &im.basis;
        assert!((gram - identity(4)).norm() < 1e-12);
        // wide matrix kernel
        let w = random(2, 5, &mut rng);
        assert_eq!(kernel(&w, &p).unwrap().dim(), 3);
    }

    #[test]
    fn sums_and_intersections() {
        let p = RankPolicy::default();
        let e1 = Subspace::span(&CMatrix::from_column_slice(2, 1, &[1.0.into(), 0.0.into()]), &p).unwrap();
        let e2 = Subspace::span(&CMatrix::from_column_slice(2, 1, &[0.0.into(), 1.0.into()]), &p).unwrap();
        assert_eq!(subspace_intersect(&[&e1, &e2], &p).unwrap().dim(), 0);
        assert_eq!(subspace_sum(&[&e1, &e1], &p).unwrap().dim(), 1);
        let amb = Subspace::ambient(2);
        let i = subspace_intersect(&[&e1, &amb], &p).unwrap();
        assert!(subspace_equal(&i, &e1, 1e-12).unwrap().equal);
        assert!(!subspace_equal(&e1, &e2, 1e-6).unwrap().equal);
        let same = subspace_equal(&e1, &e1, 1e-12).unwrap();
        assert!(same.equal && same.max_principal_angle < 1e-12);
    }

    #[test]
    fn modular_law_on_random_subspaces() {
        let p = RankPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = 9;
            let common = random(n, 2, &mut rng);
            let a = random(n, 3, &mut rng);
            let b = random(n, 2, &mut rng);
            let mut ma = CMatrix::zeros(n, 5);
            ma.view_mut((0, 0), (n, 2)).copy_from(&common);
            ma.view_mut((0, 2), (n, 3)).copy_from(&a);
            let mut mb = CMatrix::zeros(n, 4);
            mb.view_mut((0, 0), (n, 2)).copy_from(&common);
            mb.view_mut((0, 2), (n, 2)).copy_from(&b);
            let sa = Subspace::span(&ma, &p).unwrap();
            let sb = Subspace::span(&mb, &p).unwrap();
            let s = subspace_sum(&[&sa, &sb], &p).unwrap();
            let i = subspace_intersect(&[&sa, &sb], &p).unwrap();
            assert_eq!(i.dim(), 2);
            assert_eq!(s.dim() + i.dim(), sa.dim() + sb.dim());
        }
    }

    #[test]
    fn clustered_spectrum_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = image(&random(25, 10, &mut rng), &RankPolicy::default()).unwrap().basis;
        let basis = CMatrix::identity(25, 25).kronecker(&q);
        let s = Subspace {
            ambient_dim: 625,
            basis,
            tol_used: 0.0,
        };
        let m = s.complement_projector() * Complex64::new(0.9, 0.0);
        assert_eq!(kernel(&m, &RankPolicy::default()).unwrap().dim(), 250);
        assert_eq!(rank_info(&m, &RankPolicy::default()).rank, 375);
    }
}
