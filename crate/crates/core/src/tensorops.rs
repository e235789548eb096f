//! Operators on `V^⊗d`: embeddings, permutations, the chains `S_{i→j}`,
//! `T_d`, `F_d`, `M_{a,b}` and relation subspaces.
//!
//! Basis convention: `x_{i_1} ⊗ … ⊗ x_{i_d}` has index `Σ i_t n^{d−t}`.
//! Chain operators are kept as ordered lists of factors `R(z)_{q,q+1}`
//! (leftmost first) and materialised on demand.

use crate::error::{Error, Result};
use crate::linalg::{image, kernel, kron, norm2, subspace_intersect, subspace_sum, CMatrix, Subspace};
use crate::rmatrix::{r_matrix, r_plus_limit, AlgebraParams, HalfPeriodPoint};
use num_complex::Complex64;
use std::collections::HashMap;

pub fn pow(n: usize, d: usize) -> usize {
    n.pow(d as u32)
}

#[derive(Clone, Debug)]
pub struct OperatorVd {
    pub n: usize,
    pub d: usize,
    /// the operator divided by `exp(log_scale)`
    pub mat: CMatrix,
    /// bound on the spectral norm of `mat`; the scale for rank-0 decisions
    pub norm_bound: f64,
    pub log_scale: f64,
}

impl OperatorVd {
    /// The operator itself. Overflows for long products at large `Im τ`.
    pub fn value(&self) -> CMatrix {
        &self.mat * Complex64::new(self.log_scale.exp(), 0.0)
    }

    /// `(a, b, bound)` with both operators expressed relative to a common scale.
    pub fn aligned(&self, other: &OperatorVd) -> (CMatrix, CMatrix, f64) {
        let t = self.log_scale.max(other.log_scale);
        let fa = (self.log_scale - t).exp();
        let fb = (other.log_scale - t).exp();
        let bound = (self.norm_bound * fa).max(other.norm_bound * fb);
        (
            &self.mat * Complex64::new(fa, 0.0),
            &other.mat * Complex64::new(fb, 0.0),
            bound,
        )
    }
}

/// `A_{i,i+1} = I^{⊗(i−1)} ⊗ A ⊗ I^{⊗(d−i−1)}` (1-based `i`).
pub fn embed_pair(a: &CMatrix, n: usize, i: usize, d: usize) -> Result<CMatrix> {
    if i < 1 || i + 1 > d || a.nrows() != n * n {
        return Err(Error::IndexOutOfRange(format!("pair {i} in d={d}")));
    }
    Ok(kron(
        &kron(&CMatrix::identity(pow(n, i - 1), pow(n, i - 1)), a),
        &CMatrix::identity(pow(n, d - i - 1), pow(n, d - i - 1)),
    ))
}

/// `A_i` acting on tensorand `i` (1-based).
pub fn embed_single(a: &CMatrix, n: usize, i: usize, d: usize) -> Result<CMatrix> {
    if i < 1 || i > d || a.nrows() != n {
        return Err(Error::IndexOutOfRange(format!("position {i} in d={d}")));
    }
    Ok(kron(
        &kron(&CMatrix::identity(pow(n, i - 1), pow(n, i - 1)), a),
        &CMatrix::identity(pow(n, d - i), pow(n, d - i)),
    ))
}

/// `A^L = A ⊗ I`.
pub fn left_block(a: &CMatrix, n: usize) -> CMatrix {
    kron(a, &CMatrix::identity(n, n))
}

/// `A^R = I ⊗ A`.
pub fn right_block(a: &CMatrix, n: usize) -> CMatrix {
    kron(&CMatrix::identity(n, n), a)
}

fn digits(mut idx: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for t in (0..d).rev() {
        out[t] = idx % n;
        idx /= n;
    }
    out
}

fn undigits(ds: &[usize], n: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * n + x)
}

/// The operator moving tensorand `t` to position `sigma[t]` (0-based).
pub fn perm_op(sigma: &[usize], n: usize) -> CMatrix {
    let d = sigma.len();
    let dim = pow(n, d);
    let mut m = CMatrix::zeros(dim, dim);
    let mut out = vec![0; d];
    for idx in 0..dim {
        let ds = digits(idx, n, d);
        for t in 0..d {
            out[sigma[t]] = ds[t];
        }
        m[(undigits(&out, n), idx)] += Complex64::new(1.0, 0.0);
    }
    m
}

/// All permutations of `0..d` with their signs.
pub fn permutations(d: usize) -> Vec<(Vec<usize>, i64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..used.len() {
            if !used[x] {
                used[x] = true;
                prefix.push(x);
                rec(prefix, used, out);
                prefix.pop();
                used[x] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out.into_iter()
        .map(|p| {
            let mut inv = 0;
            for a in 0..d {
                for b in a + 1..d {
                    if p[a] > p[b] {
                        inv += 1;
                    }
                }
            }
            let s = if inv % 2 == 0 { 1 } else { -1 };
            (p, s)
        })
        .collect()
}

fn signed_sum(d: usize, n: usize, signed: bool) -> CMatrix {
    let dim = pow(n, d);
    let mut m = CMatrix::zeros(dim, dim);
    for (p, s) in permutations(d) {
        let w = if signed { s as f64 } else { 1.0 };
        m += perm_op(&p, n) * Complex64::new(w, 0.0);
    }
    m
}

/// `Σ_σ σ`.
pub fn symmetrizer(d: usize, n: usize) -> CMatrix {
    signed_sum(d, n, false)
}

/// `Σ_σ sgn(σ) σ`.
pub fn antisymmetrizer(d: usize, n: usize) -> CMatrix {
    signed_sum(d, n, true)
}

/// One factor `R(z)_{pos,pos+1}` (1-based `pos`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub pos: usize,
    pub z: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    /// `S_{i→j}(t_i, …, t_{j−1})`
    Up,
    /// `S_{j→i}(t_{j−1}, …, t_i)`
    Down,
    /// `S^rev_{i→j}(t_i, …, t_{j−1})`
    RevUp,
    /// `S^rev_{j→i}(t_{j−1}, …, t_i)`
    RevDown,
}

/// A chain with `i ≤ j`; `args` are listed in the order the chain's notation lists them.
#[derive(Clone, Debug)]
pub struct ChainArgs {
    pub kind: ChainKind,
    pub i: usize,
    pub j: usize,
    pub args: Vec<Complex64>,
}

impl ChainArgs {
    pub fn new(kind: ChainKind, i: usize, j: usize, args: Vec<Complex64>) -> Self {
        ChainArgs { kind, i, j, args }
    }

    fn validate(&self) -> Result<()> {
        if self.i < 1 || self.i > self.j || self.args.len() != self.j - self.i {
            return Err(Error::IndexOutOfRange(format!(
                "chain {:?} {}..{} with {} arguments",
                self.kind,
                self.i,
                self.j,
                self.args.len()
            )));
        }
        Ok(())
    }

    /// `t_q` for `i ≤ q < j`.
    fn t(&self, q: usize) -> Complex64 {
        match self.kind {
            ChainKind::Up | ChainKind::RevUp => self.args[q - self.i],
            ChainKind::Down | ChainKind::RevDown => self.args[self.j - 1 - q],
        }
    }

    /// `Σ_p^q = t_p + … + t_q`
    fn sigma(&self, p: usize, q: usize) -> Complex64 {
        (p..=q).map(|x| self.t(x)).sum()
    }

    /// The factors, leftmost first.
    pub fn factors(&self) -> Result<Vec<Factor>> {
        self.validate()?;
        let (i, j) = (self.i, self.j);
        let f = |pos, z| Factor { pos, z };
        Ok(match self.kind {
            ChainKind::Up => (i..j).map(|q| f(q, self.sigma(q, j - 1))).collect(),
            ChainKind::Down => (i..j).rev().map(|q| f(q, self.sigma(i, q))).collect(),
            ChainKind::RevUp => (i..j).map(|q| f(q, self.sigma(i, q))).collect(),
            ChainKind::RevDown => (i..j).rev().map(|q| f(q, self.sigma(q, j - 1))).collect(),
        })
    }
}

/// Shift all factor positions by `by` (embedding into the right-hand tensorands).
pub fn shifted(f: &[Factor], by: usize) -> Vec<Factor> {
    f.iter()
        .map(|x| Factor {
            pos: x.pos + by,
            z: x.z,
        })
        .collect()
}

/// Factors of `T_d(z_1, …, z_{d−1}) = S_{2→1}(z_1) S_{3→1}(z_1, z_2) ⋯ S_{d→1}(z_1, …, z_{d−1})`.
pub fn t_d_factors(z: &[Complex64]) -> Vec<Factor> {
    let d = z.len() + 1;
    let mut out = Vec::new();
    for m in 2..=d {
        let c = ChainArgs::new(ChainKind::Down, 1, m, z[..m - 1].to_vec());
        out.extend(c.factors().expect("well-formed chain"));
    }
    out
}

/// Factors of `F_d(z) = T_d(z, …, z)`.
pub fn f_d_factors(z: Complex64, d: usize) -> Vec<Factor> {
    if d < 2 {
        return vec![];
    }
    t_d_factors(&vec![z; d - 1])
}

/// Factors of `M_{a,b}(z; x; y)` assembled row by row:
/// `S^rev_{a→a+b}(z, y) S^rev_{a−1→a+b−1}(z+x_1, y) ⋯ S^rev_{1→b+1}(z+Σx, y)`.
pub fn m_ab_factors(a: usize, b: usize, z: Complex64, x: &[Complex64], y: &[Complex64]) -> Result<Vec<Factor>> {
    if a == 0 || b == 0 {
        return Ok(vec![]);
    }
    if x.len() != a - 1 || y.len() != b - 1 {
        return Err(Error::IndexOutOfRange(format!(
            "M_{{{a},{b}}} needs {} and {} arguments",
            a - 1,
            b - 1
        )));
    }
    let mut out = Vec::new();
    let mut first = z;
    for p in 0..a {
        if p > 0 {
            first += x[p - 1];
        }
        let mut args = vec![first];
        args.extend_from_slice(y);
        out.extend(ChainArgs::new(ChainKind::RevUp, a - p, a - p + b, args).factors()?);
    }
    Ok(out)
}

/// Factors of `M_{a,b}(z; x; y)` assembled column by column:
/// `S^rev_{a+1→1}(z, x) S^rev_{a+2→2}(z+y_1, x) ⋯ S^rev_{a+b→b}(z+Σy, x)`.
pub fn m_ab_factors_by_columns(
    a: usize,
    b: usize,
    z: Complex64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Vec<Factor>> {
    if a == 0 || b == 0 {
        return Ok(vec![]);
    }
    if x.len() != a - 1 || y.len() != b - 1 {
        return Err(Error::IndexOutOfRange("M_{a,b} argument counts".into()));
    }
    let mut out = Vec::new();
    let mut first = z;
    for c in 0..b {
        if c > 0 {
            first += y[c - 1];
        }
        let mut args = vec![first];
        args.extend_from_slice(x);
        out.extend(ChainArgs::new(ChainKind::RevDown, c + 1, a + c + 1, args).factors()?);
    }
    Ok(out)
}

/// Evaluates factor lists, caching `R(z)` by argument.
pub struct ChainEvaluator<'a> {
    pub params: &'a AlgebraParams,
    cache: HashMap<(u64, u64), (CMatrix, f64)>,
}

impl<'a> ChainEvaluator<'a> {
    pub fn new(params: &'a AlgebraParams) -> Self {
        ChainEvaluator {
            params,
            cache: HashMap::new(),
        }
    }

    fn r(&mut self, z: Complex64) -> Result<(CMatrix, f64)> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.get(&key) {
            return Ok(v.clone());
        }
        let m = r_matrix(self.params, z)?;
        let nrm = norm2(&m);
        // a zero factor keeps its raw entries
        let m = if nrm > 0.0 { m.unscale(nrm) } else { m };
        let nrm = if nrm > 0.0 { nrm } else { 1.0 };
        self.cache.insert(key, (m.clone(), nrm));
        Ok((m, nrm))
    }

    /// The product of `factors` (leftmost first) on `V^⊗d`.
    pub fn product(&mut self, factors: &[Factor], d: usize) -> Result<OperatorVd> {
        let n = self.params.n;
        let dim = pow(n, d);
        let mut mat = CMatrix::identity(dim, dim);
        let mut log_scale = 0.0;
        for f in factors.iter().rev() {
            if f.pos < 1 || f.pos + 1 > d {
                return Err(Error::IndexOutOfRange(format!("factor at {} in d={d}", f.pos)));
            }
            let (r, nrm) = self.r(f.z)?;
            apply_pair_left(&mut mat, &r, n, f.pos, d);
            log_scale += nrm.ln();
        }
        Ok(OperatorVd {
            n,
            d,
            mat,
            norm_bound: 1.0,
            log_scale,
        })
    }

    pub fn chain(&mut self, c: &ChainArgs, d: usize) -> Result<OperatorVd> {
        self.product(&c.factors()?, d)
    }

    pub fn t_d(&mut self, z: &[Complex64]) -> Result<OperatorVd> {
        self.product(&t_d_factors(z), z.len() + 1)
    }

    pub fn f_d(&mut self, z: Complex64, d: usize) -> Result<OperatorVd> {
        self.product(&f_d_factors(z, d), d)
    }

    pub fn m_ab(&mut self, a: usize, b: usize, z: Complex64, x: &[Complex64], y: &[Complex64]) -> Result<OperatorVd> {
        self.product(&m_ab_factors(a, b, z, x, y)?, a + b)
    }
}

/// `m ← A_{pos,pos+1} m` for an `n²×n²` matrix `a`.
pub fn apply_pair_left(m: &mut CMatrix, a: &CMatrix, n: usize, pos: usize, d: usize) {
    let n2 = n * n;
    let stride = pow(n, d - pos - 1);
    let block = n2 * stride;
    let dim = m.nrows();
    let mut nz: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n2];
    for c in 0..n2 {
        for r in 0..n2 {
            let v = a[(r, c)];
            if v.re != 0.0 || v.im != 0.0 {
                nz[c].push((r, v));
            }
        }
    }
    let mut tmp = vec![Complex64::new(0.0, 0.0); n2];
    let cols = m.ncols();
    let data = m.as_mut_slice();
    for col in 0..cols {
        let column = &mut data[col * dim..(col + 1) * dim];
        for hi in (0..dim).step_by(block) {
            for lo in 0..stride {
                tmp.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                for (c, entries) in nz.iter().enumerate() {
                    let v = column[hi + c * stride + lo];
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    for &(r, w) in entries {
                        tmp[r] += w * v;
                    }
                }
                for (r, &x) in tmp.iter().enumerate() {
                    column[hi + r * stride + lo] = x;
                }
            }
        }
    }
}

/// Dense `A ⊗ B` of two operators on `V^⊗a`, `V^⊗b`.
pub fn tensor(a: &OperatorVd, b: &OperatorVd) -> OperatorVd {
    OperatorVd {
        n: a.n,
        d: a.d + b.d,
        mat: kron(&a.mat, &b.mat),
        norm_bound: a.norm_bound * b.norm_bound,
        log_scale: a.log_scale + b.log_scale,
    }
}

/// The matrix whose image is the relation space `rel ⊂ V⊗V`: `R_τ(τ)`, or the
/// exact limit `R_+(ζ)` when `τ = ζ ∈ (1/n)Λ`.
pub fn relation_operator(params: &AlgebraParams) -> Result<CMatrix> {
    if params.tau_on_torsion() {
        let n = params.n as f64;
        let (x, y) = params.theta.lattice.coords(params.tau);
        let zeta = HalfPeriodPoint::new((n * x).round() as i64, (n * y).round() as i64);
        Ok(r_plus_limit(params, zeta, 1))
    } else {
        r_matrix(params, params.tau)
    }
}

/// `V^⊗s ⊗ U ⊗ V^⊗t` for a subspace `U ⊂ V⊗V`.
pub fn embed_subspace(u: &Subspace, n: usize, s: usize, t: usize) -> Subspace {
    let basis = kron(
        &kron(&CMatrix::identity(pow(n, s), pow(n, s)), &u.basis),
        &CMatrix::identity(pow(n, t), pow(n, t)),
    );
    Subspace {
        ambient_dim: basis.nrows(),
        basis,
        tol_used: u.tol_used,
    }
}

/// `W_i = V^⊗(i−1) ⊗ U ⊗ V^⊗(d−i−1)` for `i = 1..d−1`.
pub fn embedded_family(u: &Subspace, n: usize, d: usize) -> Vec<Subspace> {
    (1..d).map(|i| embed_subspace(u, n, i - 1, d - i - 1)).collect()
}

/// `Σ_{s+t+2=d} V^⊗s ⊗ rel ⊗ V^⊗t`.
pub fn relation_space(params: &AlgebraParams, d: usize) -> Result<Subspace> {
    if d < 2 {
        return Err(Error::IndexOutOfRange(format!("relation space needs d >= 2, got {d}")));
    }
    let rel = image(&relation_operator(params)?, &params.ranks)?;
    sum_of_embedded(&rel, params, d)
}

pub fn sum_of_embedded(u: &Subspace, params: &AlgebraParams, d: usize) -> Result<Subspace> {
    let fam = embedded_family(u, params.n, d);
    let refs: Vec<&Subspace> = fam.iter().collect();
    subspace_sum(&refs, &params.ranks)
}

pub fn intersection_of_embedded(u: &Subspace, params: &AlgebraParams, d: usize) -> Result<Subspace> {
    let fam = embedded_family(u, params.n, d);
    let refs: Vec<&Subspace> = fam.iter().collect();
    subspace_intersect(&refs, &params.ranks)
}

/// `⋂_{s+t+2=d} V^⊗s ⊗ ker A ⊗ V^⊗t`.
pub fn kernel_intersection(a: &CMatrix, params: &AlgebraParams, d: usize) -> Result<Subspace> {
    let k = kernel(a, &params.ranks)?;
    intersection_of_embedded(&k, params, d)
}
