//! Exact classical (`τ = 0`) dimensions: the subspaces `Λ_{i,i+1}`, their sums
//! `Σ_s` and intersections `I_t`, and the shuffle decomposition of `S_{a+b}`.

use crate::error::{Error, Result};
use crate::exact::{exact_rank, ExactMatrix};
use crate::tensorops::{permutations, pow};
use std::collections::HashMap;

pub const MAX_D: usize = 5;
pub const MAX_SHUFFLE: usize = 6;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalSubspace {
    /// `Λ_{i,i+1} = V^⊗(i−1) ⊗ Alt²V ⊗ V^⊗(d−i−1)`
    Lambda(usize),
    /// `Σ_s = Λ_{1,2} + … + Λ_{s,s+1}`
    Sigma(usize),
    /// `I_t = Λ_{d−t,d−t+1} ∩ … ∩ Λ_{d−1,d}`
    I(usize),
}

fn check_nd(n: usize, d: usize) -> Result<()> {
    if n < 1 || d > MAX_D {
        return Err(Error::Cap(format!("classical oracle supports d <= {MAX_D}, got d={d}")));
    }
    Ok(())
}

fn lambda(n: usize, d: usize, i: usize) -> ExactMatrix {
    let before = pow(n, i - 1);
    let after = pow(n, d - i - 1);
    let mut cols = Vec::new();
    for p in 0..before {
        for a in 0..n {
            for b in a + 1..n {
                for q in 0..after {
                    let mut v = vec![0i64; pow(n, d)];
                    v[(p * n * n + a * n + b) * after + q] = 1;
                    v[(p * n * n + b * n + a) * after + q] = -1;
                    cols.push(v);
                }
            }
        }
    }
    ExactMatrix::from_columns(pow(n, d), &cols)
}

/// Integer spanning set (as columns) of the requested classical subspace.
pub fn classical_subspaces(n: usize, d: usize, which: ClassicalSubspace) -> Result<ExactMatrix> {
    check_nd(n, d)?;
    let dim = pow(n, d);
    match which {
        ClassicalSubspace::Lambda(i) => {
            if i < 1 || i + 1 > d {
                return Err(Error::IndexOutOfRange(format!("Lambda_{i} in d={d}")));
            }
            Ok(lambda(n, d, i))
        }
        ClassicalSubspace::Sigma(s) => {
            if s + 1 > d.max(1) {
                return Err(Error::IndexOutOfRange(format!("Sigma_{s} in d={d}")));
            }
            Ok((1..=s).fold(ExactMatrix::zeros(dim, 0), |acc, i| acc.hstack(&lambda(n, d, i))))
        }
        ClassicalSubspace::I(t) => {
            if t + 1 > d.max(1) {
                return Err(Error::IndexOutOfRange(format!("I_{t} in d={d}")));
            }
            let mut acc = ExactMatrix::identity(dim);
            for j in d - t..d {
                acc = acc.column_span_intersection(&lambda(n, d, j));
            }
            Ok(acc)
        }
    }
}

/// `dim(Σ_ℓ ∩ I_r)` for `ℓ + r = d − 1` in exact arithmetic.
pub fn classical_w_dim(n: usize, d: usize, ell: usize, r: usize) -> Result<usize> {
    if d == 0 || ell + r + 1 != d {
        return Err(Error::IndexOutOfRange(format!(
            "need l + r = d - 1, got l={ell} r={r} d={d}"
        )));
    }
    let s = classical_subspaces(n, d, ClassicalSubspace::Sigma(ell))?;
    let i = classical_subspaces(n, d, ClassicalSubspace::I(r))?;
    let ds = exact_rank(&s);
    let di = exact_rank(&i);
    Ok(ds + di - exact_rank(&s.hstack(&i)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalDims {
    pub n: usize,
    pub d: usize,
    /// `w[ℓ] = dim(Σ_ℓ ∩ I_{d−1−ℓ})`
    pub w: Vec<usize>,
    /// `sigma[s] = dim Σ_s`, `s = 0..d−1`
    pub sigma: Vec<usize>,
    /// `i[t] = dim I_t`, `t = 0..d−1`
    pub i: Vec<usize>,
}

pub fn classical_dims(n: usize, d: usize) -> Result<ClassicalDims> {
    check_nd(n, d)?;
    let mut sigma = Vec::new();
    let mut i = Vec::new();
    let mut w = Vec::new();
    for s in 0..d {
        sigma.push(exact_rank(&classical_subspaces(n, d, ClassicalSubspace::Sigma(s))?));
        i.push(exact_rank(&classical_subspaces(n, d, ClassicalSubspace::I(s))?));
        w.push(classical_w_dim(n, d, s, d - 1 - s)?);
    }
    Ok(ClassicalDims { n, d, w, sigma, i })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassicalHilbert {
    pub poly_dim: usize,
    pub ext_dim: usize,
}

/// `(C(n+d−1, d), C(n, d))`, cross-checked against exact ranks of the integer
/// symmetriser and antisymmetriser when `d ≤ 4`.
pub fn classical_hilbert(n: usize, d: usize) -> Result<ClassicalHilbert> {
    let h = ClassicalHilbert {
        poly_dim: binomial(n + d - 1, d),
        ext_dim: binomial(n, d),
    };
    if d <= 4 && pow(n, d) <= 256 {
        let (sym, alt) = integer_symmetrizers(n, d);
        let (rs, ra) = (exact_rank(&sym), exact_rank(&alt));
        if rs != h.poly_dim || ra != h.ext_dim {
            return Err(Error::InvalidParams(format!(
                "symmetriser ranks ({rs}, {ra}) disagree with binomials ({}, {})",
                h.poly_dim, h.ext_dim
            )));
        }
    }
    Ok(h)
}

/// `Σ σ` and `Σ sgn(σ) σ` on `(Z^n)^⊗d` as integer matrices.
pub fn integer_symmetrizers(n: usize, d: usize) -> (ExactMatrix, ExactMatrix) {
    let dim = pow(n, d);
    let mut sym = vec![0i64; dim * dim];
    let mut alt = vec![0i64; dim * dim];
    for (p, s) in permutations(d) {
        for idx in 0..dim {
            let mut ds = vec![0; d];
            let mut x = idx;
            for t in (0..d).rev() {
                ds[t] = x % n;
                x /= n;
            }
            let mut out = vec![0; d];
            for t in 0..d {
                out[p[t]] = ds[t];
            }
            let o = out.iter().fold(0, |acc, &v| acc * n + v);
            sym[o * dim + idx] += 1;
            alt[o * dim + idx] += s;
        }
    }
    (
        ExactMatrix::from_i64(dim, dim, &sym),
        ExactMatrix::from_i64(dim, dim, &alt),
    )
}

type Perm = Vec<usize>;

fn compose(f: &Perm, g: &Perm) -> Perm {
    g.iter().map(|&x| f[x]).collect()
}

fn group_product(a: &HashMap<Perm, i64>, b: &HashMap<Perm, i64>) -> HashMap<Perm, i64> {
    let mut out = HashMap::new();
    for (f, x) in a {
        for (g, y) in b {
            *out.entry(compose(f, g)).or_insert(0) += x * y;
        }
    }
    out
}

/// Checks `(Σ_{ω∈S_{a|b}} ω)(Σ_{α∈S_{a|∘}} α)(Σ_{β∈S_{∘|b}} β) = Σ_{σ∈S_{a+b}} σ`
/// in the integer group algebra.
pub fn shuffle_identity_check(a: usize, b: usize) -> Result<bool> {
    let d = a + b;
    if d > MAX_SHUFFLE {
        return Err(Error::Cap(format!("shuffle check supports a+b <= {MAX_SHUFFLE}")));
    }
    let all: Vec<Perm> = permutations(d).into_iter().map(|(p, _)| p).collect();
    let ones = |keep: &dyn Fn(&Perm) -> bool| -> HashMap<Perm, i64> {
        all.iter().filter(|p| keep(p)).map(|p| (p.clone(), 1)).collect()
    };
    let shuffles = ones(&|p: &Perm| p[..a].windows(2).all(|w| w[0] < w[1]) && p[a..].windows(2).all(|w| w[0] < w[1]));
    let left = ones(&|p: &Perm| (a..d).all(|i| p[i] == i));
    let right = ones(&|p: &Perm| (0..a).all(|i| p[i] == i));
    let prod = group_product(&group_product(&shuffles, &left), &right);
    Ok(prod.len() == all.len() && all.iter().all(|p| prod.get(p) == Some(&1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 3), 10);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn lambda_dims() {
        let l = classical_subspaces(2, 3, ClassicalSubspace::Lambda(1)).unwrap();
        assert_eq!(exact_rank(&l), 2);
        for (n, d) in [(2, 3), (3, 3), (2, 4), (3, 4)] {
            let s = classical_subspaces(n, d, ClassicalSubspace::Sigma(d - 1)).unwrap();
            assert_eq!(exact_rank(&s), pow(n, d) - binomial(n + d - 1, d));
            let i = classical_subspaces(n, d, ClassicalSubspace::I(d - 1)).unwrap();
            assert_eq!(exact_rank(&i), binomial(n, d));
        }
    }

    #[test]
    fn w_dims_examples() {
        assert_eq!(classical_w_dim(2, 3, 1, 1).unwrap(), 0);
        // empty sum
        assert_eq!(classical_w_dim(3, 4, 0, 3).unwrap(), 0);
        assert_eq!(classical_w_dim(3, 4, 3, 0).unwrap(), 81 - 15);
        assert!(classical_w_dim(3, 4, 1, 1).is_err());
    }

    #[test]
    fn inclusion_exclusion() {
        for (n, d) in [(2, 3), (2, 4), (3, 3), (3, 4), (2, 5)] {
            for ell in 1..d {
                let r = d - 1 - ell;
                let w = classical_w_dim(n, d, ell, r).unwrap();
                let xz = (pow(n, ell) - binomial(n + ell - 1, ell)) * binomial(n, r + 1);
                let yz = pow(n, ell - 1) * binomial(n, r + 2);
                let xyz = classical_w_dim(n, d, ell - 1, r + 1).unwrap();
                assert_eq!(w, xz + yz - xyz, "n={n} d={d} l={ell}");
            }
        }
    }

    #[test]
    fn hilbert_values() {
        assert_eq!(
            classical_hilbert(3, 2).unwrap(),
            ClassicalHilbert {
                poly_dim: 6,
                ext_dim: 3
            }
        );
        assert_eq!(
            classical_hilbert(4, 4).unwrap(),
            ClassicalHilbert {
                poly_dim: 35,
                ext_dim: 1
            }
        );
        for n in 1..=4 {
            for d in 1..=4 {
                classical_hilbert(n, d).unwrap();
            }
        }
        let (sym, _) = integer_symmetrizers(3, 3);
        assert_eq!(exact_rank(&sym), 10);
    }

    #[test]
    fn shuffles() {
        for (a, b) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2), (3, 3)] {
            assert!(shuffle_identity_check(a, b).unwrap(), "({a},{b})");
        }
        assert!(shuffle_identity_check(4, 3).is_err());
    }
}
