//! Integer matrices with exact rank and nullspace.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    pub rows: usize,
    pub cols: usize,
    /// row-major
    pub data: Vec<BigInt>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, v: &[i64]) -> Self {
        assert_eq!(v.len(), rows * cols);
        ExactMatrix {
            rows,
            cols,
            data: v.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(len: usize, cols: &[Vec<i64>]) -> Self {
        let mut m = Self::zeros(len, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), len);
            for (i, &x) in c.iter().enumerate() {
                if x != 0 {
                    m.set(i, j, x);
                }
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = BigInt::from(v);
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn hstack(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            data.extend_from_slice(&other.data[r * other.cols..(r + 1) * other.cols]);
        }
        ExactMatrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    pub fn mul(&self, other: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ExactMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    fn rows_vec(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec())
            .collect()
    }

    /// Integer basis of `{x : M x = 0}` as matrix columns.
    pub fn nullspace(&self) -> ExactMatrix {
        let (rows, pivots) = reduced_form(self.rows_vec(), self.cols);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = ExactMatrix::zeros(self.cols, free.len());
        let lcm = pivots
            .iter()
            .enumerate()
            .fold(BigInt::one(), |acc, (i, &pc)| acc.lcm(&rows[i][pc]));
        for (k, &f) in free.iter().enumerate() {
            out.data[f * free.len() + k] = lcm.clone();
            for (i, &pc) in pivots.iter().enumerate() {
                let p = &rows[i][pc];
                let v = -(&rows[i][f] * (&lcm / p));
                out.data[pc * free.len() + k] = v;
            }
        }
        out
    }

    /// Spanning set of the intersection of the column spans of `self` and `other`.
    pub fn column_span_intersection(&self, other: &ExactMatrix) -> ExactMatrix {
        let mut neg = other.clone();
        for x in neg.data.iter_mut() {
            *x = -x.clone();
        }
        let ker = self.hstack(&neg).nullspace();
        // keep the first block of each kernel vector
        let mut top = ExactMatrix::zeros(self.cols, ker.cols);
        for r in 0..self.cols {
            for c in 0..ker.cols {
                top.data[r * ker.cols + c] = ker.get(r, c).clone();
            }
        }
        self.mul(&top)
    }
}

/// Row reduction over Z keeping rows primitive; each pivot column is cleared
/// in every other row. Returns the nonzero rows and their pivot columns.
fn reduced_form(mut rows: Vec<Vec<BigInt>>, cols: usize) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        // smallest nonzero pivot keeps the numbers small
        let pick = (r..rows.len())
            .filter(|&i| !rows[i][c].is_zero())
            .min_by(|&a, &b| rows[a][c].abs().cmp(&rows[b][c].abs()));
        let Some(p) = pick else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let g = rows[r][c].gcd(&rows[i][c]);
            let a = &rows[i][c] / &g;
            let b = &rows[r][c] / &g;
            let (pivot_row, row) = if i < r {
                let (lo, hi) = rows.split_at_mut(r);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = rows.split_at_mut(i);
                (&lo[r], &mut hi[0])
            };
            for k in 0..cols {
                let v = &row[k] * &b - &pivot_row[k] * &a;
                row[k] = v;
            }
            primitive(row);
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

fn primitive(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g > BigInt::one() {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Exact rank by fraction-free (Bareiss) elimination.
pub fn exact_rank(m: &ExactMatrix) -> usize {
    let mut a = m.rows_vec();
    let rows = m.rows;
    let cols = m.cols;
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for k in c + 1..cols {
                let v = (&a[r][c] * &a[i][k] - &a[i][c] * &a[r][k]) / &prev;
                a[i][k] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}
