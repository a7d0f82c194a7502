//! Banded LU with partial pivoting, plus a bordered solve for systems
//! with a few dense rows/columns appended to a banded core.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Band matrix with `kl` subdiagonals and `ku` superdiagonals. Each row
/// stores `ku + 2·kl + 1` entries (the extra `kl` superdiagonals hold
/// pivoting fill-in).
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = ku + 2 * kl + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    /// True when (i, j) lies in the logical band (fill region excluded).
    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn reset(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl; // widest column reach after fill
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            let i_max = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=i_max {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            ipiv[k] = p;
            if p != k {
                let j_max = (k + reach).min(n - 1);
                for j in k..=j_max {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set(k, j, b);
                    self.set(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            let j_max = (k + reach).min(n - 1);
            for i in k + 1..=i_max {
                let m = self.get(i, k) / pivot;
                self.set(i, k, m);
                if m != 0.0 {
                    for j in k + 1..=j_max {
                        let v = self.get(i, j) - m * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Ok(BandLu { mat: self, ipiv })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    mat: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Solves A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.mat.n;
        assert_eq!(b.len(), n);
        let kl = self.mat.kl;
        let reach = self.mat.ku + kl;
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                let i_max = (k + kl).min(n - 1);
                for i in k + 1..=i_max {
                    b[i] -= self.mat.get(i, k) * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            let j_max = (i + reach).min(n - 1);
            for j in i + 1..=j_max {
                s -= self.mat.get(i, j) * b[j];
            }
            b[i] = s / self.mat.get(i, i);
        }
    }
}

/// Solves the bordered system
///
/// ```text
/// [ A  B ] [x]   [f]
/// [ C  D ] [y] = [g]
/// ```
///
/// where A is banded (n×n), B holds `m` dense columns, C `m` dense rows
/// and D is m×m (row-major), via block elimination on the Schur
/// complement S = D − C A⁻¹ B.
pub fn solve_bordered(
    a: BandMatrix,
    border_cols: &[Vec<f64>],
    border_rows: &[Vec<f64>],
    corner: &[f64],
    f: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.n();
    let m = border_cols.len();
    assert_eq!(border_rows.len(), m);
    assert_eq!(corner.len(), m * m);
    assert_eq!(f.len(), n);
    assert_eq!(g.len(), m);

    let lu = a.factor()?;
    let mut xf = f.to_vec();
    lu.solve(&mut xf);

    let mut cols_solved: Vec<Vec<f64>> = Vec::with_capacity(m);
    for col in border_cols {
        assert_eq!(col.len(), n);
        let mut x = col.clone();
        lu.solve(&mut x);
        cols_solved.push(x);
    }

    let dot = |r: &[f64], v: &[f64]| -> f64 { r.iter().zip(v).map(|(a, b)| a * b).sum() };
    let mut schur = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        for c in 0..m {
            schur[r * m + c] = corner[r * m + c] - dot(&border_rows[r], &cols_solved[c]);
        }
        rhs[r] = g[r] - dot(&border_rows[r], &xf);
    }
    let y = solve_dense_small(&mut schur, &mut rhs, m)?;

    let mut x = xf;
    for (j, col) in cols_solved.iter().enumerate() {
        let yj = y[j];
        if yj != 0.0 {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi -= yj * ci;
            }
        }
    }
    Ok((x, y))
}

/// Gaussian elimination with partial pivoting on a small dense system,
/// in place; returns the solution.
fn solve_dense_small(a: &mut [f64], b: &mut [f64], m: usize) -> Result<Vec<f64>> {
    for k in 0..m {
        let mut p = k;
        let mut best = a[k * m + k].abs();
        for i in k + 1..m {
            let v = a[i * m + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::SingularMatrix { column: k });
        }
        if p != k {
            for j in 0..m {
                a.swap(k * m + j, p * m + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..m {
            let f = a[i * m + k] / a[k * m + k];
            if f != 0.0 {
                for j in k..m {
                    a[i * m + j] -= f * a[k * m + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = b[i];
        for j in i + 1..m {
            s -= a[i * m + j] * x[j];
        }
        x[i] = s / a[i * m + i];
    }
    Ok(x)
}
