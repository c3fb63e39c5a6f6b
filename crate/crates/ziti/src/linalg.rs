//! Dense LU and block-tridiagonal elimination.

use crate::{Error, Real, Result};

/// LU factorization with partial pivoting of a row-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    /// Returns `None` when a pivot is zero or not finite.
    pub fn factor(mut a: Vec<T>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n, "matrix is not {n}x{n}");
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let prow = &top[k * n..];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] / piv;
                row[k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        row[j] = row[j] - l * prow[j];
                    }
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`, overwriting `b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        self.solve_rows_in_place(b, 1);
    }

    /// Solves `A X = B` for a row-major `n x m` right-hand side, overwriting it.
    pub fn solve_rows_in_place(&self, b: &mut [T], m: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * m);
        let src = b.to_vec();
        for (i, &p) in self.perm.iter().enumerate() {
            b[i * m..(i + 1) * m].copy_from_slice(&src[p * m..(p + 1) * m]);
        }
        for i in 1..n {
            let (done, rest) = b.split_at_mut(i * m);
            let row = &mut rest[..m];
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != T::zero() {
                    let src = &done[k * m..(k + 1) * m];
                    for (r, &s) in row.iter_mut().zip(src) {
                        *r = *r - l * s;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = b.split_at_mut((i + 1) * m);
            let row = &mut head[i * m..];
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u != T::zero() {
                    let src = &tail[(k - i - 1) * m..(k - i) * m];
                    for (r, &s) in row.iter_mut().zip(src) {
                        *r = *r - u * s;
                    }
                }
            }
            let d = self.lu[i * n + i];
            for r in row.iter_mut() {
                *r = *r / d;
            }
        }
    }
}

/// Square block stored as sparse rows of `(column, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock<T> {
    pub n: usize,
    pub rows: Vec<Vec<(usize, T)>>,
}

impl<T: Real> SparseBlock<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|i| vec![(i, T::one())]).collect(),
        }
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let row = &mut self.rows[i];
        if let Some(e) = row.iter_mut().find(|e| e.0 == j) {
            e.1 = e.1 + v;
        } else {
            row.push((j, v));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|e| e.1 == T::zero()))
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n * self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[i * self.n + j] = d[i * self.n + j] + v;
            }
        }
        d
    }

    /// `y += self * x`.
    pub fn mul_add(&self, x: &[T], y: &mut [T]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            let mut s = T::zero();
            for &(j, v) in row {
                s = s + v * x[j];
            }
            *yi = *yi + s;
        }
    }
}

/// Block-tridiagonal system in block-row order.
///
/// Block row `k` holds `lower[k] X_{k-1} + diag[k] X_k + upper[k] X_{k+1} = rhs_k`;
/// `lower[0]` and the last `upper` are ignored and normally empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalSystem<T> {
    pub block_size: usize,
    pub lower: Vec<SparseBlock<T>>,
    pub diag: Vec<SparseBlock<T>>,
    pub upper: Vec<SparseBlock<T>>,
    pub rhs: Vec<T>,
}

impl<T: Real> BlockTridiagonalSystem<T> {
    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.block_size * self.n_blocks()
    }

    fn validate(&self) -> Result<()> {
        let nb = self.n_blocks();
        let n = self.block_size;
        if nb == 0 || n == 0 {
            return Err(Error::Structure("empty system".into()));
        }
        if self.lower.len() != nb || self.upper.len() != nb || self.rhs.len() != nb * n {
            return Err(Error::Structure("inconsistent block counts".into()));
        }
        let bad = |b: &SparseBlock<T>| {
            b.n != n || b.rows.len() != n || b.rows.iter().flatten().any(|e| e.0 >= n)
        };
        if self.lower.iter().chain(&self.diag).chain(&self.upper).any(bad) {
            return Err(Error::Structure("block of wrong size".into()));
        }
        Ok(())
    }

    /// `M x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.block_size;
        let nb = self.n_blocks();
        let mut y = vec![T::zero(); n * nb];
        for k in 0..nb {
            let yk = &mut y[k * n..(k + 1) * n];
            self.diag[k].mul_add(&x[k * n..(k + 1) * n], yk);
            if k > 0 {
                self.lower[k].mul_add(&x[(k - 1) * n..k * n], yk);
            }
            if k + 1 < nb {
                self.upper[k].mul_add(&x[(k + 1) * n..(k + 2) * n], yk);
            }
        }
        y
    }

    /// `||M x - F||_inf / ||F||_inf`, or the absolute residual when `F = 0`.
    pub fn relative_residual(&self, x: &[T]) -> T {
        let r = self.apply(x);
        let num = r
            .iter()
            .zip(&self.rhs)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        let den = self.rhs.iter().fold(T::zero(), |m, &b| m.max(b.abs()));
        if den > T::zero() {
            num / den
        } else {
            num
        }
    }

    /// Block Thomas elimination with dense pivot blocks.
    pub fn solve(&self) -> Result<Vec<T>> {
        self.validate()?;
        let n = self.block_size;
        let nb = self.n_blocks();
        // x_k = y_k - C_k x_{k+1}, with C_k = S_k^{-1} U_k.
        let mut coupling: Vec<Vec<T>> = Vec::with_capacity(nb);
        let mut y: Vec<T> = Vec::with_capacity(n * nb);
        for k in 0..nb {
            let mut s = self.diag[k].to_dense();
            let mut g = self.rhs[k * n..(k + 1) * n].to_vec();
            if k > 0 {
                let prev_c = &coupling[k - 1];
                let prev_y = &y[(k - 1) * n..k * n];
                for (i, row) in self.lower[k].rows.iter().enumerate() {
                    for &(j, v) in row {
                        if v == T::zero() {
                            continue;
                        }
                        let src = &prev_c[j * n..(j + 1) * n];
                        for (d, &c) in s[i * n..(i + 1) * n].iter_mut().zip(src) {
                            *d = *d - v * c;
                        }
                        g[i] = g[i] - v * prev_y[j];
                    }
                }
            }
            let lu = DenseLu::factor(s, n).ok_or(Error::SingularBlock { block: k })?;
            lu.solve_in_place(&mut g);
            y.extend_from_slice(&g);
            if k + 1 < nb {
                let mut c = self.upper[k].to_dense();
                lu.solve_rows_in_place(&mut c, n);
                coupling.push(c);
            }
        }
        let mut x = y;
        for k in (0..nb.saturating_sub(1)).rev() {
            let c = &coupling[k];
            let (head, tail) = x.split_at_mut((k + 1) * n);
            let next = &tail[..n];
            for (i, xi) in head[k * n..].iter_mut().enumerate() {
                let mut s = T::zero();
                for (cv, &nv) in c[i * n..(i + 1) * n].iter().zip(next) {
                    s = s + *cv * nv;
                }
                *xi = *xi - s;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("block solve".into()));
        }
        Ok(x)
    }
}
