//! Sparse symmetric matrices and a direct envelope (profile) Cholesky solver.
//!
//! Matrices store the lower triangle in CSR form with sorted column indices.
//! The factorization keeps the envelope of the assembled matrix, which stays
//! small for the banded systems produced by structured meshes. All operations
//! are deterministic for fixed inputs.

use crate::{Error, Result};
use std::io::Write;

/// Accumulates (row, col, value) contributions; duplicates are summed.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds a symmetric contribution; only the lower triangle is kept.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        if value == 0.0 {
            return;
        }
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        self.entries.push((r, c, value));
    }

    pub fn build(mut self) -> SparseSymMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.dim {
            row_counts[r + 1] += row_counts[r];
        }
        SparseSymMatrix {
            dim: self.dim,
            row_ptr: row_counts,
            col_idx,
            values,
        }
    }
}

/// Symmetric sparse matrix storing the lower triangle (CSR, sorted columns).
#[derive(Debug, Clone, Default)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored lower-triangle entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x, expanding the symmetric part.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.fill(0.0);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                acc += v * x[c];
                if c != r {
                    y[c] += v * x[r];
                }
            }
            y[r] += acc;
        }
    }

    /// Quadratic form x' A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                acc += if c == r {
                    v * x[r] * x[r]
                } else {
                    2.0 * v * x[r] * x[c]
                };
            }
        }
        acc
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        m
    }

    /// Writes the matrix in coordinate text format (row col value per line).
    pub fn write_coordinate<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# symmetric sparse {} x {}, lower triangle", self.dim, self.dim)?;
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Cholesky factor L (A = L L') stored by rows over the matrix envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    dim: usize,
    first_col: Vec<usize>,
    offsets: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `sum_i coef_i * mat_i`, which must be SPD.
    pub fn factor(parts: &[(f64, &SparseSymMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, m)| m.dim())
            .ok_or_else(|| Error::InvalidArgument("no matrices to factor".into()))?;
        for (_, m) in parts {
            if m.dim() != dim {
                return Err(Error::SizeMismatch {
                    expected: dim,
                    got: m.dim(),
                    context: "factor parts".into(),
                });
            }
        }

        // Envelope: first stored column per row, over the union pattern.
        let mut first_col: Vec<usize> = (0..dim).collect();
        for (_, m) in parts {
            for r in 0..dim {
                if m.row_ptr[r] < m.row_ptr[r + 1] {
                    first_col[r] = first_col[r].min(m.col_idx[m.row_ptr[r]]);
                }
            }
        }
        let mut offsets = vec![0usize; dim + 1];
        for r in 0..dim {
            offsets[r + 1] = offsets[r] + (r - first_col[r] + 1);
        }
        let mut vals = vec![0.0f64; offsets[dim]];
        for (coef, m) in parts {
            for (r, c, v) in m.entries() {
                vals[offsets[r] + (c - first_col[r])] += coef * v;
            }
        }

        // In-place row-oriented Cholesky over the envelope.
        for i in 0..dim {
            let fi = first_col[i];
            for j in fi..i {
                let fj = first_col[j];
                let start = fi.max(fj);
                let dot: f64 = if start < j {
                    let a = &vals[offsets[i] + (start - fi)..offsets[i] + (j - fi)];
                    let b = &vals[offsets[j] + (start - fj)..offsets[j] + (j - fj)];
                    a.iter().zip(b).map(|(x, y)| x * y).sum()
                } else {
                    0.0
                };
                let diag_j = vals[offsets[j] + (j - fj)];
                let idx = offsets[i] + (j - fi);
                vals[idx] = (vals[idx] - dot) / diag_j;
            }
            let row = &vals[offsets[i]..offsets[i] + (i - fi)];
            let sq: f64 = row.iter().map(|v| v * v).sum();
            let idx = offsets[i] + (i - fi);
            let pivot = vals[idx] - sq;
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::SolverFailure(format!(
                    "matrix is not positive definite (pivot {pivot:.3e} at row {i})"
                )));
            }
            vals[idx] = pivot.sqrt();
        }

        Ok(Self {
            dim,
            first_col,
            offsets,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        // forward: L y = b
        for i in 0..self.dim {
            let fi = self.first_col[i];
            let row = &self.vals[self.offsets[i]..self.offsets[i] + (i - fi)];
            let dot: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - dot) / self.vals[self.offsets[i] + (i - fi)];
        }
        // backward: L' x = y
        for i in (0..self.dim).rev() {
            let fi = self.first_col[i];
            x[i] /= self.vals[self.offsets[i] + (i - fi)];
            let xi = x[i];
            let row = &self.vals[self.offsets[i]..self.offsets[i] + (i - fi)];
            for (k, l) in row.iter().enumerate() {
                x[fi + k] -= l * xi;
            }
        }
    }
}

/// Solves K u = f for SPD K by direct factorization, verifying the residual.
pub fn solve_spd(k: &SparseSymMatrix, f: &[f64], tol: f64) -> Result<Vec<f64>> {
    if f.len() != k.dim() {
        return Err(Error::SizeMismatch {
            expected: k.dim(),
            got: f.len(),
            context: "solve_spd rhs".into(),
        });
    }
    let chol = EnvelopeCholesky::factor(&[(1.0, k)])?;
    let u = chol.solve(f);
    let mut r = vec![0.0; k.dim()];
    k.matvec(&u, &mut r);
    let mut res = 0.0f64;
    let mut nf = 0.0f64;
    for i in 0..k.dim() {
        res += (r[i] - f[i]) * (r[i] - f[i]);
        nf += f[i] * f[i];
    }
    if nf > 0.0 && res.sqrt() > tol * nf.sqrt() {
        return Err(Error::SolverFailure(format!(
            "relative residual {:.3e} exceeds tolerance {:.3e}",
            res.sqrt() / nf.sqrt(),
            tol
        )));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn identity(n: usize) -> SparseSymMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b.build()
    }

    #[test]
    fn solve_identity() {
        let k = identity(4);
        let mut f = vec![0.0; 4];
        f[0] = 1.0;
        let u = solve_spd(&k, &f, 1e-12).unwrap();
        assert_eq!(u, f);
    }

    #[test]
    fn solve_two_by_two() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 2.0);
        b.add(1, 1, 2.0);
        b.add(1, 0, 1.0);
        let k = b.build();
        let u = solve_spd(&k, &[1.0, 1.0], 1e-12).unwrap();
        assert!((u[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((u[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_residual() {
        let n = 50;
        let mut rng = StdRng::seed_from_u64(7);
        // A = B' B + n I, dense SPD fed through the sparse path.
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let b = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        a.gemm_tr(1.0, &b, &b, 0.0);
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        let mut tb = TripletBuilder::new(n);
        for i in 0..n {
            for j in 0..=i {
                tb.add(i, j, a[(i, j)]);
            }
        }
        let k = tb.build();
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let u = solve_spd(&k, &f, 1e-12).unwrap();
        let mut r = vec![0.0; n];
        k.matvec(&u, &mut r);
        let num: f64 = r
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(1, 1, -1.0);
        let k = b.build();
        assert!(matches!(
            solve_spd(&k, &[1.0, 1.0], 1e-12),
            Err(Error::SolverFailure(_))
        ));
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, 0.5);
        b.add(0, 1, 0.5);
        let k = b.build();
        assert_eq!(k.get(0, 0), 3.0);
        assert_eq!(k.get(0, 1), 1.0);
        assert_eq!(k.get(1, 0), 1.0);
        assert_eq!(k.nnz(), 2);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 17;
        let mut tb = TripletBuilder::new(n);
        for i in 0..n {
            tb.add(i, i, 2.0 + rng.random::<f64>());
            if i > 0 && rng.random::<f64>() < 0.6 {
                tb.add(i, i - 1, rng.random::<f64>() - 0.5);
            }
            if i > 4 && rng.random::<f64>() < 0.3 {
                tb.add(i, i - 4, rng.random::<f64>() - 0.5);
            }
        }
        let k = tb.build();
        let d = k.to_dense();
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut y = vec![0.0; n];
        k.matvec(&x, &mut y);
        let xd = nalgebra::DVector::from_column_slice(&x);
        let yd = &d * xd;
        for i in 0..n {
            assert!((y[i] - yd[i]).abs() < 1e-13);
        }
        // quadratic form agrees too
        let q = k.quadratic_form(&x);
        let qd: f64 = x.iter().zip(yd.iter()).map(|(a, b)| a * b).sum();
        assert!((q - qd).abs() < 1e-12);
    }
}
