//! Compressed sparse row storage for complex matrices.

use num_complex::ComplexFloat;

use crate::{CMat, Cplx, Error, Result};

/// Complex CSR matrix. Column indices are sorted within each row and
/// duplicates are summed at construction; explicitly stored zeros are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Cplx>,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Cplx)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, Cplx)> = triplets.into_iter().collect();
        for &(i, j, _) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        // Stable sort keeps the summation order of duplicates deterministic.
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<Cplx> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![Cplx::new(1.0, 0.0); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Stores every nonzero entry of `m`.
    pub fn from_dense(m: &CMat) -> Self {
        let trip = (0..m.nrows()).flat_map(|i| {
            (0..m.ncols()).filter_map(move |j| {
                let v = m[(i, j)];
                (v != Cplx::new(0.0, 0.0)).then_some((i, j, v))
            })
        });
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("indices are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Cplx)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Cplx {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => Cplx::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
        )
        .expect("indices are in range")
    }

    pub fn scale(&self, alpha: Cplx) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`, keeping the union of both patterns.
    pub fn linear_combination(&self, alpha: Cplx, other: &Self, beta: Cplx) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "cannot combine {}x{} with {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let trip = self
            .triplets()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, trip)
    }

    /// `self * x` for a dense block `x`.
    pub fn mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(self.ncols, x.nrows(), "sparse * dense dimension mismatch");
        let mut out = CMat::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            for i in 0..self.nrows {
                let mut acc = Cplx::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * xc[self.col_idx[k]];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    /// `self^H * x` without forming the adjoint.
    pub fn adjoint_mul_dense(&self, x: &CMat) -> CMat {
        assert_eq!(self.nrows, x.nrows(), "sparse^H * dense dimension mismatch");
        let mut out = CMat::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    out[(self.col_idx[k], c)] += self.values[k].conj() * xi;
                }
            }
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            sums[j] += v.abs();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute row sum, which bounds every Gershgorin disc.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| {
                self.values[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cplx {
        Cplx::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(3.0, 0.0))])
            .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = SparseMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, c(1.0, 2.0)), (1, 1, c(-1.0, 0.5)), (2, 0, c(0.0, 3.0)), (2, 1, c(4.0, 0.0))],
        )
        .unwrap();
        let x = CMat::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let y = CMat::from_fn(3, 2, |i, j| c(j as f64 - i as f64, 1.0));
        let d = m.to_dense();
        assert!((m.mul_dense(&x) - &d * &x).norm() < 1e-14);
        assert!((m.adjoint_mul_dense(&y) - d.adjoint() * &y).norm() < 1e-14);
        assert_eq!(m.adjoint().to_dense(), d.adjoint());
        assert!((m.fro_norm() - d.norm()).abs() < 1e-14);
    }

    #[test]
    fn linear_combination_unions_patterns() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(5.0, 0.0))]).unwrap();
        let s = a.linear_combination(c(2.0, 0.0), &b, c(0.0, -1.0)).unwrap();
        assert_eq!(s.get(0, 0), c(2.0, 0.0));
        assert_eq!(s.get(0, 1), c(0.0, -5.0));
        assert_eq!(s.nnz(), 3);
    }
}
