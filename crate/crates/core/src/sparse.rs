//! Compressed sparse row storage for assembled operators.

use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from a row generator returning `(column, value)` pairs.
    pub fn from_rows<I, F>(dim: usize, mut row: F) -> Self
    where
        F: FnMut(usize) -> I,
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for (c, v) in row(r) {
                cols.push(c as usize);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        Self::from_rows(m.nrows(), |r| {
            (0..m.ncols())
                .filter(move |&c| m[(r, c)] != 0.0)
                .map(move |c| (c as u64, m[(r, c)]))
                .collect::<Vec<_>>()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b]
            .iter()
            .copied()
            .zip(self.vals[a..b].iter().copied())
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in a..b {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_and_matvec() {
        let d = DMatrix::from_row_slice(3, 3, &[1., 0., 2., 0., 0., 0., 2., 0., -1.]);
        let s = CsrMatrix::from_dense(&d);
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.to_dense(), d);
        let mut out = vec![0.0; 3];
        s.matvec(&[1., 5., 1.], &mut out);
        assert_eq!(out, vec![3., 0., 1.]);
        assert_eq!(s.max_abs_row_sum(), 3.0);
    }
}
