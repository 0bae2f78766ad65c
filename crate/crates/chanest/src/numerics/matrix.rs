//! Dense row-major complex matrix with LU-based inversion.

use std::ops::{Index, IndexMut};

use super::{Cplx, NumericsError};
use crate::real::Real;

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CplxMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> CplxMatrix<T> {
    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cplx::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cplx::new(T::one(), T::zero());
        }
        m
    }

    /// Builds from row-major data; `data.len()` must equal `rows·cols`.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Cplx<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Cplx<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
            .sqrt()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// `self + c·I`; panics if not square.
    pub fn add_scaled_identity(&self, c: Cplx<T>) -> Self {
        assert_eq!(self.rows, self.cols, "diagonal loading needs a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += c;
        }
        out
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        // ikj order: the inner loop walks contiguous rows of rhs and out.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(self.cols, v.len(), "vector length must match columns");
        let mut out = vec![Cplx::new(T::zero(), T::zero()); self.rows];
        for i in 0..self.rows {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for (a, &x) in self.row(i).iter().zip(v) {
                acc += *a * x;
            }
            out[i] = acc;
        }
        out
    }

    /// Inverts via LU decomposition with partial pivoting.
    ///
    /// A pivot whose modulus falls below `1e−12 · max|entry|` of the input is
    /// treated as singular.
    pub fn lu_invert(&self) -> Result<Self, NumericsError> {
        if self.rows != self.cols {
            return Err(NumericsError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let tol = T::of(1e-12) * self.max_abs();
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // Partial pivoting: largest modulus in this column, at or below
            // the diagonal.
            let mut best = col;
            let mut best_mag = lu[(col, col)].norm_sqr();
            for r in col + 1..n {
                let mag = lu[(r, col)].norm_sqr();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            let pivot_abs = best_mag.sqrt();
            if pivot_abs < tol {
                return Err(NumericsError::SingularMatrix {
                    col,
                    pivot: pivot_abs.as_f64(),
                    tolerance: tol.as_f64(),
                });
            }
            if best != col {
                perm.swap(col, best);
                for j in 0..n {
                    let t = lu[(col, j)];
                    lu[(col, j)] = lu[(best, j)];
                    lu[(best, j)] = t;
                }
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                for j in col + 1..n {
                    let sub = factor * lu[(col, j)];
                    lu[(r, j)] -= sub;
                }
            }
        }

        // Solve LU·X = P·I column by column.
        let mut inv = Self::zeros(n, n);
        let mut y = vec![Cplx::new(T::zero(), T::zero()); n];
        for e in 0..n {
            // Forward substitution with the permuted unit column.
            for i in 0..n {
                let mut acc = if perm[i] == e {
                    Cplx::new(T::one(), T::zero())
                } else {
                    Cplx::new(T::zero(), T::zero())
                };
                for j in 0..i {
                    acc -= lu[(i, j)] * y[j];
                }
                y[i] = acc;
            }
            // Back substitution.
            for i in (0..n).rev() {
                let mut acc = y[i];
                for j in i + 1..n {
                    acc -= lu[(i, j)] * inv[(j, e)];
                }
                inv[(i, e)] = acc / lu[(i, i)];
            }
        }
        Ok(inv)
    }
}

impl<T> Index<(usize, usize)> for CplxMatrix<T> {
    type Output = Cplx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CplxMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.cols + j]
    }
}
