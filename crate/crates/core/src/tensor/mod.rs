//! Dense row-major vectors and matrices plus a seeded RNG.
//!
//! These are the only numeric containers in the crate. Problem sizes stay
//! small (at most a few hundred columns), so the implementations favour
//! clarity and deterministic accumulation order over blocking or SIMD.

mod rng;

pub use rng::Rng;

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn zeros(len: usize) -> Self {
        Vector { data: vec![T::zero(); len] }
    }

    pub fn filled(len: usize, value: T) -> Self {
        Vector { data: vec![value; len] }
    }

    pub fn from_vec(data: Vec<T>) -> Self {
        Vector { data }
    }

    pub fn from_slice(data: &[T]) -> Self {
        Vector { data: data.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Vector<T>) -> Result<T> {
        self.check_len("dot", other)?;
        let mut acc = T::zero();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += *a * *b;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Vector<T>) -> Result<Vector<T>> {
        self.check_len("add", other)?;
        Ok(Vector::from_vec(
            self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector<T>) -> Result<Vector<T>> {
        self.check_len("sub", other)?;
        Ok(Vector::from_vec(
            self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        ))
    }

    /// Element-wise product, the `⊙` operator.
    pub fn hadamard(&self, other: &Vector<T>) -> Result<Vector<T>> {
        self.check_len("hadamard", other)?;
        Ok(Vector::from_vec(
            self.data.iter().zip(&other.data).map(|(a, b)| *a * *b).collect(),
        ))
    }

    pub fn scale(&self, s: T) -> Vector<T> {
        Vector::from_vec(self.data.iter().map(|a| *a * s).collect())
    }

    /// `self[i] += s * x[i]`; the single rounding per element is relied on
    /// by the cross-module update-equivalence tests.
    pub fn axpy(&mut self, s: T, x: &Vector<T>) -> Result<()> {
        self.check_len("axpy", x)?;
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += s * *b;
        }
        Ok(())
    }

    /// Outer product `self ⊗ other`, shape `self.len() × other.len()`.
    pub fn outer(&self, other: &Vector<T>) -> Matrix<T> {
        let mut m = Matrix::zeros(self.len(), other.len());
        for (i, a) in self.data.iter().enumerate() {
            for (j, b) in other.data.iter().enumerate() {
                m.data[i * other.len() + j] = *a * *b;
            }
        }
        m
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Vector<T> {
        Vector::from_vec(self.data.iter().map(|a| f(*a)).collect())
    }

    /// Index of the largest element; ties break toward the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        if self.data.is_empty() {
            return None;
        }
        let mut best = 0;
        for i in 1..self.data.len() {
            if self.data[i] > self.data[best] {
                best = i;
            }
        }
        Some(best)
    }

    fn check_len(&self, op: &str, other: &Vector<T>) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(format!(
                "{op}: vector lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::shape(format!(
                    "from_rows: row {i} has length {} but row 0 has length {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `result[i] = Σ_j m[i,j]·v[j]`
    pub fn matvec(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.cols != v.len() {
            return Err(Error::shape(format!(
                "matvec: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = Vector::zeros(self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `result[j] = Σ_i m[i,j]·v[i]`, i.e. `Mᵀv` (equivalently the row form `vᵀM`)
    /// without materializing the transpose.
    pub fn matvec_transpose(&self, v: &Vector<T>) -> Result<Vector<T>> {
        if self.rows != v.len() {
            return Err(Error::shape(format!(
                "matvec_transpose: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = Vector::zeros(self.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        Ok(out)
    }

    /// `Σ_m Σ_n q[m,n]·x[m]·x[n]`, evaluated as a direct double loop.
    ///
    /// This is deliberately a separate code path from `dot(x, matvec(q, x))`;
    /// the two routes are compared against each other in tests.
    pub fn quadratic_form(&self, x: &Vector<T>) -> Result<T> {
        if self.rows != self.cols {
            return Err(Error::shape(format!(
                "quadratic_form: matrix {}x{} is not square",
                self.rows, self.cols
            )));
        }
        if self.rows != x.len() {
            return Err(Error::shape(format!(
                "quadratic_form: {}x{} matrix with length-{} vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut acc = T::zero();
        for m in 0..self.rows {
            let row = self.row(m);
            for n in 0..self.cols {
                acc += row[n] * x[m] * x[n];
            }
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_shape("add", other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        })
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| *a * s).collect(),
        }
    }

    /// `self[i,j] += s * x[i,j]`, one rounding per element as for `Vector::axpy`.
    pub fn axpy(&mut self, s: T, x: &Matrix<T>) -> Result<()> {
        self.check_shape("axpy", x)?;
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += s * *b;
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.data[i * self.cols + j] != self.data[j * self.cols + i] {
                    return false;
                }
            }
        }
        true
    }

    fn check_shape(&self, op: &str, other: &Matrix<T>) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "{op}: matrices {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Derivative of the quadratic form `xᵀQx` with respect to `Q`:
/// diagonal `x_i²`, off-diagonal `2·x_i·x_j`. Symmetric by construction.
pub fn m_matrix<T: Scalar>(x: &Vector<T>) -> Matrix<T> {
    let two = T::one() + T::one();
    let n = x.len();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            x[i] * x[i]
        } else {
            two * (x[i] * x[j])
        }
    })
}
