use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{Complex, DMatrix};
use num_traits::Zero;

use super::{RatPoly, Rational};
use crate::error::{Error, Result};
use crate::qmat::QMatrix;

/// Matrix of polynomials in `D`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RatPoly>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        PolyMatrix {
            rows,
            cols,
            entries: vec![RatPoly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = RatPoly::one();
        }
        m
    }

    pub fn diag(d: &[RatPoly]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, p) in d.iter().enumerate() {
            m[(i, i)] = p.clone();
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<RatPoly>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} polynomial matrix",
                entries.len()
            )));
        }
        Ok(PolyMatrix { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RatPoly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        PolyMatrix { rows, cols, entries }
    }

    /// Degree-zero embedding of a constant matrix.
    pub fn from_constant(m: &QMatrix) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| RatPoly::constant(m[(i, j)].clone()))
    }

    /// `sum_j C_j D^j` from coefficient matrices of equal shape.
    pub fn from_coefficients(coeffs: &[QMatrix]) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Dimension("empty coefficient list".into()));
        };
        let (r, c) = (first.rows(), first.cols());
        if coeffs.iter().any(|m| m.rows() != r || m.cols() != c) {
            return Err(Error::Dimension("coefficient shapes differ".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| {
            RatPoly::from_coeffs(coeffs.iter().map(|m| m[(i, j)].clone()).collect())
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[RatPoly] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Maximum entry degree; zero for the zero matrix.
    pub fn degree(&self) -> usize {
        self.entries.iter().map(RatPoly::degree_or_zero).max().unwrap_or(0)
    }

    pub fn column_degree(&self, j: usize) -> Option<usize> {
        (0..self.rows).filter_map(|i| self[(i, j)].degree()).max()
    }

    /// Coefficient matrix of `D^k`.
    pub fn coefficient(&self, k: usize) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].coeff(k))
    }

    pub fn coefficients(&self) -> Vec<QMatrix> {
        (0..=self.degree()).map(|k| self.coefficient(k)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Formal adjoint `P(-D)^T`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].reflect())
    }

    pub fn try_mul(&self, rhs: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(RatPoly::zero(), |acc, k| {
                let a = &self[(i, k)];
                let b = &rhs[(k, j)];
                if a.is_zero() || b.is_zero() {
                    acc
                } else {
                    &acc + &(a * b)
                }
            })
        }))
    }

    pub fn scale(&self, c: &RatPoly) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * c)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination over `Q[D]`.
    pub fn det(&self) -> Result<RatPoly> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(RatPoly::one());
        }
        let mut m = self.clone();
        let mut sign = false;
        let mut prev = RatPoly::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                    return Ok(RatPoly::zero());
                };
                m.swap_rows(k, p);
                sign = !sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&m[(k, k)] * &m[(i, j)]) - &(&m[(i, k)] * &m[(k, j)]);
                    m[(i, j)] = num.exact_div(&prev).expect("Bareiss division is exact");
                }
                m[(i, k)] = RatPoly::zero();
            }
            prev = m[(k, k)].clone();
        }
        let d = m[(n - 1, n - 1)].clone();
        Ok(if sign { -d } else { d })
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[target] += factor * row[source]`.
    pub fn add_row_multiple(&mut self, target: usize, source: usize, factor: &RatPoly) {
        for j in 0..self.cols {
            let t = &self[(source, j)] * factor;
            if !t.is_zero() {
                self[(target, j)] = &self[(target, j)] + &t;
            }
        }
    }

    /// `col[target] += factor * col[source]`.
    pub fn add_col_multiple(&mut self, target: usize, source: usize, factor: &RatPoly) {
        for i in 0..self.rows {
            let t = &self[(i, source)] * factor;
            if !t.is_zero() {
                self[(i, target)] = &self[(i, target)] + &t;
            }
        }
    }

    pub fn scale_row(&mut self, i: usize, c: &Rational) {
        for j in 0..self.cols {
            self[(i, j)] = self[(i, j)].scale(c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(RatPoly::is_zero)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn eval_complex(&self, z: Complex<f64>) -> DMatrix<Complex<f64>> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].eval_complex(z))
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, x: &Rational) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].eval(x))
    }

    pub fn at_zero(&self) -> QMatrix {
        self.eval(&Rational::zero())
    }
}

impl Index<(usize, usize)> for PolyMatrix {
    type Output = RatPoly;
    fn index(&self, (i, j): (usize, usize)) -> &RatPoly {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for PolyMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut RatPoly {
        &mut self.entries[i * self.cols + j]
    }
}

impl Mul for &PolyMatrix {
    type Output = PolyMatrix;
    fn mul(self, rhs: &PolyMatrix) -> PolyMatrix {
        self.try_mul(rhs).expect("polynomial matrix product dimensions")
    }
}

impl Add for &PolyMatrix {
    type Output = PolyMatrix;
    fn add(self, rhs: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        PolyMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }
}

impl Sub for &PolyMatrix {
    type Output = PolyMatrix;
    fn sub(self, rhs: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        PolyMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

/// Entry-wise check that `P` has no coefficient beyond the given degree.
#[cfg(test)]
fn all_zero_above(p: &PolyMatrix, degree: usize) -> bool {
    p.entries().iter().all(|e| e.coeffs().iter().skip(degree + 1).all(Zero::is_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    fn p(c: &[i64]) -> RatPoly {
        RatPoly::from_i64(c)
    }

    fn pm(rows: usize, cols: usize, e: &[&[i64]]) -> PolyMatrix {
        PolyMatrix::from_entries(rows, cols, e.iter().map(|c| p(c)).collect()).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let m = pm(2, 2, &[&[1, 2], &[0, 0, 3], &[-1], &[4, 0, 1]]);
        assert_eq!(&PolyMatrix::identity(2) * &m, m);
    }

    #[test]
    fn diagonal_products() {
        let a = PolyMatrix::diag(&[RatPoly::x(), RatPoly::one()]);
        let b = PolyMatrix::diag(&[RatPoly::one(), RatPoly::x()]);
        assert_eq!(&a * &b, PolyMatrix::diag(&[RatPoly::x(), RatPoly::x()]));
    }

    #[test]
    fn row_times_column() {
        let a = pm(1, 2, &[&[1], &[0, 1]]);
        let b = pm(2, 1, &[&[0, 1], &[1]]);
        assert_eq!(&a * &b, pm(1, 1, &[&[0, 2]]));
        assert!(b.try_mul(&b).is_err());
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(pm(1, 1, &[&[0, 1]]).adjoint(), pm(1, 1, &[&[0, -1]]));
        let m = pm(2, 2, &[&[1], &[0, 1], &[], &[1]]);
        assert_eq!(m.adjoint(), pm(2, 2, &[&[1], &[], &[0, -1], &[1]]));
    }

    #[test]
    fn determinants() {
        let m = pm(2, 2, &[&[0, 1], &[1], &[1], &[0, 1]]);
        assert_eq!(m.det().unwrap(), p(&[-1, 0, 1]));
        let d = PolyMatrix::diag(&[p(&[1, 1]), p(&[2, 0, 3])]);
        assert_eq!(d.det().unwrap(), &p(&[1, 1]) * &p(&[2, 0, 3]));
        assert!(pm(1, 2, &[&[1], &[1]]).det().is_err());
        // needs a pivot swap
        let s = pm(3, 3, &[&[], &[1], &[0, 1], &[1], &[], &[2], &[0, 0, 1], &[3], &[1]]);
        let cofactor = |a: &RatPoly, b: &RatPoly, c: &RatPoly, d: &RatPoly| &(a * d) - &(b * c);
        let expected = &(&(&s[(0, 0)] * &cofactor(&s[(1, 1)], &s[(1, 2)], &s[(2, 1)], &s[(2, 2)]))
            - &(&s[(0, 1)] * &cofactor(&s[(1, 0)], &s[(1, 2)], &s[(2, 0)], &s[(2, 2)])))
            + &(&s[(0, 2)] * &cofactor(&s[(1, 0)], &s[(1, 1)], &s[(2, 0)], &s[(2, 1)]));
        assert_eq!(s.det().unwrap(), expected);
    }

    #[test]
    fn coefficient_roundtrip() {
        let m = pm(2, 1, &[&[1, 0, 3], &[0, 2]]);
        assert_eq!(PolyMatrix::from_coefficients(&m.coefficients()).unwrap(), m);
        assert!(all_zero_above(&m, 2));
        assert!(!all_zero_above(&m, 1));
    }
}
