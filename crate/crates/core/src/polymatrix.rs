//! Dense matrices of Laurent polynomials.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::{LaurentPoly, PRUNE_THRESHOLD};

#[derive(Clone, PartialEq, Debug)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentPoly>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![LaurentPoly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                LaurentPoly::one()
            } else {
                LaurentPoly::zero()
            }
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LaurentPoly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    /// Constant polynomial matrix (support `{0}`) with the given real entries.
    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| LaurentPoly::real(m[(i, j)]))
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| LaurentPoly::constant(m[(i, j)]))
    }

    pub fn diag(polys: Vec<LaurentPoly>) -> Self {
        let n = polys.len();
        let mut m = Self::zeros(n, n);
        for (i, p) in polys.into_iter().enumerate() {
            m.entries[i * n + i] = p;
        }
        m
    }

    /// `diag(z^{k_1}, ..., z^{k_n})`.
    pub fn monomial_diag(exponents: &[i64]) -> Self {
        Self::diag(exponents.iter().map(|&k| LaurentPoly::z_pow(k)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn entries(&self) -> impl Iterator<Item = &LaurentPoly> {
        self.entries.iter()
    }

    pub fn row(&self, i: usize) -> &[LaurentPoly] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentPoly::is_zero)
    }

    pub fn try_mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentPoly::zero();
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc += &a.mul_with(b, PRUNE_THRESHOLD);
                }
                out.entries[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Multiplies every entry by the scalar polynomial `p`.
    pub fn scale_poly(&self, p: &LaurentPoly) -> PolyMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * p).collect(),
        }
    }

    /// Multiplies every entry by `z^k`.
    pub fn shift(&self, k: i64) -> PolyMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.shift(k)).collect(),
        }
    }

    /// `M*`: transpose with polynomial conjugation of every entry.
    pub fn adjoint(&self) -> PolyMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conjugate())
    }

    /// Entrywise evaluation at `w`.
    pub fn evaluate(&self, w: Complex64) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).evaluate(w)?;
            }
        }
        Ok(out)
    }

    pub fn evaluate_real(&self, x: f64) -> Result<DMatrix<Complex64>> {
        self.evaluate(Complex64::new(x, 0.0))
    }

    /// `(deg, val)` over nonzero entries; an error for the zero matrix.
    pub fn deg_val(&self) -> Result<(i64, i64)> {
        let mut out: Option<(i64, i64)> = None;
        for e in self.entries.iter().filter(|e| !e.is_zero()) {
            let (d, v) = e.deg_val()?;
            out = Some(match out {
                None => (d, v),
                Some((d0, v0)) => (d0.max(d), v0.min(v)),
            });
        }
        out.ok_or(Error::ZeroPolynomial)
    }

    /// Matrix coefficient of `z^k`.
    pub fn coeff_matrix(&self, k: i64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).coeff(k))
    }

    /// Largest coefficient magnitude of `M* M - Id`.
    pub fn paraunitary_residual(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let gram = self.adjoint().try_mul(self)?;
        Ok(gram.max_coeff_diff(&Self::identity(self.rows)))
    }

    /// Whether `M* M = Id` to within `tol` per coefficient, with the residual.
    pub fn is_paraunitary(&self, tol: f64) -> Result<(bool, f64)> {
        let r = self.paraunitary_residual()?;
        Ok((r <= tol, r))
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_coeff_diff(&self, other: &PolyMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_coeff_diff(b))
            .fold(0.0, f64::max)
    }

    /// `||M_{i,:}|| = sqrt(sum_j ||M_{i,j}||^2)`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(LaurentPoly::coeff_norm_sq).sum::<f64>().sqrt()
    }

    /// `||M||_{2,inf}`: the largest row norm.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.rows).map(|i| self.row_norm(i)).fold(0.0, f64::max)
    }

    /// Replaces rows `i` and `j` by `a r_i + b r_j` and `c r_i + d r_j`.
    pub fn rotate_rows(&mut self, i: usize, j: usize, block: [[f64; 2]; 2]) {
        let [[a, b], [c, d]] = block;
        for col in 0..self.cols {
            let ri = self.get(i, col).clone();
            let rj = self.get(j, col).clone();
            let new_i = &ri.scale_real(a) + &rj.scale_real(b);
            let new_j = &ri.scale_real(c) + &rj.scale_real(d);
            self.set(i, col, new_i);
            self.set(j, col, new_j);
        }
    }

    /// Multiplies row `i` by `z^k`.
    pub fn shift_row(&mut self, i: usize, k: i64) {
        for col in 0..self.cols {
            let shifted = self.get(i, col).shift(k);
            self.set(i, col, shifted);
        }
    }
}
