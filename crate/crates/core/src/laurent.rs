//! Laurent polynomials in one indeterminate `z` with complex coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped after arithmetic.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

// Above this combined span multiplication accumulates into a map instead of a
// dense buffer (lifted programs with fine rounding bases have huge exponents).
const DENSE_SPAN_LIMIT: i64 = 1 << 16;

/// A finitely supported map `k -> coeff(p, k)`; zero coefficients are never stored.
#[derive(Clone, Default, PartialEq)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, Complex64>,
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                if c.im == 0.0 {
                    format!("{}z^{}", c.re, k)
                } else {
                    format!("({}{:+}i)z^{}", c.re, c.im, k)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    pub fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    /// `c z^k`.
    pub fn monomial(k: i64, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(k, c);
        }
        Self { terms }
    }

    /// `z^k`.
    pub fn z_pow(k: i64) -> Self {
        Self::monomial(k, Complex64::new(1.0, 0.0))
    }

    /// Builds from `(exponent, coefficient)` pairs, summing repeats and
    /// dropping exact zeros.
    pub fn from_terms<I: IntoIterator<Item = (i64, Complex64)>>(it: I) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in it {
            *terms.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { terms }
    }

    pub fn from_real_terms<I: IntoIterator<Item = (i64, f64)>>(it: I) -> Self {
        Self::from_terms(it.into_iter().map(|(k, x)| (k, Complex64::new(x, 0.0))))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored (nonzero) coefficients.
    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.terms.get(&k).copied().unwrap_or_default()
    }

    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn deg(&self) -> Result<i64> {
        self.terms
            .keys()
            .next_back()
            .copied()
            .ok_or(Error::ZeroPolynomial)
    }

    pub fn val(&self) -> Result<i64> {
        self.terms.keys().next().copied().ok_or(Error::ZeroPolynomial)
    }

    /// `(deg, val)`: the largest and smallest exponents with nonzero coefficient.
    pub fn deg_val(&self) -> Result<(i64, i64)> {
        Ok((self.deg()?, self.val()?))
    }

    /// Drops coefficients with magnitude below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.norm() >= threshold && c.norm() > 0.0);
    }

    fn pruned(mut self) -> Self {
        self.prune(PRUNE_THRESHOLD);
        self
    }

    /// Polynomial conjugation: conjugate every coefficient and substitute
    /// `z^-1` for `z`, so `coeff(conj p, -k) = conj(coeff(p, k))`.
    pub fn conjugate(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&k, c)| (-k, c.conj())).collect(),
        }
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&e, &c)| (e + k, c)).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&k, &c)| (k, c * s)).collect(),
        }
        .pruned()
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn coeff_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// `||p|| = sqrt(sum_k |coeff(p, k)|^2)`.
    pub fn coeff_norm(&self) -> f64 {
        self.coeff_norm_sq().sqrt()
    }

    /// `sum_k coeff(p, k) w^k`.
    pub fn evaluate(&self, w: Complex64) -> Result<Complex64> {
        if w == Complex64::new(0.0, 0.0) {
            if self.terms.keys().any(|&k| k < 0) {
                return Err(Error::EvaluationAtZero);
            }
            return Ok(self.coeff(0));
        }
        Ok(self
            .terms
            .iter()
            .map(|(&k, &c)| c * complex_pow(w, k))
            .sum())
    }

    pub fn evaluate_real(&self, x: f64) -> Result<Complex64> {
        self.evaluate(Complex64::new(x, 0.0))
    }

    /// Product with pruning at `threshold`.
    pub fn mul_with(&self, other: &Self, threshold: f64) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let (a_lo, a_hi) = (self.val().unwrap(), self.deg().unwrap());
        let (b_lo, b_hi) = (other.val().unwrap(), other.deg().unwrap());
        let span = (a_hi - a_lo) + (b_hi - b_lo) + 1;
        let mut out = if span <= DENSE_SPAN_LIMIT {
            let mut buf = vec![Complex64::new(0.0, 0.0); span as usize];
            for (&ka, &ca) in &self.terms {
                for (&kb, &cb) in &other.terms {
                    buf[((ka - a_lo) + (kb - b_lo)) as usize] += ca * cb;
                }
            }
            let base = a_lo + b_lo;
            Self::from_terms(
                buf.into_iter()
                    .enumerate()
                    .map(|(i, c)| (base + i as i64, c)),
            )
        } else {
            Self::from_terms(
                self.terms
                    .iter()
                    .flat_map(|(&ka, &ca)| other.terms.iter().map(move |(&kb, &cb)| (ka + kb, ca * cb))),
            )
        };
        out.prune(threshold);
        out
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in self.terms() {
            worst = worst.max((c - other.coeff(k)).norm());
        }
        for (k, c) in other.terms() {
            if !self.terms.contains_key(&k) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

/// `w^k` for any integer `k` (w nonzero when k < 0).
pub fn complex_pow(w: Complex64, k: i64) -> Complex64 {
    if let Ok(k32) = i32::try_from(k) {
        w.powi(k32)
    } else {
        w.powf(k as f64)
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (&k, &c) in &rhs.terms {
            *self.terms.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        self.prune(PRUNE_THRESHOLD);
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(&k, &c)| (k, -c)).collect(),
        }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out += &(-rhs);
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.mul_with(rhs, PRUNE_THRESHOLD)
    }
}
