//! The in-place gate model.
//!
//! A program acts on a machine state in `R^n`. Each gate is either a rotation
//! (a 2x2 orthogonal block on two coordinates, possibly with determinant -1) or
//! a positive constant multiplying one coordinate. All coordinates are 0-based.
//!
//! `M^(t)` denotes the linear map taking the input to the machine state after
//! `t` gates; `M^(0)` is the identity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A single step of an in-place linear algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Writes `(a x_i + b x_j, c x_i + d x_j)` back to `(x_i, x_j)` where
    /// `[[a, b], [c, d]]` is [`Gate::block`].
    Rotation {
        i: usize,
        j: usize,
        theta: f64,
        reflect: bool,
    },
    /// Multiplies `x_i` by `c > 0`.
    Constant { i: usize, c: f64 },
}

impl Gate {
    pub fn rotation(i: usize, j: usize, theta: f64) -> Self {
        Gate::Rotation {
            i,
            j,
            theta,
            reflect: false,
        }
    }

    pub fn reflection(i: usize, j: usize, theta: f64) -> Self {
        Gate::Rotation {
            i,
            j,
            theta,
            reflect: true,
        }
    }

    /// The normalized two-point butterfly `(1/sqrt 2) [[1, 1], [1, -1]]`.
    pub fn butterfly(i: usize, j: usize) -> Self {
        Self::reflection(i, j, std::f64::consts::FRAC_PI_4)
    }

    /// Exchanges two coordinates (a reflection with `theta = pi/2`).
    pub fn swap(i: usize, j: usize) -> Self {
        Self::reflection(i, j, std::f64::consts::FRAC_PI_2)
    }

    pub fn constant(i: usize, c: f64) -> Self {
        Gate::Constant { i, c }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Gate::Rotation { .. })
    }

    /// Short label used in traces: `rot` or `const`.
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Rotation { .. } => "rot",
            Gate::Constant { .. } => "const",
        }
    }

    /// Rows touched by the gate.
    pub fn rows(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Rotation { i, j, .. } => (i, Some(j)),
            Gate::Constant { i, .. } => (i, None),
        }
    }

    /// The 2x2 block `[[a, b], [c, d]]` of a rotation gate, `None` for constants.
    ///
    /// Without reflection this is `[[cos, -sin], [sin, cos]]`; with reflection
    /// `[[cos, sin], [sin, -cos]]`.
    pub fn block(&self) -> Option<[[f64; 2]; 2]> {
        match *self {
            Gate::Rotation { theta, reflect, .. } => {
                let (s, c) = theta.sin_cos();
                Some(if reflect {
                    [[c, s], [s, -c]]
                } else {
                    [[c, -s], [s, c]]
                })
            }
            Gate::Constant { .. } => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Gate::Rotation { i, j, theta, .. } => {
                for idx in [i, j] {
                    if idx >= n {
                        return Err(Error::IndexOutOfRange { index: idx, n });
                    }
                }
                if i == j {
                    return Err(Error::DegenerateRotation(i));
                }
                if !theta.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
            Gate::Constant { i, c } => {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, n });
                }
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::NonPositiveConstant(c));
                }
            }
        }
        Ok(())
    }

    /// Applies the gate to the rows of `m` in place.
    pub fn apply_rows(&self, m: &mut DMatrix<f64>) {
        match *self {
            Gate::Rotation { i, j, .. } => {
                let [[a, b], [c, d]] = self.block().unwrap();
                for col in 0..m.ncols() {
                    let (xi, xj) = (m[(i, col)], m[(j, col)]);
                    m[(i, col)] = a * xi + b * xj;
                    m[(j, col)] = c * xi + d * xj;
                }
            }
            Gate::Constant { i, c } => {
                for col in 0..m.ncols() {
                    m[(i, col)] *= c;
                }
            }
        }
    }

    fn apply_state(&self, x: &mut [f64]) {
        match *self {
            Gate::Rotation { i, j, .. } => {
                let [[a, b], [c, d]] = self.block().unwrap();
                let (xi, xj) = (x[i], x[j]);
                x[i] = a * xi + b * xj;
                x[j] = c * xi + d * xj;
            }
            Gate::Constant { i, c } => x[i] *= c,
        }
    }
}

/// The `n x n` matrix of a single gate.
pub fn gate_matrix(g: &Gate, n: usize) -> Result<DMatrix<f64>> {
    g.validate(n)?;
    let mut m = DMatrix::identity(n, n);
    g.apply_rows(&mut m);
    Ok(m)
}

/// An in-place algorithm `(M^(0) = Id, M^(1), ..., M^(m))` on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateProgram {
    n: usize,
    gates: Vec<Gate>,
    pub label: String,
}

impl GateProgram {
    pub fn new(n: usize, gates: Vec<Gate>, label: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        for (index, g) in gates.iter().enumerate() {
            g.validate(n).map_err(|e| Error::InvalidGate {
                index,
                message: e.to_string(),
            })?;
        }
        Ok(Self {
            n,
            gates,
            label: label.into(),
        })
    }

    /// The empty program on `R^n` (the identity algorithm).
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, Vec::new(), "identity")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of gates `m`.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_rotation()).count()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n)?;
        self.gates.push(g);
        Ok(())
    }

    /// `M^(t)`, the product of the first `t` gate matrices.
    pub fn prefix_matrix(&self, t: usize) -> Result<DMatrix<f64>> {
        if t > self.gates.len() {
            return Err(Error::StepOutOfRange {
                t,
                m: self.gates.len(),
            });
        }
        let mut m = DMatrix::identity(self.n, self.n);
        for g in &self.gates[..t] {
            g.apply_rows(&mut m);
        }
        Ok(m)
    }

    /// `M^(m)`.
    pub fn final_matrix(&self) -> DMatrix<f64> {
        self.prefix_matrix(self.gates.len()).unwrap()
    }

    /// All prefixes `M^(0), ..., M^(m)`.
    pub fn prefix_matrices(&self) -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(self.gates.len() + 1);
        let mut m = DMatrix::identity(self.n, self.n);
        out.push(m.clone());
        for g in &self.gates {
            g.apply_rows(&mut m);
            out.push(m.clone());
        }
        out
    }

    /// Streams the machine state through every gate.
    pub fn run(&self, x: &MachineState) -> Result<MachineState> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut entries = x.entries.clone();
        for g in &self.gates {
            g.apply_state(&mut entries);
        }
        Ok(MachineState { entries })
    }

    /// Distinct constant-gate values, in order of first appearance.
    pub fn constants_set(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for g in &self.gates {
            if let Gate::Constant { c, .. } = *g {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Appends the gates of `other` (same dimension).
    pub fn extend_from(&mut self, other: &GateProgram) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }
}

/// A machine state: the current vector in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub entries: Vec<f64>,
}

impl MachineState {
    pub fn new(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut entries = vec![0.0; n];
        entries[k] = 1.0;
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.entries)
    }
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
