//! Target transforms and rotation-only gate programs computing them.
//!
//! `DftReal` of real dimension `n` is the normalized `(n/2)`-point DFT with
//! each complex coordinate `k` stored as `(re, im)` in real coordinates
//! `(2k, 2k+1)`; a complex entry `c + i d` becomes the block `[[c, -d], [d, c]]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gate::{Gate, GateProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    WalshHadamard,
    DftReal,
}

impl TransformKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::WalshHadamard => "wh",
            TransformKind::DftReal => "dft",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    /// Real dimension; a power of two (at least 2 for `DftReal`).
    pub n: usize,
}

impl TransformSpec {
    pub fn new(kind: TransformKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if !n.is_power_of_two() || (kind == TransformKind::DftReal && n < 2) {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(Self { kind, n })
    }

    pub fn walsh_hadamard(n: usize) -> Result<Self> {
        Self::new(TransformKind::WalshHadamard, n)
    }

    pub fn dft_real(n: usize) -> Result<Self> {
        Self::new(TransformKind::DftReal, n)
    }

    /// Number of index units the butterflies pair up: coordinates for WH,
    /// complex coordinates for the DFT.
    fn units(&self) -> usize {
        match self.kind {
            TransformKind::WalshHadamard => self.n,
            TransformKind::DftReal => self.n / 2,
        }
    }

    fn unit_width(&self) -> usize {
        match self.kind {
            TransformKind::WalshHadamard => 1,
            TransformKind::DftReal => 2,
        }
    }
}

/// Builder switches for [`target_program_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Emit the DFT's bit-reversal permutation as swap gates. Without them the
    /// program computes `F P` with `P` the bit-reversal of complex coordinates,
    /// i.e. it expects its input already in bit-reversed order.
    pub explicit_permutation: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            explicit_permutation: true,
        }
    }
}

pub fn target_matrix(s: &TransformSpec) -> DMatrix<f64> {
    let n = s.n;
    match s.kind {
        TransformKind::WalshHadamard => {
            let scale = 1.0 / (n as f64).sqrt();
            DMatrix::from_fn(n, n, |i, j| {
                if (i & j).count_ones() % 2 == 0 {
                    scale
                } else {
                    -scale
                }
            })
        }
        TransformKind::DftReal => {
            let points = n / 2;
            let scale = 1.0 / (points as f64).sqrt();
            let mut m = DMatrix::zeros(n, n);
            for k in 0..points {
                for l in 0..points {
                    // reduce k*l mod N before forming the angle
                    let phase = -2.0 * PI * ((k * l) % points) as f64 / points as f64;
                    let (d, c) = phase.sin_cos();
                    let (c, d) = (c * scale, d * scale);
                    m[(2 * k, 2 * l)] = c;
                    m[(2 * k, 2 * l + 1)] = -d;
                    m[(2 * k + 1, 2 * l)] = d;
                    m[(2 * k + 1, 2 * l + 1)] = c;
                }
            }
            m
        }
    }
}

/// A group of gates whose rotations pair units differing in `bit`.
/// `bit == None` marks a phase (the bit reversal) with arbitrary pairs.
struct Stage {
    bit: Option<u32>,
    gates: Vec<Gate>,
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

fn stages(s: &TransformSpec, opts: BuildOptions) -> Vec<Stage> {
    let units = s.units();
    let bits = units.trailing_zeros();
    let mut out = Vec::new();
    match s.kind {
        TransformKind::WalshHadamard => {
            for b in 0..bits {
                let h = 1usize << b;
                let mut gates = Vec::with_capacity(units / 2);
                for start in (0..units).step_by(2 * h) {
                    for k in start..start + h {
                        gates.push(Gate::butterfly(k, k + h));
                    }
                }
                out.push(Stage { bit: Some(b), gates });
            }
        }
        TransformKind::DftReal => {
            if opts.explicit_permutation {
                let mut gates = Vec::new();
                for u in 0..units {
                    let r = bit_reverse(u, bits);
                    if u < r {
                        gates.push(Gate::swap(2 * u, 2 * r));
                        gates.push(Gate::swap(2 * u + 1, 2 * r + 1));
                    }
                }
                if !gates.is_empty() {
                    out.push(Stage { bit: None, gates });
                }
            }
            for b in 0..bits {
                let half = 1usize << b;
                let size = 2 * half;
                let mut gates = Vec::new();
                for start in (0..units).step_by(size) {
                    for k in 0..half {
                        let (a, c) = (start + k, start + k + half);
                        if k != 0 {
                            let theta = -2.0 * PI * k as f64 / size as f64;
                            gates.push(Gate::rotation(2 * c, 2 * c + 1, theta));
                        }
                        gates.push(Gate::butterfly(2 * a, 2 * c));
                        gates.push(Gate::butterfly(2 * a + 1, 2 * c + 1));
                    }
                }
                out.push(Stage { bit: Some(b), gates });
            }
        }
    }
    out
}

fn label(s: &TransformSpec) -> String {
    format!("{}{}", s.kind.name(), s.n)
}

/// Rotation-only program computing [`target_matrix`].
pub fn target_program(s: &TransformSpec) -> GateProgram {
    target_program_with(s, BuildOptions::default())
}

pub fn target_program_with(s: &TransformSpec, opts: BuildOptions) -> GateProgram {
    let gates = stages(s, opts).into_iter().flat_map(|st| st.gates).collect();
    GateProgram::new(s.n, gates, label(s)).expect("builder emits valid gates")
}

/// Column permutation realised by a DFT program built without explicit
/// permutation: column `k` of its final matrix is column `perm[k]` of the target.
pub fn relabeled_input_columns(s: &TransformSpec) -> Vec<usize> {
    let bits = s.units().trailing_zeros();
    let w = s.unit_width();
    (0..s.n)
        .map(|row| {
            let unit = row / w;
            bit_reverse(unit, bits) * w + row % w
        })
        .collect()
}

/// A Δ-integral variant of [`target_program`] with the same final matrix.
///
/// Before each butterfly stage every row is multiplied by a power of `delta`
/// chosen from `{window.0, window.1}` so that the two rows of every rotation in
/// the stage carry the same power (the scaling commutes with the rotation).
/// Rows are returned to power 0 at the end, so the lifted final matrix is the
/// target times `z^0`, and every lifted prefix has support inside the window.
pub fn scaled_variant(s: &TransformSpec, delta: f64, window: (i64, i64)) -> Result<GateProgram> {
    let (lo, hi) = window;
    if lo > 0 || hi < 0 {
        return Err(Error::InfeasibleWindow { lo, hi });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let units = s.units();
    let bits = units.trailing_zeros();
    let w = s.unit_width();
    let uniform = if hi != 0 { hi } else { lo };
    let shift_for = |stage_bit: Option<u32>, unit: usize| -> i64 {
        match stage_bit {
            None => 0,
            Some(_) if bits < 2 => uniform,
            Some(b) => {
                let selector = (b + 1) % bits;
                if unit >> selector & 1 == 1 {
                    hi
                } else {
                    lo
                }
            }
        }
    };

    let mut gates = Vec::new();
    let mut current = vec![0i64; s.n];
    let mut retarget = |gates: &mut Vec<Gate>, target: &dyn Fn(usize) -> i64| {
        for (row, cur) in current.iter_mut().enumerate() {
            let want = target(row);
            if want != *cur {
                gates.push(Gate::constant(row, crate::pow_int(delta, want - *cur)));
                *cur = want;
            }
        }
    };
    for stage in stages(s, BuildOptions::default()) {
        retarget(&mut gates, &|row| shift_for(stage.bit, row / w));
        gates.extend(stage.gates);
    }
    retarget(&mut gates, &|_| 0);
    GateProgram::new(
        s.n,
        gates,
        format!("{}-scaled[{},{}]@{}", label(s), lo, hi, delta),
    )
}

/// Two constant gates `Δ` on coordinate 0 and `Δ^-1` on coordinate 1: the
/// smallest program whose geometric and algebraic condition numbers agree.
pub fn tightness_program(delta: f64) -> GateProgram {
    GateProgram::new(
        2,
        vec![Gate::constant(0, delta), Gate::constant(1, 1.0 / delta)],
        format!("tightness@{delta}"),
    )
    .expect("positive constants")
}
