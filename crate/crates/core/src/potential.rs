//! Quasi-entropy potentials and the preconditioners that align them with a
//! target transform.
//!
//! All logarithms are base 2. For a polynomial matrix `M` and preconditioners
//! `A`, `B` the potential is
//!
//! ```text
//! Phi_{A,B}(M) = sum_k sum_{i,j} h(coeff((MA)_ij, k) * conj(coeff((MB)_ij, k)))
//! ```
//!
//! with `h(u) = -u log|u|` and `h(0) = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::condition::{geometric_condition_complex, rho_of};
use crate::error::{Error, Result};
use crate::gate::Gate;
use crate::laurent::LaurentPoly;
use crate::lifting::LiftedProgram;
use crate::polymatrix::PolyMatrix;
use crate::pow_int;

/// Rotation-change constant measured by `oracle::calibrate_rotation_constant`
/// with a 256-point angle grid over the fixed calibration configurations and
/// seeds `0..CALIBRATION_SEEDS`, rounded up in the fourth decimal.
pub const CALIBRATED_ROTATION_CONSTANT: f64 = 2.5432;

/// Number of random paraunitary configurations used for the calibration.
pub const CALIBRATION_SEEDS: u64 = 16;

/// Angle grid used for the calibration.
pub const CALIBRATION_GRID: usize = 256;

/// Tolerance of the identity checks on preconditioners.
pub const PAIR_TOL: f64 = 1e-9;

/// Distance from an integer within which `rho` is not rounded up.
const RHO_SNAP: f64 = 1e-9;

/// `h(u) = -u log2|u|`, with `h(0) = 0`.
pub fn h(u: Complex64) -> Complex64 {
    let r = u.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        -u * r.log2()
    }
}

/// `Phi(M) = sum h(|c|^2)` over all coefficients of all entries.
pub fn quasi_entropy(m: &PolyMatrix) -> f64 {
    m.entries()
        .flat_map(|p| p.terms())
        .map(|(_, c)| h(Complex64::new(c.norm_sqr(), 0.0)).re)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionerPair {
    pub a: PolyMatrix,
    pub b: PolyMatrix,
    /// The transform the pair aligns with.
    pub f: DMatrix<f64>,
    pub delta: f64,
    pub kappa: f64,
    pub rho: i64,
    pub ell: i64,
    pub mu: f64,
}

/// Smallest `l >= 1` with `delta^l <= 1/2`.
pub fn ell_of(delta: f64) -> i64 {
    let mut l = 1;
    while pow_int(delta, l) > 0.5 {
        l += 1;
    }
    l
}

/// `ceil(rho_of(kappa, delta))`, except that values within `1e-9` of an
/// integer are taken as that integer.
pub fn integral_rho(kappa: f64, delta: f64) -> i64 {
    let r = rho_of(kappa, delta);
    let nearest = r.round();
    if (r - nearest).abs() <= RHO_SNAP {
        nearest as i64
    } else {
        r.ceil() as i64
    }
}

impl PreconditionerPair {
    /// The range `R = {rho, ..., rho + ell}`.
    pub fn range(&self) -> std::ops::RangeInclusive<i64> {
        self.rho..=self.rho + self.ell
    }

    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    /// `sum_{k=0}^{rho+ell} delta^k z^-k`.
    pub fn a_poly(&self) -> LaurentPoly {
        LaurentPoly::from_real_terms((0..=self.rho + self.ell).map(|k| (-k, pow_int(self.delta, k))))
    }

    /// `sum_{i in R} z^-i`.
    pub fn comb(&self) -> LaurentPoly {
        LaurentPoly::from_real_terms(self.range().map(|i| (-i, 1.0)))
    }

    /// Closed-form row norm of `MA` for paraunitary `M`.
    pub fn expected_row_norm_a(&self) -> f64 {
        (0..=self.rho + self.ell)
            .map(|k| pow_int(self.delta, 2 * k))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-form row norm of `MB` for paraunitary `M`: `sqrt(ell + 1)`.
    pub fn expected_row_norm_b(&self) -> f64 {
        ((self.ell + 1) as f64).sqrt()
    }

    /// Builds `A` and `B` for a lifted final matrix whose value at `delta` is `f`.
    pub fn build(lifted_final: &PolyMatrix, f: &DMatrix<f64>, delta: f64, kappa: f64) -> Result<Self> {
        let at = lifted_final.evaluate_real(delta)?;
        let gap = at
            .iter()
            .zip(f.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if at.shape() != f.shape() || gap > PAIR_TOL {
            return Err(Error::FinalMatrixMismatch(gap));
        }
        Self::for_target(lifted_final, f, delta, kappa)
    }

    /// Builds `A` and `B` for an arbitrary orthogonal target `f`, without
    /// requiring the lifted final matrix to evaluate to it.
    pub fn for_target(lifted_final: &PolyMatrix, f: &DMatrix<f64>, delta: f64, kappa: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::DeltaOutOfRange(delta));
        }
        if !(kappa >= 1.0) {
            return Err(Error::KappaBelowOne(kappa));
        }
        let n = lifted_final.nrows();
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.nrows() });
        }
        let (ok, residual) = lifted_final.is_paraunitary(PAIR_TOL)?;
        if !ok {
            return Err(Error::NotParaunitary(residual));
        }
        let orth = (f.transpose() * f - DMatrix::identity(n, n)).abs().max();
        if orth > PAIR_TOL {
            return Err(Error::NotOrthogonal(orth));
        }
        let rho = integral_rho(kappa, delta);
        let ell = ell_of(delta);
        let mut pair = Self {
            a: PolyMatrix::identity(n),
            b: PolyMatrix::identity(n),
            f: f.clone(),
            delta,
            kappa,
            rho,
            ell,
            mu: 1.0 - delta,
        };
        pair.a = PolyMatrix::identity(n).scale_poly(&pair.a_poly());
        pair.b = lifted_final
            .adjoint()
            .try_mul(&PolyMatrix::from_real(f).scale_poly(&pair.comb()))?;
        Ok(pair)
    }
}

/// Shorthand for [`PreconditionerPair::build`].
pub fn build_preconditioners(lifted_final: &PolyMatrix, f: &DMatrix<f64>, delta: f64, kappa: f64) -> Result<PreconditionerPair> {
    PreconditionerPair::build(lifted_final, f, delta, kappa)
}

/// `Phi` of coefficient products of two matrices of equal shape.
pub fn entropy_of_products(ma: &PolyMatrix, mb: &PolyMatrix) -> Complex64 {
    ma.entries()
        .zip(mb.entries())
        .map(|(pa, pb)| {
            pa.terms()
                .map(|(k, ca)| h(ca * pb.coeff(k).conj()))
                .sum::<Complex64>()
        })
        .sum()
}

/// `Phi_{A,B}(M)`.
pub fn preconditioned_entropy(m: &PolyMatrix, pair: &PreconditionerPair) -> Result<Complex64> {
    let ma = m.try_mul(&pair.a)?;
    let mb = m.try_mul(&pair.b)?;
    Ok(entropy_of_products(&ma, &mb))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub i: i64,
    /// The support of the lifted final matrix lies in `[-i, rho + ell - i]`.
    pub covered: bool,
    /// `max |coeff(M A, -i) - delta^i M[delta]|`.
    pub residual: f64,
    /// `max |coeff(M A, -i) - delta^i F|`.
    pub target_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientReport {
    pub val: i64,
    pub deg: i64,
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientReport {
    pub fn all_covered(&self) -> bool {
        self.rows.iter().all(|r| r.covered)
    }

    /// Every `i` is covered and matches `delta^i M[delta]` within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.covered && r.residual <= tol)
    }

    pub fn max_target_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.target_residual).fold(0.0, f64::max)
    }
}

/// Compares the coefficients of `M A` at `z^-i`, `i` in `R`, with `delta^i M[delta]`.
pub fn coefficient_claim_check(lifted_final: &PolyMatrix, pair: &PreconditionerPair) -> Result<CoefficientReport> {
    let (deg, val) = lifted_final.deg_val()?;
    let product = lifted_final.try_mul(&pair.a)?;
    let at = lifted_final.evaluate_real(pair.delta)?;
    let top = pair.rho + pair.ell;
    let rows = pair
        .range()
        .map(|i| {
            let coeff = product.coeff_matrix(-i);
            let scale = pow_int(pair.delta, i);
            let residual = coeff
                .iter()
                .zip(at.iter())
                .map(|(c, m)| (c - m * scale).norm())
                .fold(0.0, f64::max);
            let target_residual = coeff
                .iter()
                .zip(pair.f.iter())
                .map(|(c, f)| (c - f * scale).norm())
                .fold(0.0, f64::max);
            CoefficientRow {
                i,
                covered: val >= -i && deg <= top - i,
                residual,
                target_residual,
            }
        })
        .collect();
    Ok(CoefficientReport { val, deg, rows })
}

/// Largest change, over columns and coefficients, of the two-row inner
/// product `sum_{r in {i,j}} coeff((MA)_rc, k) conj(coeff((MB)_rc, k))`.
pub fn two_row_inner_product_change(
    before: (&PolyMatrix, &PolyMatrix),
    after: (&PolyMatrix, &PolyMatrix),
    rows: (usize, usize),
) -> f64 {
    let inner = |ma: &PolyMatrix, mb: &PolyMatrix, c: usize, k: i64| -> Complex64 {
        [rows.0, rows.1]
            .iter()
            .map(|&r| ma.get(r, c).coeff(k) * mb.get(r, c).coeff(k).conj())
            .sum()
    };
    let mut worst: f64 = 0.0;
    for c in 0..before.0.ncols() {
        let mut ks: Vec<i64> = [before.0, after.0]
            .iter()
            .flat_map(|m| [m.get(rows.0, c), m.get(rows.1, c)])
            .flat_map(|p| p.terms().map(|(k, _)| k))
            .collect();
        ks.sort_unstable();
        ks.dedup();
        for k in ks {
            let d = inner(before.0, before.1, c, k) - inner(after.0, after.1, c, k);
            worst = worst.max(d.norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub gate: &'static str,
    pub phi_re: f64,
    pub phi_im: f64,
    pub dphi: f64,
    /// `C ||M^(t-1) A||_{2,inf} ||M^(t-1) B||_{2,inf}`.
    pub bound: f64,
    pub row_a: f64,
    pub row_b: f64,
    pub deg: i64,
    pub val: i64,
    pub alg_cond: f64,
    pub geo_cond: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTrace {
    pub c: f64,
    pub delta: f64,
    pub kappa: f64,
    pub rho: i64,
    pub ell: i64,
    pub phi_identity: f64,
    pub phi_final: f64,
    pub rows: Vec<TraceRow>,
    /// Steps whose rotation change exceeds the bound.
    pub violations: Vec<usize>,
    /// Largest `|dphi|` over constant steps.
    pub max_monomial_change: f64,
    /// Largest `|Im Phi|` over all steps.
    pub max_imaginary: f64,
    /// Largest deviation of any row norm of `MA` and `MB` from the closed forms.
    pub max_row_norm_dev_a: f64,
    pub max_row_norm_dev_b: f64,
    /// Largest change of the two-row inner products over rotation steps.
    pub max_inner_product_change: f64,
    /// Largest `|dphi| / bound` over rotation steps.
    pub max_bound_usage: f64,
}

impl PotentialTrace {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn max_bound(&self) -> f64 {
        self.rows.iter().map(|r| r.bound).fold(0.0, f64::max)
    }
}

/// Evaluates `Phi_{A,B}` along a lifted program and checks the per-step
/// change, row-norm and inner-product identities.
pub fn potential_trace(lifted: &LiftedProgram, pair: &PreconditionerPair, c: f64) -> Result<PotentialTrace> {
    let delta = lifted.delta;
    let (exp_a, exp_b) = (pair.expected_row_norm_a(), pair.expected_row_norm_b());
    let products = lifted
        .steps
        .iter()
        .map(|m| Ok((m.try_mul(&pair.a)?, m.try_mul(&pair.b)?)))
        .collect::<Result<Vec<_>>>()?;
    let phis: Vec<Complex64> = products.iter().map(|(ma, mb)| entropy_of_products(ma, mb)).collect();

    let mut max_row_norm_dev_a: f64 = 0.0;
    let mut max_row_norm_dev_b: f64 = 0.0;
    for (ma, mb) in &products {
        for r in 0..ma.nrows() {
            max_row_norm_dev_a = max_row_norm_dev_a.max((ma.row_norm(r) - exp_a).abs());
            max_row_norm_dev_b = max_row_norm_dev_b.max((mb.row_norm(r) - exp_b).abs());
        }
    }

    let mut rows = Vec::with_capacity(lifted.m());
    let mut violations = Vec::new();
    let mut max_monomial_change: f64 = 0.0;
    let mut max_inner_product_change: f64 = 0.0;
    let mut max_bound_usage: f64 = 0.0;
    for (idx, gate) in lifted.gates.iter().enumerate() {
        let t = idx + 1;
        let (ma0, mb0) = &products[idx];
        let (ma1, mb1) = &products[t];
        let dphi = phis[t].re - phis[idx].re;
        let (row_a, row_b) = (ma0.max_row_norm(), mb0.max_row_norm());
        let bound = c * row_a * row_b;
        match *gate {
            Gate::Rotation { i, j, .. } => {
                if dphi.abs() > bound {
                    violations.push(t);
                }
                if bound > 0.0 {
                    max_bound_usage = max_bound_usage.max(dphi.abs() / bound);
                }
                max_inner_product_change =
                    max_inner_product_change.max(two_row_inner_product_change((ma0, mb0), (ma1, mb1), (i, j)));
            }
            Gate::Constant { .. } => max_monomial_change = max_monomial_change.max(dphi.abs()),
        }
        let step = &lifted.steps[t];
        let (deg, val) = step.deg_val()?;
        let geo_cond = geometric_condition_complex(&step.evaluate_real(delta)?).map_err(|e| match e {
            Error::Singular { .. } => Error::Singular { t },
            other => other,
        })?;
        rows.push(TraceRow {
            t,
            gate: gate.kind(),
            phi_re: phis[t].re,
            phi_im: phis[t].im,
            dphi,
            bound,
            row_a,
            row_b,
            deg,
            val,
            alg_cond: pow_int(delta, val - deg),
            geo_cond,
        });
    }
    Ok(PotentialTrace {
        c,
        delta,
        kappa: pair.kappa,
        rho: pair.rho,
        ell: pair.ell,
        phi_identity: phis[0].re,
        phi_final: phis.last().unwrap().re,
        rows,
        violations,
        max_monomial_change,
        max_imaginary: phis.iter().map(|p| p.im.abs()).fold(0.0, f64::max),
        max_row_norm_dev_a,
        max_row_norm_dev_b,
        max_inner_product_change,
        max_bound_usage,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointReport {
    pub n: usize,
    pub kappa: f64,
    pub ell: i64,
    pub phi_identity: f64,
    pub phi_final: f64,
    /// `ell n log2 n / sqrt(kappa)`.
    pub scale: f64,
    pub identity_ratio: f64,
    pub final_ratio: f64,
    pub gap: f64,
    pub max_step_bound: f64,
    /// `gap / max_step_bound`: steps needed if every step used the full bound.
    pub implied_steps: f64,
    pub m: usize,
    pub consistent: bool,
}

/// Compares the potential at both ends of a trace with its per-step bound.
pub fn endpoint_gap_report(trace: &PotentialTrace, n: usize, kappa: f64, ell: i64) -> EndpointReport {
    let scale = ell as f64 * n as f64 * (n as f64).log2() / kappa.sqrt();
    let gap = trace.phi_final - trace.phi_identity;
    let max_step_bound = trace.max_bound();
    let implied_steps = if max_step_bound > 0.0 { gap / max_step_bound } else { f64::INFINITY };
    EndpointReport {
        n,
        kappa,
        ell,
        phi_identity: trace.phi_identity,
        phi_final: trace.phi_final,
        scale,
        identity_ratio: trace.phi_identity / scale,
        final_ratio: trace.phi_final / scale,
        gap,
        max_step_bound,
        implied_steps,
        m: trace.m(),
        consistent: implied_steps <= trace.m() as f64,
    }
}
