//! Geometric and algebraic condition numbers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::GateProgram;
use crate::lifting::{lifted_supports, rounded_programs, IntegralityCertificate, LiftedProgram, RoundingSchedule};
use crate::polymatrix::PolyMatrix;
use crate::pow_int;

/// Default number of unit-circle samples for the maximum-modulus check.
pub const DEFAULT_CIRCLE_SAMPLES: usize = 512;

/// Smallest accepted ratio `sigma_min / sigma_max` before a matrix counts as singular.
const SINGULAR_RATIO: f64 = 1e-14;

fn check_finite<I: Iterator<Item = bool>>(mut finite: I) -> Result<()> {
    if finite.all(|f| f) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn extreme_singular_values(sv: &DVector<f64>) -> (f64, f64) {
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m.iter().map(|x| x.is_finite()))?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(extreme_singular_values(&m.singular_values()).0)
}

pub fn spectral_norm_complex(m: &DMatrix<Complex64>) -> Result<f64> {
    check_finite(m.iter().map(|x| x.is_finite()))?;
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(extreme_singular_values(&m.clone().singular_values()).0)
}

/// `||M|| ||M^-1||`, computed as the ratio of extreme singular values.
pub fn geometric_condition(m: &DMatrix<f64>) -> Result<f64> {
    check_finite(m.iter().map(|x| x.is_finite()))?;
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let (max, min) = extreme_singular_values(&m.singular_values());
    if !(min > SINGULAR_RATIO * max) {
        return Err(Error::Singular { t: 0 });
    }
    Ok(max / min)
}

pub fn geometric_condition_complex(m: &DMatrix<Complex64>) -> Result<f64> {
    check_finite(m.iter().map(|x| x.is_finite()))?;
    let (max, min) = extreme_singular_values(&m.clone().singular_values());
    if !(min > SINGULAR_RATIO * max) {
        return Err(Error::Singular { t: 0 });
    }
    Ok(max / min)
}

/// Geometric condition of every prefix `M^(t)`, with the maximum.
pub fn algorithm_geometric_condition(p: &GateProgram) -> Result<(Vec<f64>, f64)> {
    let per_step = p
        .prefix_matrices()
        .iter()
        .enumerate()
        .map(|(t, m)| {
            geometric_condition(m).map_err(|e| match e {
                Error::Singular { .. } => Error::Singular { t },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = per_step.iter().copied().fold(1.0, f64::max);
    Ok((per_step, max))
}

/// `log kappa / (2 log 1/delta)`, so that `delta^rho = kappa^(-1/2)`.
pub fn rho_of(kappa: f64, delta: f64) -> f64 {
    kappa.ln() / (2.0 * (1.0 / delta).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCondition {
    pub t: usize,
    pub geometric: f64,
    pub deg: i64,
    pub val: i64,
    pub algebraic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub delta: f64,
    pub steps: Vec<StepCondition>,
    pub algorithm_geometric: f64,
    pub algorithm_algebraic: f64,
    pub rho: f64,
}

/// Per-step `delta^(val - deg)` of a lifted program, together with the
/// geometric condition of its evaluation at `delta`.
pub fn algebraic_condition(lifted: &LiftedProgram) -> Result<ConditionReport> {
    let delta = lifted.delta;
    let mut steps = Vec::with_capacity(lifted.steps.len());
    for (t, m) in lifted.steps.iter().enumerate() {
        let (deg, val) = m.deg_val()?;
        let geometric = geometric_condition_complex(&m.evaluate_real(delta)?).map_err(|e| match e {
            Error::Singular { .. } => Error::Singular { t },
            other => other,
        })?;
        steps.push(StepCondition {
            t,
            geometric,
            deg,
            val,
            algebraic: pow_int(delta, val - deg),
        });
    }
    let algorithm_geometric = steps.iter().map(|s| s.geometric).fold(1.0, f64::max);
    let algorithm_algebraic = steps.iter().map(|s| s.algebraic).fold(1.0, f64::max);
    Ok(ConditionReport {
        delta,
        steps,
        algorithm_geometric,
        algorithm_algebraic,
        rho: rho_of(algorithm_algebraic, delta),
    })
}

/// `max_t delta^(val - deg)` from the supports alone.
pub fn algebraic_condition_of(p: &GateProgram, cert: &IntegralityCertificate) -> Result<f64> {
    Ok(lifted_supports(p, cert)?
        .iter()
        .map(|&(d, v)| pow_int(cert.delta, v - d))
        .fold(1.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaSequence {
    pub deltas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub estimate: f64,
    /// `|kappa_q - kappa_{q-1}| / kappa_{q-1}` at the last q (0 for one term).
    pub last_relative_step: f64,
    pub converged: bool,
}

/// Relative step below which the sequence counts as converged.
pub const KAPPA_CONVERGENCE_TOL: f64 = 1e-6;

/// `kappa_q`: the algebraic condition of each rounded program at its own base.
pub fn general_algebraic_condition(p: &GateProgram, schedule: &RoundingSchedule) -> Result<KappaSequence> {
    let mut kappas = Vec::with_capacity(schedule.len());
    for ((rounded, cert), &ln_dq) in rounded_programs(p, schedule).iter().zip(schedule.ln_deltas()) {
        let kappa = lifted_supports(rounded, cert)?
            .iter()
            .map(|&(d, v)| ((v - d) as f64 * ln_dq).exp())
            .fold(1.0, f64::max);
        kappas.push(kappa);
    }
    let last_relative_step = match kappas.len() {
        0 | 1 => 0.0,
        k => (kappas[k - 1] - kappas[k - 2]).abs() / kappas[k - 2],
    };
    Ok(KappaSequence {
        deltas: schedule.deltas().to_vec(),
        estimate: kappas.last().copied().unwrap_or(1.0),
        converged: last_relative_step < KAPPA_CONVERGENCE_TOL,
        last_relative_step,
        kappas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Row {
    pub t: usize,
    pub geometric: f64,
    pub algebraic: f64,
    /// `algebraic - geometric`.
    pub margin: f64,
    pub equality: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub rows: Vec<Lemma1Row>,
    pub min_margin: f64,
    pub holds: bool,
}

/// Accepted negative margin in the geometric-versus-algebraic comparison.
pub const LEMMA1_TOL: f64 = 1e-9;

/// Compares geometric and algebraic condition at every step of `p`.
pub fn lemma1_check(p: &GateProgram, cert: &IntegralityCertificate) -> Result<Lemma1Report> {
    let supports = lifted_supports(p, cert)?;
    let (geometric, _) = algorithm_geometric_condition(p)?;
    let rows: Vec<Lemma1Row> = supports
        .iter()
        .zip(geometric)
        .enumerate()
        .map(|(t, (&(d, v), g))| {
            let a = pow_int(cert.delta, v - d);
            Lemma1Row {
                t,
                geometric: g,
                algebraic: a,
                margin: a - g,
                equality: (a - g).abs() <= 1e-9 * a,
            }
        })
        .collect();
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(Lemma1Report {
        holds: min_margin >= -LEMMA1_TOL,
        min_margin,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxModulusReport {
    /// `||(z^-val M)[delta]||`.
    pub interior_lower: f64,
    /// Circle maximum of `||z^-val M||`.
    pub circle_lower: f64,
    /// `||(z^deg M*)[delta]||`.
    pub interior_upper: f64,
    /// Circle maximum of `||z^deg M*||`.
    pub circle_upper: f64,
    /// `circle - interior` for each inequality; nonnegative when they hold.
    pub slack_lower: f64,
    pub slack_upper: f64,
}

/// Accepted negative slack of the sampled maximum-modulus inequalities.
pub const MAX_MODULUS_TOL: f64 = 1e-8;

impl MaxModulusReport {
    pub fn holds(&self) -> bool {
        self.slack_lower >= -MAX_MODULUS_TOL && self.slack_upper >= -MAX_MODULUS_TOL
    }
}

/// Samples the two polynomial matrices `z^-val M` and `z^deg M*` (both with
/// nonnegative exponents) on `samples` equispaced unit-circle points and
/// compares the maxima with their norms at `delta`.
pub fn max_modulus_check(m: &PolyMatrix, delta: f64, samples: usize) -> Result<MaxModulusReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let (deg, val) = m.deg_val()?;
    let lower = m.shift(-val);
    let upper = m.adjoint().shift(deg);
    let at = |x: &PolyMatrix, w: Complex64| -> Result<f64> { spectral_norm_complex(&x.evaluate(w)?) };
    let interior_lower = at(&lower, Complex64::new(delta, 0.0))?;
    let interior_upper = at(&upper, Complex64::new(delta, 0.0))?;
    let (mut circle_lower, mut circle_upper) = (0.0f64, 0.0f64);
    for s in 0..samples.max(1) {
        let w = Complex64::from_polar(1.0, std::f64::consts::TAU * s as f64 / samples.max(1) as f64);
        circle_lower = circle_lower.max(at(&lower, w)?);
        circle_upper = circle_upper.max(at(&upper, w)?);
    }
    Ok(MaxModulusReport {
        interior_lower,
        circle_lower,
        interior_upper,
        circle_upper,
        slack_lower: circle_lower - interior_lower,
        slack_upper: circle_upper - interior_upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundCertificate {
    pub n: usize,
    pub kappa: f64,
    pub m_actual: usize,
    /// `n log2 n / sqrt(kappa)`.
    pub bound: f64,
    /// `m_actual / bound`.
    pub ratio: f64,
}

pub fn lower_bound_certificate(n: usize, kappa: f64, m_actual: usize) -> Result<LowerBoundCertificate> {
    if !(kappa >= 1.0) {
        return Err(Error::KappaBelowOne(kappa));
    }
    let bound = n as f64 * (n as f64).log2() / kappa.sqrt();
    Ok(LowerBoundCertificate {
        n,
        kappa,
        m_actual,
        bound,
        ratio: m_actual as f64 / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::Gate;
    use crate::lifting::{check_integral, lift};
    use crate::transform::{scaled_variant, target_program, tightness_program, TransformSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.75, 4.0 / 3.0]));
        assert!((spectral_norm(&d).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((geometric_condition(&d).unwrap() - 16.0 / 9.0).abs() < 1e-12);
        let mut bad = d.clone();
        bad[(0, 0)] = f64::NAN;
        assert_eq!(spectral_norm(&bad), Err(Error::NonFinite));
    }

    #[test]
    fn spectral_norm_matches_direction_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let computed = spectral_norm(&m).unwrap();
        let ratio = |x: &nalgebra::DVector<f64>| (&m * x).norm() / x.norm();
        let mut best = nalgebra::DVector::zeros(5);
        let mut best_val = 0.0;
        for _ in 0..100_000 {
            let x = nalgebra::DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let r = ratio(&x);
            if r > best_val {
                best_val = r;
                best = x;
            }
        }
        let mut step = 0.1;
        while step > 1e-9 {
            let mut improved = false;
            for k in 0..5 {
                for sign in [-1.0, 1.0] {
                    let mut y = best.clone();
                    y[k] += sign * step;
                    let r = ratio(&y);
                    if r > best_val {
                        best_val = r;
                        best = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        assert!(best_val <= computed * (1.0 + 1e-12));
        assert!(best_val >= computed * (1.0 - 1e-3));
    }

    #[test]
    fn condition_of_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let inv = m.clone().try_inverse().unwrap();
            let (a, b) = (geometric_condition(&m).unwrap(), geometric_condition(&inv).unwrap());
            assert!((a - b).abs() <= 1e-8 * a);
        }
        assert!(matches!(geometric_condition(&DMatrix::zeros(2, 2)), Err(Error::Singular { .. })));
    }

    #[test]
    fn singular_prefix_reports_step() {
        let p = GateProgram::new(2, vec![Gate::butterfly(0, 1), Gate::constant(0, 1e-300)], "").unwrap();
        assert_eq!(algorithm_geometric_condition(&p).unwrap_err(), Error::Singular { t: 2 });
    }

    #[test]
    fn tightness_conditions() {
        let p = tightness_program(0.75);
        let cert = check_integral(&p, 0.75).unwrap();
        let rep = algebraic_condition(&lift(&p, &cert).unwrap()).unwrap();
        let last = rep.steps.last().unwrap();
        assert_eq!((last.deg, last.val), (1, -1));
        assert!((last.algebraic - 16.0 / 9.0).abs() < 1e-12);
        assert!((last.geometric - 16.0 / 9.0).abs() < 1e-12);
        assert!((rep.rho - 1.0).abs() < 1e-12);
        let l1 = lemma1_check(&p, &cert).unwrap();
        assert!(l1.holds);
        assert!(l1.rows.last().unwrap().equality);
    }

    #[test]
    fn rotation_only_is_perfectly_conditioned() {
        let p = target_program(&TransformSpec::walsh_hadamard(8).unwrap());
        let cert = check_integral(&p, 0.75).unwrap();
        let rep = algebraic_condition(&lift(&p, &cert).unwrap()).unwrap();
        for s in &rep.steps {
            assert_eq!(s.algebraic, 1.0);
            assert!((s.geometric - 1.0).abs() < 1e-9);
        }
        let seq = general_algebraic_condition(&p, &RoundingSchedule::default()).unwrap();
        assert!(seq.kappas.iter().all(|&k| k == 1.0));
    }

    #[test]
    fn scaled_window_bounds_condition() {
        let s = TransformSpec::walsh_hadamard(8).unwrap();
        let p = scaled_variant(&s, 0.75, (-1, 1)).unwrap();
        let cert = check_integral(&p, 0.75).unwrap();
        let rep = algebraic_condition(&lift(&p, &cert).unwrap()).unwrap();
        assert!(rep.algorithm_algebraic <= 16.0 / 9.0 + 1e-12);
        assert!(rep.algorithm_geometric <= rep.algorithm_algebraic + 1e-9);
    }

    #[test]
    fn base_substitution_preserves_condition() {
        let p = tightness_program(0.75);
        let a = algebraic_condition_of(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        let root = 0.75f64.sqrt();
        let b = algebraic_condition_of(&p, &check_integral(&p, root).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn common_monomial_shift_preserves_condition() {
        let p = scaled_variant(&TransformSpec::walsh_hadamard(4).unwrap(), 0.75, (-1, 1)).unwrap();
        let lifted = lift(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        for step in &lifted.steps {
            let (d, v) = step.deg_val().unwrap();
            let (d2, v2) = step.shift(5).deg_val().unwrap();
            assert_eq!(v - d, v2 - d2);
        }
    }

    #[test]
    fn power_schedule_gives_constant_sequence() {
        let p = scaled_variant(&TransformSpec::walsh_hadamard(4).unwrap(), 0.75, (-1, 1)).unwrap();
        let kappa = algebraic_condition_of(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        let seq = general_algebraic_condition(&p, &RoundingSchedule::roots_of(0.75, 12).unwrap()).unwrap();
        for k in &seq.kappas {
            assert!((k - kappa).abs() <= 1e-9 * kappa);
        }
    }

    #[test]
    fn transcendental_constant_tends_to_geometric() {
        let c = 1.0 / std::f64::consts::PI;
        let p = GateProgram::new(2, vec![Gate::constant(0, c)], "").unwrap();
        let seq = general_algebraic_condition(&p, &RoundingSchedule::default()).unwrap();
        let (_, geo) = algorithm_geometric_condition(&p).unwrap();
        assert!((geo - std::f64::consts::PI).abs() < 1e-12);
        assert!((seq.estimate - geo).abs() < 1e-3);
        assert!(seq.converged);
    }

    #[test]
    fn max_modulus_examples() {
        let m = PolyMatrix::monomial_diag(&[1, -1]);
        let r = max_modulus_check(&m, 0.75, 64).unwrap();
        assert!((r.interior_lower - 1.0).abs() < 1e-12);
        assert!((r.circle_lower - 1.0).abs() < 1e-12);
        assert!(r.holds());
        let wh = target_program(&TransformSpec::walsh_hadamard(4).unwrap());
        let lifted = lift(&wh, &check_integral(&wh, 0.75).unwrap()).unwrap();
        let r = max_modulus_check(lifted.final_matrix(), 0.75, 16).unwrap();
        for v in [r.interior_lower, r.circle_lower, r.interior_upper, r.circle_upper] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_bound_examples() {
        let c = lower_bound_certificate(8, 1.0, 12).unwrap();
        assert!((c.ratio - 0.5).abs() < 1e-12);
        let d = lower_bound_certificate(8, 16.0 / 9.0, 12).unwrap();
        assert!((d.bound / c.bound - 0.75).abs() < 1e-12);
        assert!(lower_bound_certificate(8, 0.5, 12).is_err());
        let e = lower_bound_certificate(16, 16.0, 1).unwrap();
        assert!((e.bound - 16.0).abs() < 1e-12);
    }
}
