//! Replacing constant gates by monomials.
//!
//! A program is integral with respect to `Δ` when every constant is `Δ^k` for
//! an integer `k`. Lifting then replaces the constant `c` by `z^{log_Δ c}` and
//! keeps rotations as they are, producing Laurent-polynomial prefixes
//! `M_Δ^(t)` with `M_Δ^(t)[Δ] = M^(t)`. Programs that are integral for no base
//! are handled through a rounding schedule `Δ_1 < Δ_2 < ... -> 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::{max_abs_diff, Gate, GateProgram};
use crate::polymatrix::PolyMatrix;
use crate::pow_int;

/// Accepted distance of `log_Δ c` from the nearest integer.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Accepted relative gap `|Δ^k - c| / c`, used when `k` is so large that the
/// logarithm itself carries more than `INTEGRALITY_TOL` of rounding error.
pub const INTEGRALITY_VALUE_TOL: f64 = 1e-12;

/// Relative distance from an integer at which the rounding ceiling snaps.
pub const CEIL_SNAP_TOL: f64 = 1e-12;

const TWO_THIRDS: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralityCertificate {
    /// The base actually used, always in `(2/3, 1)`.
    pub delta: f64,
    /// The base that was asked for; differs from `delta` when it was at most
    /// 2/3 and `delta = requested^(1/root)` was substituted.
    pub requested_delta: f64,
    pub root: u32,
    /// `(c, log_delta c)` for every distinct constant, in program order.
    pub exponents: Vec<(f64, i64)>,
}

impl IntegralityCertificate {
    pub fn exponent_of(&self, c: f64) -> Option<i64> {
        self.exponents.iter().find(|(v, _)| *v == c).map(|&(_, k)| k)
    }
}

/// Checks that every constant of `p` is an integral power of `delta`.
pub fn check_integral(p: &GateProgram, delta: f64) -> Result<IntegralityCertificate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let mut root = 1u32;
    let mut base = delta;
    while base <= TWO_THIRDS {
        root += 1;
        base = delta.powf(1.0 / root as f64);
    }
    let ln_base = base.ln();
    let mut exponents = Vec::new();
    for c in p.constants_set() {
        let log = c.ln() / ln_base;
        let k = log.round();
        let value_gap = (pow_int(base, k as i64) - c).abs() / c;
        if (log - k).abs() > INTEGRALITY_TOL && value_gap > INTEGRALITY_VALUE_TOL {
            return Err(Error::NonIntegralConstant {
                value: c,
                delta: base,
                log,
            });
        }
        exponents.push((c, k as i64));
    }
    Ok(IntegralityCertificate {
        delta: base,
        requested_delta: delta,
        root,
        exponents,
    })
}

/// A lifted program: the gates together with `M_Δ^(0), ..., M_Δ^(m)`.
#[derive(Debug, Clone)]
pub struct LiftedProgram {
    pub delta: f64,
    pub gates: Vec<Gate>,
    /// Monomial exponent for each constant gate, `None` for rotations.
    pub exponents: Vec<Option<i64>>,
    pub steps: Vec<PolyMatrix>,
}

impl LiftedProgram {
    pub fn n(&self) -> usize {
        self.steps[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.gates.len()
    }

    pub fn final_matrix(&self) -> &PolyMatrix {
        self.steps.last().expect("at least M^(0)")
    }

    /// Largest `|M_Δ^(t)[Δ] - M^(t)|` entry over all steps.
    pub fn evaluation_residual(&self, p: &GateProgram) -> Result<f64> {
        let prefixes = p.prefix_matrices();
        let mut worst: f64 = 0.0;
        for (lifted, real) in self.steps.iter().zip(&prefixes) {
            let at = lifted.evaluate_real(self.delta)?;
            for (a, b) in at.iter().zip(real.iter()) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok(worst)
    }
}

fn gate_exponents(p: &GateProgram, cert: &IntegralityCertificate) -> Result<Vec<Option<i64>>> {
    p.gates()
        .iter()
        .map(|g| match *g {
            Gate::Rotation { .. } => Ok(None),
            Gate::Constant { c, .. } => cert
                .exponent_of(c)
                .map(Some)
                .ok_or(Error::CertificateMismatch(c)),
        })
        .collect()
}

/// Lifts `p` to Laurent-polynomial prefixes using the exponents in `cert`.
pub fn lift(p: &GateProgram, cert: &IntegralityCertificate) -> Result<LiftedProgram> {
    let exponents = gate_exponents(p, cert)?;
    let mut current = PolyMatrix::identity(p.n());
    let mut steps = Vec::with_capacity(p.len() + 1);
    steps.push(current.clone());
    for (g, e) in p.gates().iter().zip(&exponents) {
        apply_lifted(&mut current, g, *e);
        steps.push(current.clone());
    }
    Ok(LiftedProgram {
        delta: cert.delta,
        gates: p.gates().to_vec(),
        exponents,
        steps,
    })
}

/// Only `(deg, val)` of every lifted prefix, without keeping the matrices.
pub fn lifted_supports(p: &GateProgram, cert: &IntegralityCertificate) -> Result<Vec<(i64, i64)>> {
    let exponents = gate_exponents(p, cert)?;
    let mut current = PolyMatrix::identity(p.n());
    let mut out = Vec::with_capacity(p.len() + 1);
    out.push(current.deg_val()?);
    for (g, e) in p.gates().iter().zip(&exponents) {
        apply_lifted(&mut current, g, *e);
        out.push(current.deg_val()?);
    }
    Ok(out)
}

fn apply_lifted(m: &mut PolyMatrix, g: &Gate, exponent: Option<i64>) {
    match *g {
        Gate::Rotation { i, j, .. } => m.rotate_rows(i, j, g.block().unwrap()),
        Gate::Constant { i, .. } => m.shift_row(i, exponent.expect("constant gate exponent")),
    }
}

/// `ceil(x)`, except that values within a relative `CEIL_SNAP_TOL` of an
/// integer return that integer.
pub fn snapped_ceil(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= CEIL_SNAP_TOL * x.abs().max(1.0) {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// Replaces every constant `c` by `Δ_q^{ceil(log_{Δ_q} c)}`; rotations are kept.
pub fn round_to_integral(p: &GateProgram, delta_q: f64) -> Result<GateProgram> {
    if !(delta_q > 0.0 && delta_q < 1.0) {
        return Err(Error::DeltaOutOfRange(delta_q));
    }
    Ok(round_with_log(p, delta_q, delta_q.ln(), |k| pow_int(delta_q, k)).0)
}

/// Rounding at a base given together with its logarithm; `power(k)` forms
/// the rounded constant.
fn round_with_log(p: &GateProgram, delta_q: f64, ln_dq: f64, power: impl Fn(i64) -> f64) -> (GateProgram, IntegralityCertificate) {
    let mut exponents: Vec<(f64, i64)> = Vec::new();
    let gates = p
        .gates()
        .iter()
        .map(|g| match *g {
            Gate::Constant { i, c } => {
                let k = snapped_ceil(c.ln() / ln_dq);
                let cq = power(k);
                if !exponents.iter().any(|&(v, _)| v == cq) {
                    exponents.push((cq, k));
                }
                Gate::constant(i, cq)
            }
            rot => rot,
        })
        .collect();
    let rounded = GateProgram::new(p.n(), gates, format!("{}@round{}", p.label, delta_q))
        .expect("rounding keeps gates valid");
    let cert = IntegralityCertificate {
        delta: delta_q,
        requested_delta: delta_q,
        root: 1,
        exponents,
    };
    (rounded, cert)
}

/// The program rounded at every base of `schedule`, with certificates.
/// Constants are formed as `exp(k ln Δ_q)`: for Δ_q close to 1 the stored
/// `Δ_q` carries a relative error of order 1e-9 in its logarithm, which
/// `Δ_q^k` would amplify, and values on nested grids would then disagree.
pub fn rounded_programs(p: &GateProgram, schedule: &RoundingSchedule) -> Vec<(GateProgram, IntegralityCertificate)> {
    schedule
        .deltas
        .iter()
        .zip(&schedule.ln_deltas)
        .map(|(&dq, &ln_dq)| round_with_log(p, dq, ln_dq, |k| (k as f64 * ln_dq).exp()))
        .collect()
}

/// An increasing sequence of bases in `(2/3, 1)` tending to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingSchedule {
    deltas: Vec<f64>,
    /// `ln Δ_q`, kept separately because it is known more precisely than `Δ_q`.
    ln_deltas: Vec<f64>,
}

impl RoundingSchedule {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        for (q, &d) in deltas.iter().enumerate() {
            if !(d > TWO_THIRDS && d < 1.0) {
                return Err(Error::DeltaOutOfRange(d));
            }
            if q > 0 && d <= deltas[q - 1] {
                return Err(Error::DeltaOutOfRange(d));
            }
        }
        let ln_deltas = deltas.iter().map(|d| d.ln()).collect();
        Ok(Self { deltas, ln_deltas })
    }

    fn from_logs(ln_deltas: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(ln_deltas.iter().map(|l| l.exp()).collect())?;
        s.ln_deltas = ln_deltas;
        Ok(s)
    }

    /// `Δ_q = base^(2^-(q-1))`, q = 1..=q_max. Successive grids of powers are
    /// nested, so rounding a constant never moves away from it as q grows.
    pub fn dyadic_roots(base: f64, q_max: usize) -> Result<Self> {
        Self::from_logs((0..q_max).map(|q| base.ln() * 0.5f64.powi(q as i32)).collect())
    }

    /// `Δ_q = base^(1/q)`; every `Δ_q` has `base` among its integral powers.
    pub fn roots_of(base: f64, q_max: usize) -> Result<Self> {
        Self::from_logs((1..=q_max).map(|q| base.ln() / q as f64).collect())
    }

    /// `Δ_q = 1 - 2^-q / 3`, q = 1..=q_max (5/6, 11/12, ...).
    pub fn halving_gap(q_max: usize) -> Result<Self> {
        Self::from_logs((1..=q_max).map(|q| (-(0.5f64.powi(q as i32)) / 3.0).ln_1p()).collect())
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn ln_deltas(&self) -> &[f64] {
        &self.ln_deltas
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

impl Default for RoundingSchedule {
    /// Dyadic roots of 5/6 for q = 1..=20.
    fn default() -> Self {
        Self::dyadic_roots(5.0 / 6.0, 20).expect("valid schedule")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub q: usize,
    pub delta_q: f64,
    /// `max_t max_entry |M_q^(t) - M^(t)|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub target: f64,
    /// Final deviation exceeds `target`.
    pub flagged: bool,
}

impl ConvergenceReport {
    /// Whether deviations never increase from row index `from` (1-based q) on.
    pub fn non_increasing_from(&self, q_from: usize) -> bool {
        self.rows
            .windows(2)
            .filter(|w| w[0].q >= q_from)
            .all(|w| w[1].deviation <= w[0].deviation)
    }

    /// Smallest q whose deviation is at most `level`, if any.
    pub fn first_below(&self, level: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.deviation <= level).map(|r| r.q)
    }
}

/// How closely the rounded programs `A_q` track `A` at every step.
pub fn convergence_report(p: &GateProgram, schedule: &RoundingSchedule, target: f64) -> Result<ConvergenceReport> {
    let exact = p.prefix_matrices();
    let mut rows = Vec::with_capacity(schedule.len());
    for (idx, ((rounded, _), &dq)) in rounded_programs(p, schedule).iter().zip(schedule.deltas()).enumerate() {
        let deviation = rounded
            .prefix_matrices()
            .iter()
            .zip(&exact)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            q: idx + 1,
            delta_q: dq,
            deviation,
        });
    }
    let flagged = rows.last().is_some_and(|r| r.deviation > target);
    Ok(ConvergenceReport {
        rows,
        target,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{scaled_variant, target_program, tightness_program, TransformSpec};
    use std::f64::consts::PI;

    #[test]
    fn rotation_only_has_empty_certificate() {
        let p = target_program(&TransformSpec::walsh_hadamard(8).unwrap());
        let cert = check_integral(&p, 0.9).unwrap();
        assert!(cert.exponents.is_empty());
        assert_eq!(cert.root, 1);
    }

    #[test]
    fn tightness_certificate() {
        let cert = check_integral(&tightness_program(0.75), 0.75).unwrap();
        assert_eq!(cert.exponents, vec![(0.75, 1), (4.0 / 3.0, -1)]);
    }

    #[test]
    fn transcendental_constant_fails() {
        let p = GateProgram::new(1, vec![Gate::constant(0, 1.0 / PI)], "").unwrap();
        match check_integral(&p, 0.75) {
            Err(Error::NonIntegralConstant { value, .. }) => assert_eq!(value, 1.0 / PI),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_base_is_substituted() {
        let p = GateProgram::new(2, vec![Gate::constant(0, 0.25), Gate::constant(1, 2.0)], "").unwrap();
        let cert = check_integral(&p, 0.5).unwrap();
        assert_eq!(cert.root, 2);
        assert!(cert.delta > 2.0 / 3.0);
        assert_eq!(cert.exponents, vec![(0.25, 4), (2.0, -2)]);
        assert!(check_integral(&p, 1.0).is_err());
        assert!(check_integral(&p, 0.0).is_err());
    }

    #[test]
    fn lift_tightness() {
        let p = tightness_program(0.75);
        let lifted = lift(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        assert_eq!(lifted.final_matrix(), &PolyMatrix::monomial_diag(&[1, -1]));
        assert!(lifted.evaluation_residual(&p).unwrap() < 1e-15);
    }

    #[test]
    fn lift_rotation_only_is_constant() {
        let p = target_program(&TransformSpec::walsh_hadamard(4).unwrap());
        let lifted = lift(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        for (step, real) in lifted.steps.iter().zip(p.prefix_matrices()) {
            assert_eq!(step.deg_val().unwrap(), (0, 0));
            assert_eq!(step, &PolyMatrix::from_real(&real));
        }
    }

    #[test]
    fn lift_scaled_wh_stays_in_window() {
        let s = TransformSpec::walsh_hadamard(4).unwrap();
        let p = scaled_variant(&s, 0.75, (-1, 1)).unwrap();
        let lifted = lift(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        for step in &lifted.steps {
            let (d, v) = step.deg_val().unwrap();
            assert!(v >= -1 && d <= 1);
        }
        assert_eq!(lifted.final_matrix().deg_val().unwrap(), (0, 0));
        let supports = lifted_supports(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
        assert!(supports.contains(&(1, -1)));
    }

    #[test]
    fn lift_rejects_foreign_certificate() {
        let p = tightness_program(0.75);
        let other = check_integral(&tightness_program(0.8), 0.8).unwrap();
        assert!(matches!(lift(&p, &other), Err(Error::CertificateMismatch(_))));
    }

    #[test]
    fn rounding_examples() {
        let p = GateProgram::new(1, vec![Gate::constant(0, 1.0 / PI)], "").unwrap();
        let r = round_to_integral(&p, 0.75).unwrap();
        assert_eq!(r.gates()[0], Gate::constant(0, 0.31640625));
        let exact = GateProgram::new(1, vec![Gate::constant(0, 0.75)], "").unwrap();
        assert_eq!(round_to_integral(&exact, 0.75).unwrap().gates(), exact.gates());
        let wh = target_program(&TransformSpec::walsh_hadamard(4).unwrap());
        assert_eq!(round_to_integral(&wh, 0.8).unwrap().gates(), wh.gates());
    }

    #[test]
    fn rounding_is_idempotent() {
        let p = GateProgram::new(2, vec![Gate::constant(0, 1.0 / PI), Gate::butterfly(0, 1), Gate::constant(1, 2.5)], "").unwrap();
        for dq in [0.7, 0.75, 0.9, 0.99, 0.9999] {
            let once = round_to_integral(&p, dq).unwrap();
            let twice = round_to_integral(&once, dq).unwrap();
            assert_eq!(once.gates(), twice.gates());
            assert!(check_integral(&once, dq).is_ok());
        }
    }

    #[test]
    fn schedules() {
        let d = RoundingSchedule::default();
        assert_eq!(d.len(), 20);
        assert!((d.deltas()[0] - 5.0 / 6.0).abs() < 1e-15);
        assert!(RoundingSchedule::halving_gap(10).is_ok());
        assert!(RoundingSchedule::new(vec![0.8, 0.7]).is_err());
        assert!(RoundingSchedule::new(vec![0.6]).is_err());
    }

    #[test]
    fn rotation_only_converges_trivially() {
        let wh = target_program(&TransformSpec::walsh_hadamard(4).unwrap());
        let rep = convergence_report(&wh, &RoundingSchedule::default(), 1e-3).unwrap();
        assert!(rep.rows.iter().all(|r| r.deviation == 0.0));
        assert!(!rep.flagged);
    }

    #[test]
    fn nested_schedule_never_moves_away() {
        let p = GateProgram::new(2, vec![Gate::constant(0, 1.0 / PI), Gate::butterfly(0, 1)], "").unwrap();
        let rep = convergence_report(&p, &RoundingSchedule::default(), 1e-3).unwrap();
        assert!(rep.non_increasing_from(1));
        assert!(rep.first_below(1e-3).is_some_and(|q| q <= 12));
    }

    #[test]
    fn single_constant_deviation_matches_formula() {
        let c = 1.0 / PI;
        let p = GateProgram::new(2, vec![Gate::constant(0, c)], "").unwrap();
        let sched = RoundingSchedule::new((4..=20).map(|q| 1.0 - 0.5f64.powi(q)).collect()).unwrap();
        let rep = convergence_report(&p, &sched, 1e-3).unwrap();
        for (row, &ln_dq) in rep.rows.iter().zip(sched.ln_deltas()) {
            let k = (c.ln() / ln_dq).ceil();
            let direct = ((k * ln_dq).exp() - c).abs();
            assert!((row.deviation - direct).abs() < 1e-15);
        }
        // q = 12 is row index 8 (schedule starts at q = 4)
        assert!(rep.rows[8].deviation <= 1e-3);
    }

    #[test]
    fn balanced_pair_deviation_is_bounded_by_parts() {
        let c = 1.0 / PI;
        let pair = GateProgram::new(2, vec![Gate::constant(0, c), Gate::constant(1, 1.0 / c)], "").unwrap();
        let a = GateProgram::new(2, vec![Gate::constant(0, c)], "").unwrap();
        let b = GateProgram::new(2, vec![Gate::constant(1, 1.0 / c)], "").unwrap();
        let sched = RoundingSchedule::default();
        let both = convergence_report(&pair, &sched, 1e-3).unwrap();
        let ra = convergence_report(&a, &sched, 1e-3).unwrap();
        let rb = convergence_report(&b, &sched, 1e-3).unwrap();
        for ((x, y), z) in both.rows.iter().zip(&ra.rows).zip(&rb.rows) {
            assert!(x.deviation <= y.deviation + z.deviation + 1e-15);
        }
    }
}
