//! Brute-force reference computations.
//!
//! Each oracle recomputes its quantity along its own arithmetic path (own
//! entropy function, own rotation blocks, own evaluation loops) so that it can
//! be compared against the library routines it checks.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::{Gate, GateProgram};
use crate::laurent::LaurentPoly;
use crate::lifting::{check_integral, lift};
use crate::polymatrix::PolyMatrix;
use crate::potential::PreconditionerPair;
use crate::suites::{random_integral_program, CampaignConfig};
use crate::transform::{target_matrix, TransformSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub name: String,
    pub computed: f64,
    pub reference: f64,
    pub relative_gap: f64,
}

impl OracleResult {
    pub fn new(name: impl Into<String>, computed: f64, reference: f64) -> Self {
        Self {
            name: name.into(),
            computed,
            reference,
            relative_gap: (computed - reference).abs() / reference.abs().max(1e-12),
        }
    }
}

fn entropy_term(u: Complex64) -> Complex64 {
    let modulus = (u.re * u.re + u.im * u.im).sqrt();
    if modulus == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        u * (-modulus.ln() / std::f64::consts::LN_2)
    }
}

fn rotation_block(theta: f64, reflect: bool) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    if reflect {
        [[c, s], [s, -c]]
    } else {
        [[c, -s], [s, c]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationSweep {
    pub max_change: f64,
    pub argmax_theta: f64,
    pub argmax_reflect: bool,
    /// `max_change / (max row norm of MA over the two rows * same for MB)`.
    pub implied_c: f64,
}

/// Sweeps rotations of rows `rows` of `MA` and `MB` over `grid` equispaced
/// angles, with and without reflection, and records the largest potential change.
pub fn rotation_delta_oracle(ma: &PolyMatrix, mb: &PolyMatrix, rows: (usize, usize), grid: usize) -> RotationSweep {
    let (r1, r2) = rows;
    let cols = ma.ncols();
    // (a1, a2, b1, b2) per column and exponent
    let mut quads: Vec<[Complex64; 4]> = Vec::new();
    for c in 0..cols {
        let polys = [ma.get(r1, c), ma.get(r2, c), mb.get(r1, c), mb.get(r2, c)];
        let mut ks: Vec<i64> = polys.iter().flat_map(|p| p.terms().map(|(k, _)| k)).collect();
        ks.sort_unstable();
        ks.dedup();
        for k in ks {
            quads.push([polys[0].coeff(k), polys[1].coeff(k), polys[2].coeff(k), polys[3].coeff(k)]);
        }
    }
    let before: Complex64 = quads
        .iter()
        .map(|q| entropy_term(q[0] * q[2].conj()) + entropy_term(q[1] * q[3].conj()))
        .sum();
    let row_norm = |m: &PolyMatrix, r: usize| -> f64 {
        (0..cols)
            .flat_map(|c| m.get(r, c).terms().map(|(_, x)| x.norm_sqr()).collect::<Vec<_>>())
            .sum::<f64>()
            .sqrt()
    };
    let norm_product = row_norm(ma, r1).max(row_norm(ma, r2)) * row_norm(mb, r1).max(row_norm(mb, r2));
    let mut best = RotationSweep {
        max_change: 0.0,
        argmax_theta: 0.0,
        argmax_reflect: false,
        implied_c: 0.0,
    };
    for g in 0..grid {
        let theta = std::f64::consts::TAU * g as f64 / grid as f64;
        for reflect in [false, true] {
            let [[p, q], [r, s]] = rotation_block(theta, reflect);
            let after: Complex64 = quads
                .iter()
                .map(|x| {
                    let a1 = x[0] * p + x[1] * q;
                    let a2 = x[0] * r + x[1] * s;
                    let b1 = x[2] * p + x[3] * q;
                    let b2 = x[2] * r + x[3] * s;
                    entropy_term(a1 * b1.conj()) + entropy_term(a2 * b2.conj())
                })
                .sum();
            let change = (after - before).re.abs();
            if change > best.max_change {
                best.max_change = change;
                best.argmax_theta = theta;
                best.argmax_reflect = reflect;
            }
        }
    }
    best.implied_c = if norm_product > 0.0 { best.max_change / norm_product } else { 0.0 };
    best
}

/// [`rotation_delta_oracle`] applied to `M A` and `M B`.
pub fn rotation_delta_oracle_for(m: &PolyMatrix, pair: &PreconditionerPair, rows: (usize, usize), grid: usize) -> Result<RotationSweep> {
    Ok(rotation_delta_oracle(&m.try_mul(&pair.a)?, &m.try_mul(&pair.b)?, rows, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub c: f64,
    pub grid: usize,
    pub seeds: u64,
    pub configurations: usize,
    /// Which configuration attained the maximum.
    pub argmax: String,
}

/// `[[cos a, sin a], [sin a, cos a]]`, or its row-swapped form when `crossed`.
fn two_cosines(a: f64, crossed: bool) -> PolyMatrix {
    let (s, c) = a.sin_cos();
    let entries = if crossed { [s, c, c, s] } else { [c, s, s, c] };
    PolyMatrix::from_real(&DMatrix::from_row_slice(2, 2, &entries))
}

/// Largest implied rotation constant over a fixed set of configurations:
/// the identity with trivial preconditioners, 2x2 pairs whose rows meet each
/// rotated coordinate pair at complementary angles, and steps of `seeds`
/// random lifted programs with their preconditioners.
pub fn calibrate_rotation_constant(grid: usize, seeds: u64) -> Result<Calibration> {
    let mut best = (0.0f64, String::new());
    let mut configurations = 0;
    let mut consider = |c: f64, name: String| {
        configurations += 1;
        if c > best.0 {
            best = (c, name);
        }
    };
    let id = PolyMatrix::identity(2);
    consider(rotation_delta_oracle(&id, &id, (0, 1), grid).implied_c, "identity".into());
    for deg in [15.0, 22.5, 30.0] {
        let a = two_cosines(f64::to_radians(deg), false);
        let b = two_cosines(f64::to_radians(deg), true);
        consider(rotation_delta_oracle(&a, &b, (0, 1), grid).implied_c, format!("crossed-{deg}"));
    }
    let cfg = CampaignConfig::default();
    let f = target_matrix(&TransformSpec::walsh_hadamard(cfg.n)?);
    for seed in 0..seeds {
        let p = random_integral_program(seed, 0, &cfg)?;
        let cert = check_integral(&p, cfg.delta)?;
        let lifted = lift(&p, &cert)?;
        let kappa = crate::condition::algebraic_condition_of(&p, &cert)?;
        let pair = PreconditionerPair::for_target(lifted.final_matrix(), &f, cfg.delta, kappa)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in (0..lifted.steps.len()).step_by(5) {
            let i = rng.random_range(0..cfg.n);
            let j = (i + rng.random_range(1..cfg.n)) % cfg.n;
            let sweep = rotation_delta_oracle_for(&lifted.steps[t], &pair, (i, j), grid)?;
            consider(sweep.implied_c, format!("random-{seed}-t{t}"));
        }
    }
    Ok(Calibration {
        c: best.0,
        grid,
        seeds,
        configurations,
        argmax: best.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixBResult {
    pub rho: i64,
    pub ell: i64,
    pub delta: f64,
    /// Best Lagrange candidate over `K = 1..=ell+1`, times `delta^rho`.
    pub best_candidate: f64,
    pub best_k: usize,
    /// `extreme` for `(sqrt(ell-K+2), 1, ..., 1)`, `uniform` for all equal.
    pub best_kind: &'static str,
    /// Best value reached by projected gradient ascent, times `delta^rho`.
    pub ascent: f64,
    pub relative_gap: f64,
    /// `delta^rho * ell`.
    pub scale: f64,
    /// `max(best_candidate, ascent) / scale`.
    pub c_ratio: f64,
}

/// Number of random starts of the ascent.
pub const ASCENT_STARTS: usize = 32;
/// Ascent step size.
pub const ASCENT_STEP: f64 = 1e-2;
/// Ascent iterations per start.
pub const ASCENT_ITERATIONS: usize = 10_000;

fn xlog2x_sum(tau: &[f64]) -> f64 {
    tau.iter().map(|&t| t * t.log2()).sum()
}

/// Euclidean projection onto `{x : x_k >= 1, |x| <= radius}`.
fn project_box_ball(y: &[f64], radius: f64) -> Vec<f64> {
    // the projection is max(y / (1 + mu), 1) for the smallest feasible mu >= 0
    let norm_sq = |mu: f64| y.iter().map(|&v| (v / (1.0 + mu)).max(1.0).powi(2)).sum::<f64>();
    let r2 = radius * radius;
    let mu = if norm_sq(0.0) <= r2 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while norm_sq(hi) > r2 {
            hi *= 2.0;
        }
        while hi - lo > f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm_sq(mid) > r2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    y.iter().map(|&v| (v / (1.0 + mu)).max(1.0)).collect()
}

#[derive(Clone, Copy)]
struct Reduced {
    best: f64,
    best_k: usize,
    best_kind: &'static str,
    ascent: f64,
}

type ReducedCache = Mutex<HashMap<(i64, u64), Reduced>>;

/// `sup sum tau_k log2 tau_k` without the `delta^rho` weight. It depends on
/// `(ell, seed)` only, so results are memoized across programs.
fn reduced_supremum(ell: i64, seed: u64) -> Reduced {
    static CACHE: OnceLock<ReducedCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("cache lock").get(&(ell, seed)) {
        return *r;
    }
    let budget = (ell + 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0usize, "extreme");
    for k in 1..=(ell + 1) as usize {
        let extreme = {
            let mut tau = vec![1.0; k];
            tau[0] = ((ell - k as i64 + 2) as f64).sqrt();
            xlog2x_sum(&tau)
        };
        let uniform = xlog2x_sum(&vec![(budget / k as f64).sqrt(); k]);
        for (v, kind) in [(extreme, "extreme"), (uniform, "uniform")] {
            if v > best.0 {
                best = (v, k, kind);
            }
        }
    }
    let radius = budget.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cycle = ((ell + 1) as usize).min(ASCENT_STARTS);
    let mut ascent = f64::NEG_INFINITY;
    for s in 0..ASCENT_STARTS {
        let k = 1 + s % cycle;
        let start: Vec<f64> = (0..k).map(|_| 1.0 + rng.random::<f64>() * (radius - 1.0)).collect();
        let mut tau = project_box_ball(&start, radius);
        for _ in 0..ASCENT_ITERATIONS {
            let stepped: Vec<f64> = tau
                .iter()
                .map(|&t| t + ASCENT_STEP * (t.log2() + std::f64::consts::LOG2_E))
                .collect();
            let next = project_box_ball(&stepped, radius);
            let moved = next.iter().zip(&tau).any(|(a, b)| a != b);
            tau = next;
            if !moved {
                break;
            }
        }
        ascent = ascent.max(xlog2x_sum(&tau));
    }
    let r = Reduced {
        best: best.0,
        best_k: best.1,
        best_kind: best.2,
        ascent,
    };
    cache.lock().expect("cache lock").insert((ell, seed), r);
    r
}

/// The reduced supremum `sup delta^rho sum_{k<=K} tau_k log2 tau_k` over
/// `tau_k >= 1`, `sum tau_k^2 <= ell + 1`, `K <= ell + 1`.
pub fn appendix_b_supremum(rho: i64, ell: i64, delta: f64, seed: u64) -> AppendixBResult {
    let weight = crate::pow_int(delta, rho);
    let r = reduced_supremum(ell, seed);
    let best = (r.best, r.best_k, r.best_kind);
    let ascent = r.ascent;
    let (best_candidate, ascent) = (weight * best.0, weight * ascent);
    let scale = weight * ell as f64;
    AppendixBResult {
        rho,
        ell,
        delta,
        best_candidate,
        best_k: best.1,
        best_kind: best.2,
        ascent,
        relative_gap: (ascent - best_candidate).abs() / best_candidate.abs().max(1e-300),
        scale,
        c_ratio: best_candidate.max(ascent) / scale,
    }
}

/// Compares `||p||^2` with the average of `|p|^2` over `samples` unit-circle points.
pub fn parseval_oracle(p: &LaurentPoly, samples: usize) -> Result<OracleResult> {
    let Ok((deg, val)) = p.deg_val() else {
        return Ok(OracleResult::new("parseval", 0.0, 0.0));
    };
    let width = (deg - val + 1) as usize;
    let required = 4 * width;
    if samples < required {
        return Err(Error::Undersampled { samples, width, required });
    }
    let s = samples as i64;
    let mut total = 0.0;
    for idx in 0..s {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in p.terms() {
            let phase = std::f64::consts::TAU * ((idx * k).rem_euclid(s)) as f64 / s as f64;
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        total += acc.norm_sqr();
    }
    let coeff_sum: f64 = p.terms().map(|(_, c)| c.norm_sqr()).sum();
    Ok(OracleResult::new("parseval", total / s as f64, coeff_sum))
}

/// Largest entry deviation between the composed program and `reference`,
/// composing gates with a separate row-operation loop.
pub fn matrix_equiv_oracle(p: &GateProgram, reference: &DMatrix<f64>) -> Result<OracleResult> {
    let n = p.n();
    if reference.nrows() != n || reference.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: reference.nrows(),
        });
    }
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for g in p.gates() {
        match *g {
            Gate::Rotation { i, j, theta, reflect } => {
                let [[a, b], [c, d]] = rotation_block(theta, reflect);
                for col in 0..n {
                    let (x, y) = (rows[i][col], rows[j][col]);
                    rows[i][col] = a * x + b * y;
                    rows[j][col] = c * x + d * y;
                }
            }
            Gate::Constant { i, c } => rows[i].iter_mut().for_each(|x| *x *= c),
        }
    }
    let mut worst: f64 = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            worst = worst.max((x - reference[(i, j)]).abs());
        }
    }
    Ok(OracleResult::new("matrix-equivalence", worst, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySplit {
    /// `sum_i sum_k a_k h(conj b_ik)` with `a_k`, `b_ik` the coefficients of
    /// `A_ii`, `B_ii` at `z^-k`.
    pub e1: f64,
    /// `sum_i sum_k a_k conj(b_ik) log2 a_k`.
    pub e2: f64,
    /// `e1 - e2`, which equals `Phi_{A,B}(Id)`.
    pub total: f64,
    /// Largest per-row `|E1|` and `|E2|`.
    pub max_row_e1: f64,
    pub max_row_e2: f64,
}

/// Splits `Phi_{A,B}(Id)` row by row into the two sums bounded separately
/// in the endpoint argument. `A` must be diagonal.
pub fn identity_potential_split(pair: &PreconditionerPair) -> IdentitySplit {
    let mut out = IdentitySplit {
        e1: 0.0,
        e2: 0.0,
        total: 0.0,
        max_row_e1: 0.0,
        max_row_e2: 0.0,
    };
    for i in 0..pair.n() {
        let (mut e1, mut e2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (k, a) in pair.a.get(i, i).terms() {
            let b = pair.b.get(i, i).coeff(k).conj();
            e1 += a * entropy_term(b);
            e2 += a * b * (a.norm().ln() / std::f64::consts::LN_2);
        }
        out.e1 += e1.re;
        out.e2 += e2.re;
        out.max_row_e1 = out.max_row_e1.max(e1.re.abs());
        out.max_row_e2 = out.max_row_e2.max(e2.re.abs());
    }
    out.total = out.e1 - out.e2;
    out
}

/// A random paraunitary matrix, a random Laurent polynomial and a random
/// unitary matrix, reproducible from `(seed, index)`.
pub fn random_factorized_triple(seed: u64, index: u64, n: usize) -> (PolyMatrix, LaurentPoly, DMatrix<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut u = PolyMatrix::identity(n);
    for _ in 0..4 * n {
        let i = rng.random_range(0..n);
        if n > 1 && rng.random_bool(0.6) {
            let j = (i + rng.random_range(1..n)) % n;
            u.rotate_rows(i, j, rotation_block(rng.random_range(0.0..std::f64::consts::TAU), rng.random_bool(0.5)));
        } else {
            u.shift_row(i, rng.random_range(-3..=3));
        }
    }
    let terms: Vec<(i64, Complex64)> = (-3..=3)
        .map(|k| (k, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let p = LaurentPoly::from_terms(terms);
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let x = g.qr().q();
    (u, p, x)
}

/// Largest deviation of a row norm of `U p X` from `||p||`.
pub fn factorized_row_norm_oracle(u: &PolyMatrix, p: &LaurentPoly, x: &DMatrix<Complex64>) -> Result<OracleResult> {
    let product = u.scale_poly(p).try_mul(&PolyMatrix::from_complex(x))?;
    let expected = p.coeff_norm();
    let worst = (0..product.nrows())
        .map(|i| product.row_norm(i))
        .max_by(|a, b| (a - expected).abs().total_cmp(&(b - expected).abs()))
        .unwrap_or(expected);
    Ok(OracleResult::new("factorized row norm", worst, expected))
}
