//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL` line
//! with the measured quantity next to its pinned tolerance; the process exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use paracond::condition::{general_algebraic_condition, lemma1_check};
use paracond::io::build_report;
use paracond::lifting::{check_integral, convergence_report};
use paracond::oracle::{
    appendix_b_supremum, calibrate_rotation_constant, factorized_row_norm_oracle, matrix_equiv_oracle,
    random_factorized_triple,
};
use paracond::potential::{
    coefficient_claim_check, endpoint_gap_report, potential_trace, quasi_entropy, CALIBRATED_ROTATION_CONSTANT,
    CALIBRATION_GRID, CALIBRATION_SEEDS,
};
use paracond::suites::{prepare, verify_campaign, CampaignConfig, Suite, SuiteResult, VerifyOptions};
use paracond::transform::{scaled_variant, target_matrix, target_program, tightness_program};
use paracond::{Gate, GateProgram, PolyMatrix, RoundingSchedule, TransformSpec};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn suite<'a>(results: &'a [SuiteResult], name: &str) -> &'a SuiteResult {
    results.iter().find(|r| r.suite == name).expect("suite present")
}

fn describe(r: &SuiteResult) -> String {
    let mut s = format!("{} {}/{} checks, worst {:e}", r.suite, r.checks - r.failures, r.checks, r.worst);
    if let Some(f) = &r.first_failure {
        s += &format!(" [first failure: {f}]");
    }
    s
}

fn transforms() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut counts_ok = true;
    for bits in 1..=10 {
        let n = 1usize << bits;
        let wh = TransformSpec::walsh_hadamard(n).unwrap();
        let p = target_program(&wh);
        counts_ok &= p.len() == n / 2 * bits;
        worst = worst.max(matrix_equiv_oracle(&p, &target_matrix(&wh)).unwrap().computed);
        let dft = TransformSpec::dft_real(n).unwrap();
        worst = worst.max(matrix_equiv_oracle(&target_program(&dft), &target_matrix(&dft)).unwrap().computed);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && counts_ok && secs < 30.0,
        format!("max entry error {worst:e} (tol 1e-10), WH gate counts (n/2)log2 n: {counts_ok}, {secs:.2}s (limit 30s)"),
    )
}

fn fourier_entropy() -> Outcome {
    let mut worst = 0.0f64;
    for bits in 1..=8 {
        let n = 1usize << bits;
        let f = PolyMatrix::from_real(&target_matrix(&TransformSpec::walsh_hadamard(n).unwrap()));
        let expected = (n * bits) as f64;
        worst = worst.max((quasi_entropy(&f) - expected).abs() / expected);
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:e} for n = 2..256 (tol 1e-9)"))
}

fn campaign_line(results: &[SuiteResult], names: &[&str]) -> Outcome {
    let picked: Vec<&SuiteResult> = names.iter().map(|n| suite(results, n)).collect();
    outcome(
        picked.iter().all(|r| r.passed()),
        picked.iter().map(|r| describe(r)).collect::<Vec<_>>().join("; "),
    )
}

fn lemma1(results: &[SuiteResult]) -> Outcome {
    let campaign = suite(results, "lemma1");
    let p = tightness_program(0.75);
    let rep = lemma1_check(&p, &check_integral(&p, 0.75).unwrap()).unwrap();
    let last = rep.rows.last().unwrap();
    let target = 16.0 / 9.0;
    let tight = (last.geometric - target).abs() <= 1e-12 && (last.algebraic - target).abs() <= 1e-12;
    outcome(
        campaign.passed() && tight,
        format!(
            "{} (tol -1e-9); tightness geometric {} algebraic {} vs 16/9 (tol 1e-12)",
            describe(campaign),
            last.geometric,
            last.algebraic
        ),
    )
}

fn scaled_wh(n: usize) -> GateProgram {
    scaled_variant(&TransformSpec::walsh_hadamard(n).unwrap(), 0.75, (-1, 1)).unwrap()
}

fn claim3() -> Outcome {
    let opts = VerifyOptions::default();
    let mut details = Vec::new();
    let mut passed = true;
    for n in [4, 8, 16] {
        let prep = prepare(&scaled_wh(n), &opts).unwrap();
        let rep = coefficient_claim_check(prep.lifted.final_matrix(), &prep.pair).unwrap();
        let ok = prep.target_matched && rep.all_covered() && rep.max_target_residual() <= 1e-9;
        passed &= ok;
        details.push(format!(
            "n={n} kappa={:.6} R=[{},{}] covered={} residual {:e}",
            prep.kappa,
            prep.pair.rho,
            prep.pair.rho + prep.pair.ell,
            rep.all_covered(),
            rep.max_target_residual()
        ));
    }
    outcome(passed, details.join("; ") + " (tol 1e-9)")
}

fn claim4(results: &[SuiteResult]) -> Outcome {
    let campaign = suite(results, "claim4");
    let worst = (0..50)
        .map(|i| {
            let (u, p, x) = random_factorized_triple(7, i, 4);
            let r = factorized_row_norm_oracle(&u, &p, &x).unwrap();
            (r.computed - r.reference).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        campaign.passed() && worst <= 1e-9,
        format!("{} (tol 1e-9); 50 (U,p,X) triples worst row-norm deviation {worst:e} (tol 1e-9)", describe(campaign)),
    )
}

fn lemma2(results: &[SuiteResult]) -> Outcome {
    let campaign = suite(results, "lemma2");
    let cal = calibrate_rotation_constant(CALIBRATION_GRID, CALIBRATION_SEEDS).unwrap();
    let cap = 8.0 / (std::f64::consts::E * std::f64::consts::LN_2);
    let reproduced = cal.c <= CALIBRATED_ROTATION_CONSTANT && cal.c > CALIBRATED_ROTATION_CONSTANT - 1e-4;
    outcome(
        campaign.passed() && reproduced && cal.c <= cap,
        format!(
            "{}; calibrated C {} (pinned {CALIBRATED_ROTATION_CONSTANT}, cap {cap:.4}, grid {CALIBRATION_GRID})",
            describe(campaign),
            cal.c
        ),
    )
}

fn endpoint() -> Outcome {
    let opts = VerifyOptions::default();
    let mut reports = Vec::new();
    for n in [8, 16] {
        let prep = prepare(&scaled_wh(n), &opts).unwrap();
        let trace = potential_trace(&prep.lifted, &prep.pair, opts.c).unwrap();
        reports.push(endpoint_gap_report(&trace, n, prep.kappa, prep.pair.ell));
    }
    let ratio = reports[1].phi_final / reports[0].phi_final;
    let expected = 8.0 / 3.0;
    let rel = (ratio - expected).abs() / expected;
    let consistent = reports.iter().all(|r| r.consistent);
    outcome(
        rel <= 0.25 && consistent,
        format!(
            "final potential ratio {ratio:.4} vs 8/3 (relative {rel:.4}, tol 0.25); implied steps {:.3} <= m {} and {:.3} <= m {}",
            reports[0].implied_steps, reports[0].m, reports[1].implied_steps, reports[1].m
        ),
    )
}

fn appendix_a() -> Outcome {
    let mut p = target_program(&TransformSpec::walsh_hadamard(4).unwrap());
    p.push(Gate::constant(0, 1.0 / std::f64::consts::PI)).unwrap();
    p.push(Gate::butterfly(0, 1)).unwrap();
    let schedule = RoundingSchedule::default();
    let rep = convergence_report(&p, &schedule, 1e-3).unwrap();
    let seq = general_algebraic_condition(&p, &schedule).unwrap();
    let by12 = rep.first_below(1e-3).is_some_and(|q| q <= 12);
    let monotone = rep.non_increasing_from(6);
    outcome(
        by12 && monotone && seq.last_relative_step <= 1e-3,
        format!(
            "deviation <= 1e-3 first at q={:?} (need <= 12), non-increasing from q=6: {monotone}, kappa relative step {:e} (tol 1e-3)",
            rep.first_below(1e-3),
            seq.last_relative_step
        ),
    )
}

fn appendix_b() -> Outcome {
    let cases = [(1, 3, 0.75), (2, 7, 0.9), (3, 15, 0.954)];
    let results: Vec<_> = cases.iter().map(|&(r, l, d)| appendix_b_supremum(r, l, d, 7)).collect();
    let worst_gap = results.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
    let ratios: Vec<f64> = results.iter().map(|r| r.c_ratio).collect();
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        worst_gap <= 1e-6 && spread <= 2.5,
        format!("worst ascent/candidate gap {worst_gap:e} (tol 1e-6); sup/(delta^rho ell) = {ratios:.4?}, spread {spread:.4} (tol 2.5)"),
    )
}

fn determinism() -> Outcome {
    let opts = VerifyOptions::default();
    let p = scaled_wh(8);
    let a = build_report(&p, &opts).unwrap().to_json();
    let b = build_report(&p, &opts).unwrap().to_json();
    let cfg = CampaignConfig {
        programs: 10,
        ..CampaignConfig::default()
    };
    let run = || serde_json::to_string(&verify_campaign(&Suite::ALL, &cfg, &opts).unwrap()).unwrap();
    let (c, d) = (run(), run());
    let dir = tempfile::tempdir().unwrap();
    let cli = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_paracond"))
            .args(["report", "--transform", "wh", "--n", "8", "--window=-1,1", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        (status.code(), std::fs::read(&out).unwrap())
    };
    let (first, second) = (cli("a.json"), cli("b.json"));
    outcome(
        a == b && c == d && first == second,
        format!(
            "report bytes equal: {}; campaign results equal: {}; CLI reports equal: {} (exit {:?})",
            a == b,
            c == d,
            first == second,
            first.0
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = CampaignConfig::default();
    let campaign = verify_campaign(&Suite::ALL, &cfg, &VerifyOptions::default()).unwrap();
    let campaign_secs = start.elapsed().as_secs_f64();

    let paraunitary = {
        let mut o = campaign_line(&campaign, &["paraunitary"]);
        o.passed &= campaign_secs < 60.0;
        o.detail += &format!(
            " (tol 1e-9, {} programs, n={}, m={}, seed {}, whole campaign {campaign_secs:.2}s, limit 60s)",
            cfg.programs, cfg.n, cfg.m, cfg.seed
        );
        o
    };
    let criteria: Vec<(&str, Outcome)> = vec![
        ("transform correctness", transforms()),
        ("entropy of Walsh-Hadamard", fourier_entropy()),
        ("paraunitarity", paraunitary),
        ("evaluation identity", campaign_line(&campaign, &["evaluation"])),
        ("geometric <= algebraic condition", lemma1(&campaign)),
        ("maximum-modulus sampling", campaign_line(&campaign, &["maxmod"])),
        ("coefficient identity", claim3()),
        ("row norms", claim4(&campaign)),
        ("potential change bounds", lemma2(&campaign)),
        ("endpoint trend", endpoint()),
        ("non-integral limit", appendix_a()),
        ("constrained supremum", appendix_b()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        println!("criterion {:>2} {name}: {} - {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
