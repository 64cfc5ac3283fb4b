//! File formats and reports.
//!
//! Algorithm files are JSON:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "n": 2,
//!   "label": "wh2",
//!   "gates": [
//!     {"type": "rotation", "i": 0, "j": 1, "theta": 0.7853981633974483, "reflect": true},
//!     {"type": "constant", "i": 0, "value": 0.75}
//!   ]
//! }
//! ```
//!
//! Indices are 0-based. For DFT programs coordinate `2k` holds the real part
//! and `2k + 1` the imaginary part of complex coordinate `k`. Numbers are
//! written in shortest round-trip form, so parsing a written file restores
//! every value exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::condition::{algebraic_condition, lower_bound_certificate, ConditionReport, LowerBoundCertificate};
use crate::error::{Error, Result};
use crate::gate::{Gate, GateProgram};
use crate::potential::{endpoint_gap_report, potential_trace, EndpointReport, PotentialTrace};
use crate::suites::{prepare, verify_programs, Suite, SuiteResult, VerifyOptions};

pub const FORMAT_VERSION: u32 = 1;

/// Column order of trace CSV files.
pub const TRACE_COLUMNS: [&str; 12] = [
    "t", "gate", "phi_re", "phi_im", "dphi", "bound", "rowA", "rowB", "deg", "val", "alg_cond", "geo_cond",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum GateRecord {
    Rotation { i: usize, j: usize, theta: f64, reflect: bool },
    Constant { i: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmFile {
    format_version: u32,
    n: usize,
    #[serde(default)]
    label: String,
    gates: Vec<GateRecord>,
}

pub fn parse_algorithm(text: &str) -> Result<GateProgram> {
    let file: AlgorithmFile = serde_json::from_str(text).map_err(|e| Error::Schema {
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Schema {
            line: 0,
            message: format!("unsupported format_version {} (expected {FORMAT_VERSION})", file.format_version),
        });
    }
    let gates = file
        .gates
        .into_iter()
        .map(|g| match g {
            GateRecord::Rotation { i, j, theta, reflect } => Gate::Rotation { i, j, theta, reflect },
            GateRecord::Constant { i, value } => Gate::Constant { i, c: value },
        })
        .collect();
    GateProgram::new(file.n, gates, file.label)
}

pub fn serialize_algorithm(p: &GateProgram) -> String {
    let file = AlgorithmFile {
        format_version: FORMAT_VERSION,
        n: p.n(),
        label: p.label.clone(),
        gates: p
            .gates()
            .iter()
            .map(|g| match *g {
                Gate::Rotation { i, j, theta, reflect } => GateRecord::Rotation { i, j, theta, reflect },
                Gate::Constant { i, c } => GateRecord::Constant { i, value: c },
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("algorithm files serialize");
    s.push('\n');
    s
}

pub fn read_algorithm(path: &Path) -> Result<GateProgram> {
    parse_algorithm(&std::fs::read_to_string(path)?)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// Trace rows as CSV with the columns of [`TRACE_COLUMNS`].
pub fn trace_csv(trace: &PotentialTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(TRACE_COLUMNS).map_err(io)?;
    for r in &trace.rows {
        w.write_record([
            r.t.to_string(),
            r.gate.to_string(),
            r.phi_re.to_string(),
            r.phi_im.to_string(),
            r.dphi.to_string(),
            r.bound.to_string(),
            r.row_a.to_string(),
            r.row_b.to_string(),
            r.deg.to_string(),
            r.val.to_string(),
            r.alg_cond.to_string(),
            r.geo_cond.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub delta: f64,
    pub requested_delta: f64,
    pub kappa: f64,
    pub rho: i64,
    pub ell: i64,
    pub mu: f64,
    pub c: f64,
    pub circle_samples: usize,
    pub target_matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub phi_identity: f64,
    pub phi_final: f64,
    pub rotation_steps: usize,
    pub violations: usize,
    pub max_bound_usage: f64,
    pub max_monomial_change: f64,
    pub max_imaginary: f64,
    pub max_row_norm_dev_a: f64,
    pub max_row_norm_dev_b: f64,
    pub max_inner_product_change: f64,
}

impl From<&PotentialTrace> for TraceSummary {
    fn from(t: &PotentialTrace) -> Self {
        Self {
            phi_identity: t.phi_identity,
            phi_final: t.phi_final,
            rotation_steps: t.rows.iter().filter(|r| r.gate == "rot").count(),
            violations: t.violations.len(),
            max_bound_usage: t.max_bound_usage,
            max_monomial_change: t.max_monomial_change,
            max_imaginary: t.max_imaginary,
            max_row_norm_dev_a: t.max_row_norm_dev_a,
            max_row_norm_dev_b: t.max_row_norm_dev_b,
            max_inner_product_change: t.max_inner_product_change,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub algorithm_geometric: f64,
    pub algorithm_algebraic: f64,
    pub rho_real: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub parameters: Parameters,
    pub condition: ConditionSummary,
    pub trace: TraceSummary,
    pub endpoint: EndpointReport,
    pub lower_bound: LowerBoundCertificate,
    pub checks: Vec<SuiteResult>,
    pub provenance: Provenance,
}

impl AnalysisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SuiteResult::passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let p = &self.parameters;
        let mut s = String::new();
        s += &format!("# Analysis of `{}`\n\n", self.label);
        s += &format!("n = {}, m = {}\n\n", self.n, self.m);
        s += "## Parameters\n\n| delta | kappa | rho | ell | mu | C |\n|---|---|---|---|---|---|\n";
        s += &format!("| {} | {} | {} | {} | {} | {} |\n\n", p.delta, p.kappa, p.rho, p.ell, p.mu, p.c);
        s += "## Condition\n\n";
        s += &format!(
            "- geometric: {}\n- algebraic: {}\n- rho (real): {}\n\n",
            self.condition.algorithm_geometric, self.condition.algorithm_algebraic, self.condition.rho_real
        );
        s += "## Potential\n\n";
        let e = &self.endpoint;
        s += &format!(
            "- Phi_AB(Id): {}\n- Phi_AB(final): {}\n- gap: {}\n- max step bound: {}\n- implied steps: {} (m = {})\n- rotation bound violations: {}\n\n",
            e.phi_identity, e.phi_final, e.gap, e.max_step_bound, e.implied_steps, e.m, self.trace.violations
        );
        s += &format!(
            "## Lower bound\n\n- n log n / sqrt(kappa): {}\n- m / bound: {}\n\n",
            self.lower_bound.bound, self.lower_bound.ratio
        );
        s += "## Checks\n\n| suite | result | checks | failures | worst | metric |\n|---|---|---|---|---|---|\n";
        for c in &self.checks {
            s += &format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                c.suite,
                if c.passed() { "pass" } else { "FAIL" },
                c.checks,
                c.failures,
                c.worst,
                c.metric
            );
        }
        s += &format!("\n{} {}, seed {}\n", self.provenance.tool, self.provenance.version, self.provenance.seed);
        s
    }
}

/// Suites included in a full report.
pub const REPORT_SUITES: [Suite; 9] = [
    Suite::Paraunitary,
    Suite::Evaluation,
    Suite::Lemma1,
    Suite::Lemma2,
    Suite::Claim3,
    Suite::Claim4,
    Suite::MaxMod,
    Suite::AppendixB,
    Suite::Parseval,
];

/// Full analysis of one integral program.
pub fn build_report(p: &GateProgram, opts: &VerifyOptions) -> Result<AnalysisReport> {
    let prep = prepare(p, opts)?;
    let condition: ConditionReport = algebraic_condition(&prep.lifted)?;
    let trace = potential_trace(&prep.lifted, &prep.pair, opts.c)?;
    let endpoint = endpoint_gap_report(&trace, p.n(), prep.kappa, prep.pair.ell);
    let lower_bound = lower_bound_certificate(p.n(), prep.kappa.max(1.0), p.len())?;
    let checks = verify_programs(&REPORT_SUITES, std::slice::from_ref(p), opts)?;
    Ok(AnalysisReport {
        label: p.label.clone(),
        n: p.n(),
        m: p.len(),
        parameters: Parameters {
            delta: prep.cert.delta,
            requested_delta: prep.cert.requested_delta,
            kappa: prep.kappa,
            rho: prep.pair.rho,
            ell: prep.pair.ell,
            mu: prep.pair.mu,
            c: opts.c,
            circle_samples: opts.circle_samples,
            target_matched: prep.target_matched,
        },
        condition: ConditionSummary {
            algorithm_geometric: condition.algorithm_geometric,
            algorithm_algebraic: condition.algorithm_algebraic,
            rho_real: condition.rho,
        },
        trace: TraceSummary::from(&trace),
        endpoint,
        lower_bound,
        checks,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: opts.seed,
        },
    })
}
