//! Report rendering. JSON numbers carry 12 significant digits.

use std::fmt::Write as _;

use equimarginal::bench::{BenchReport, Phase};
use equimarginal::oracles::CrossValidation;
use equimarginal::{kkt_check, marginal_utilities, KktReport, KktTolerances, ProblemInstance, SolveResult};
use serde::Serialize;

use crate::args::{BenchFormat, Format};

/// Tolerances the solution report certifies against.
pub const REPORT_KKT: KktTolerances = KktTolerances {
    active: 1e-9,
    inactive: 1e-12,
    zero_threshold: 1e-12,
};

/// Rounds to 12 significant digits.
pub fn sig12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn sig12_all(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(sig12).collect()
}

#[derive(Serialize)]
struct KktJson {
    max_active_deviation: f64,
    max_inactive_violation: f64,
    passed: bool,
}

impl From<&KktReport> for KktJson {
    fn from(k: &KktReport) -> Self {
        Self {
            max_active_deviation: sig12(k.max_active_deviation),
            max_inactive_violation: sig12(k.max_inactive_violation),
            passed: k.passed,
        }
    }
}

#[derive(Serialize)]
struct SolutionJson {
    input: Vec<f64>,
    allocation: Vec<f64>,
    active_count: usize,
    objective: f64,
    lambda: f64,
    kkt: KktJson,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn emit_solution(p: &ProblemInstance, result: &SolveResult, format: Format) -> String {
    let kkt = kkt_check(p, &result.allocation, REPORT_KKT).expect("solution has a funded project");
    let x = result.allocation.as_slice();
    match format {
        Format::Json => to_json(&SolutionJson {
            input: sig12_all(p.coefficients()),
            allocation: sig12_all(x),
            active_count: result.active_count,
            objective: sig12(result.objective),
            lambda: sig12(result.lambda),
            kkt: KktJson::from(&kkt),
        }),
        Format::Table | Format::Csv => {
            let marginals = marginal_utilities(p, &result.allocation).expect("dimensions match");
            let rows = p
                .coefficients()
                .iter()
                .zip(x)
                .zip(&marginals)
                .enumerate()
                .map(|(i, ((a, x), g))| (i + 1, *a, *x, *g));
            let mut out = String::new();
            if format == Format::Csv {
                out.push_str("index,a,x,marginal\n");
                for (i, a, x, g) in rows {
                    let _ = writeln!(out, "{i},{},{},{}", sig12(a), sig12(x), sig12(g));
                }
                return out;
            }
            let _ = writeln!(out, "{:>5}  {:>15}  {:>15}  {:>15}", "index", "a", "x", "marginal");
            for (i, a, x, g) in rows {
                let _ = writeln!(out, "{i:>5}  {a:>15.12}  {x:>15.12}  {g:>15.12}");
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "active_count  {}", result.active_count);
            let _ = writeln!(out, "objective     {:.12}", result.objective);
            let _ = writeln!(out, "lambda        {:.12}", result.lambda);
            let _ = writeln!(
                out,
                "kkt           {} (active deviation {:.3e}, inactive violation {:.3e})",
                if kkt.passed { "passed" } else { "FAILED" },
                kkt.max_active_deviation,
                kkt.max_inactive_violation
            );
            out
        }
    }
}

#[derive(Serialize)]
struct MethodJson {
    method: &'static str,
    objective: f64,
    allocation: Vec<f64>,
    converged: bool,
}

#[derive(Serialize)]
struct GapJson {
    first: &'static str,
    second: &'static str,
    objective_gap: f64,
    allocation_distance: f64,
}

#[derive(Serialize)]
struct VerifyJson {
    input: Vec<f64>,
    tolerance: f64,
    passed: bool,
    methods: Vec<MethodJson>,
    gaps: Vec<GapJson>,
}

pub fn emit_verification(p: &ProblemInstance, report: &CrossValidation, format: Format) -> String {
    match format {
        Format::Json => to_json(&VerifyJson {
            input: sig12_all(p.coefficients()),
            tolerance: report.tolerance,
            passed: report.passed,
            methods: report
                .outcomes
                .iter()
                .map(|o| MethodJson {
                    method: o.method.name(),
                    objective: sig12(o.objective),
                    allocation: sig12_all(o.allocation.as_slice()),
                    converged: o.converged,
                })
                .collect(),
            gaps: report
                .gaps
                .iter()
                .map(|g| GapJson {
                    first: g.first.name(),
                    second: g.second.name(),
                    objective_gap: sig12(g.objective_gap),
                    allocation_distance: sig12(g.allocation_distance),
                })
                .collect(),
        }),
        Format::Csv => {
            let mut out = String::from("first,second,objective_gap,allocation_distance\n");
            for g in &report.gaps {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    g.first,
                    g.second,
                    sig12(g.objective_gap),
                    sig12(g.allocation_distance)
                );
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "{:<20}  {:>15}  {:>9}  allocation", "method", "objective", "converged");
            for o in &report.outcomes {
                let x: Vec<String> = o.allocation.as_slice().iter().map(|v| format!("{v:.6}")).collect();
                let _ = writeln!(
                    out,
                    "{:<20}  {:>15.12}  {:>9}  ({})",
                    o.method.name(),
                    o.objective,
                    o.converged,
                    x.join(", ")
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<20}  {:<20}  {:>12}  {:>12}", "first", "second", "obj gap", "alloc dist");
            for g in &report.gaps {
                let _ = writeln!(
                    out,
                    "{:<20}  {:<20}  {:>12.3e}  {:>12.3e}",
                    g.first.name(),
                    g.second.name(),
                    g.objective_gap,
                    g.allocation_distance
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{} (max gap {:.3e}, tolerance {:.3e})",
                if report.passed { "PASS" } else { "FAIL" },
                report.max_objective_gap(),
                report.tolerance
            );
            out
        }
    }
}

#[derive(Serialize)]
struct BenchJson<'a> {
    n: usize,
    reps: usize,
    seed: u64,
    total_min_ns: u64,
    total_median_ns: u64,
    total_max_ns: u64,
    checksum: f64,
    runs: &'a [equimarginal::bench::RepTiming],
}

pub fn emit_bench(report: &BenchReport, format: BenchFormat) -> String {
    match format {
        BenchFormat::Json => to_json(&BenchJson {
            n: report.n,
            reps: report.reps,
            seed: report.seed,
            total_min_ns: report.total_min_ns,
            total_median_ns: report.total_median_ns,
            total_max_ns: report.total_max_ns,
            checksum: sig12(report.checksum),
            runs: &report.runs,
        }),
        BenchFormat::Csv => {
            let mut out = String::from("n,rep,phase,nanoseconds\n");
            for run in &report.runs {
                for phase in Phase::ALL {
                    let _ = writeln!(out, "{},{},{},{}", report.n, run.rep, phase.name(), run.phase_ns(phase));
                }
                let _ = writeln!(out, "{},{},total,{}", report.n, run.rep, run.total_ns);
            }
            out
        }
    }
}
