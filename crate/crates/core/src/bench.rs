//! Timing harness for the closed-form solver.
//!
//! Instances come from SplitMix64 (Steele, Lea and Flood's 64-bit mixer,
//! state initialised to the seed). Each draw `r` maps to a coefficient as
//!
//! ```text
//! u = (r >> 11) * 2^-53          // uniform in [0, 1)
//! a = 1 - 0.99 * u               // uniform in (0.01, 1]
//! ```
//!
//! so any port using the same generator and mapping reproduces the same
//! instances and objective checksums. Repetition `r` of a run with seed `s`
//! uses seed `s + r` (wrapping).

use std::fmt;
use std::time::Instant;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{kkt_check, KktReport, KktTolerances, ProblemInstance};
use crate::solver::{active_set_size, assemble, closed_form_allocation, normalized_ratios};

/// KKT tolerances every benchmarked solution must meet.
pub const BENCH_KKT: KktTolerances = KktTolerances {
    active: 1e-7,
    inactive: 1e-9,
    zero_threshold: crate::model::DEFAULT_ZERO_THRESHOLD,
};

/// Deterministic coefficients uniform in `(0.01, 1]`.
pub fn generate_coefficients(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            1.0 - 0.99 * u
        })
        .collect()
}

pub fn generate_instance(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(domain("benchmark instances need n >= 1"));
    }
    ProblemInstance::new(generate_coefficients(n, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Sort,
    Ratios,
    ActiveSet,
    Allocation,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Sort, Phase::Ratios, Phase::ActiveSet, Phase::Allocation];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Sort => "sort",
            Phase::Ratios => "ratios",
            Phase::ActiveSet => "active_set",
            Phase::Allocation => "allocation",
        }
    }
}

/// Timings and outcome of one benchmark repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepTiming {
    pub rep: usize,
    pub seed: u64,
    pub sort_ns: u64,
    pub ratios_ns: u64,
    pub active_set_ns: u64,
    pub allocation_ns: u64,
    pub total_ns: u64,
    pub active_count: usize,
    pub objective: f64,
}

impl RepTiming {
    pub fn phase_ns(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Sort => self.sort_ns,
            Phase::Ratios => self.ratios_ns,
            Phase::ActiveSet => self.active_set_ns,
            Phase::Allocation => self.allocation_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub runs: Vec<RepTiming>,
    pub total_min_ns: u64,
    pub total_median_ns: u64,
    pub total_max_ns: u64,
    /// Sum of objectives over repetitions, in order.
    pub checksum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchError {
    Invalid(crate::Error),
    KktFailure {
        seed: u64,
        rep: usize,
        report: KktReport,
    },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Invalid(e) => write!(f, "{e}"),
            BenchError::KktFailure { seed, rep, report } => write!(
                f,
                "KKT check failed for rep {rep} (seed {seed}): active deviation {:e}, inactive violation {:e}",
                report.max_active_deviation, report.max_inactive_violation
            ),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<crate::Error> for BenchError {
    fn from(e: crate::Error) -> Self {
        BenchError::Invalid(e)
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

/// Generates, solves and certifies `reps` instances of size `n`.
/// Instance generation is excluded from the timings.
pub fn run_bench(n: usize, reps: usize, seed: u64) -> std::result::Result<BenchReport, BenchError> {
    if n == 0 || reps == 0 {
        return Err(domain("benchmark needs n >= 1 and reps >= 1").into());
    }
    let mut runs = Vec::with_capacity(reps);
    let mut checksum = 0.0;
    for rep in 0..reps {
        let rep_seed = seed.wrapping_add(rep as u64);
        let coefficients = generate_coefficients(n, rep_seed);

        let t = Instant::now();
        let p = ProblemInstance::new(coefficients)?;
        let sort_ns = elapsed_ns(t);

        let t = Instant::now();
        let e = normalized_ratios(&p);
        let ratios_ns = elapsed_ns(t);

        let t = Instant::now();
        let k = active_set_size(&e);
        let active_set_ns = elapsed_ns(t);

        let t = Instant::now();
        let sorted = closed_form_allocation(&e, k)?;
        let prefix: f64 = e.as_slice()[..k].iter().sum();
        let result = assemble(&p, sorted, k, prefix)?;
        let allocation_ns = elapsed_ns(t);

        let report = kkt_check(&p, &result.allocation, BENCH_KKT)?;
        if !report.passed {
            return Err(BenchError::KktFailure {
                seed: rep_seed,
                rep,
                report,
            });
        }
        checksum += result.objective;
        runs.push(RepTiming {
            rep,
            seed: rep_seed,
            sort_ns,
            ratios_ns,
            active_set_ns,
            allocation_ns,
            total_ns: sort_ns + ratios_ns + active_set_ns + allocation_ns,
            active_count: k,
            objective: result.objective,
        });
    }

    let mut totals: Vec<u64> = runs.iter().map(|r| r.total_ns).collect();
    totals.sort_unstable();
    Ok(BenchReport {
        n,
        reps,
        seed,
        total_min_ns: totals[0],
        total_median_ns: totals[totals.len() / 2],
        total_max_ns: totals[totals.len() - 1],
        runs,
        checksum,
    })
}

/// Ratio of median solve times at `2n` and `n`.
pub fn doubling_ratio(n: usize, reps: usize, seed: u64) -> std::result::Result<f64, BenchError> {
    let small = run_bench(n, reps, seed)?;
    let large = run_bench(2 * n, reps, seed)?;
    Ok(large.total_median_ns.max(1) as f64 / small.total_median_ns.max(1) as f64)
}
