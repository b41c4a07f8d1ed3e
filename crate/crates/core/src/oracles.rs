//! Independent numerical methods used to certify the closed-form optimum.
//!
//! None of these routines touch the ratio rule in [`crate::solver`]: the
//! dual bisection works on the equimarginal condition, projected gradient
//! climbs the objective directly and the grid search enumerates the simplex.

use std::fmt;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{
    accurate_sum, evaluate_objective, marginal_utilities, Allocation, ProblemInstance,
};
use crate::solver::solve;

/// Grid search is exhaustive, so it is limited to small instances.
pub const GRID_MAX_SIZE: usize = 4;

/// Upper bound on the number of lattice points a grid search may visit.
pub const GRID_MAX_POINTS: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    LambdaBisection,
    ProjectedGradient,
    GridSearch,
}

impl Method {
    pub const ORACLES: [Method; 3] = [
        Method::LambdaBisection,
        Method::ProjectedGradient,
        Method::GridSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::LambdaBisection => "lambda_bisection",
            Method::ProjectedGradient => "projected_gradient",
            Method::GridSearch => "grid_search",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub method: Method,
    pub allocation: Allocation,
    pub objective: f64,
    /// Iterations performed (lattice points visited for grid search).
    pub iterations: u64,
    /// Lattice spacing, for grid search only.
    pub resolution: Option<f64>,
    /// Final multiplier, for bisection only.
    pub lambda: Option<f64>,
    pub converged: bool,
}

/// Funded amounts `max(0, sqrt(a_i / lambda) - 1)` and their total.
fn dual_allocation(a: &[f64], lambda: f64, out: &mut [f64]) -> f64 {
    for (x, &ai) in out.iter_mut().zip(a) {
        *x = ((ai / lambda).sqrt() - 1.0).max(0.0);
    }
    accurate_sum(out)
}

/// Bisects the common marginal `lambda` until the dual allocation spends
/// the unit budget to within `tol_sum`.
///
/// The bracket is `[a_max / (1 + n)^2, a_max]`: at the upper end nothing is
/// funded, at the lower end the largest project alone already receives `n`.
pub fn solve_by_lambda_bisection(
    p: &ProblemInstance,
    tol_sum: f64,
    max_iter: usize,
) -> Result<OracleResult> {
    if !(tol_sum > 0.0) {
        return Err(domain("bisection tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(domain("bisection needs at least one iteration"));
    }
    let a = p.coefficients();
    let n = a.len();
    let a_max = p.max_coefficient();
    let mut lo = a_max / ((1 + n) * (1 + n)) as f64;
    let mut hi = a_max;
    let mut x = vec![0.0; n];
    let mut sum_lo = dual_allocation(a, lo, &mut x);
    let mut sum_hi = dual_allocation(a, hi, &mut x);
    debug_assert!(sum_lo >= 1.0 && sum_hi == 0.0);

    let mut best = (f64::INFINITY, lo);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sum = dual_allocation(a, mid, &mut x);
        debug_assert!(
            sum <= sum_lo + 1e-12 && sum >= sum_hi - 1e-12,
            "dual sum not monotone in lambda"
        );
        let residual = (sum - 1.0).abs();
        if residual < best.0 {
            best = (residual, mid);
        }
        if residual <= tol_sum {
            converged = true;
            break;
        }
        if sum > 1.0 {
            lo = mid;
            sum_lo = sum;
        } else {
            hi = mid;
            sum_hi = sum;
        }
    }

    let lambda = best.1;
    dual_allocation(a, lambda, &mut x);
    // Spread the remaining residual proportionally over the funded entries.
    let allocation = Allocation::normalized(x)?;
    let objective = evaluate_objective(p, &allocation)?;
    Ok(OracleResult {
        method: Method::LambdaBisection,
        allocation,
        objective,
        iterations: iterations as u64,
        resolution: None,
        lambda: Some(lambda),
        converged,
    })
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Result<Allocation> {
    if v.is_empty() {
        return Err(domain("cannot project an empty vector"));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(domain(format!("cannot project non-finite entry {bad}")));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    Allocation::normalized(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Projected gradient ascent from the uniform allocation.
///
/// Each iteration tries `step` and halves it until the objective does not
/// decrease; the run stops once an accepted step improves by less than
/// `tol_improve`.
pub fn solve_by_projected_gradient(
    p: &ProblemInstance,
    step: f64,
    max_iter: usize,
    tol_improve: f64,
) -> Result<OracleResult> {
    solve_by_projected_gradient_observed(p, step, max_iter, tol_improve, |_, _| {})
}

/// As [`solve_by_projected_gradient`], calling `observe(iteration, objective)`
/// after every accepted step.
pub fn solve_by_projected_gradient_observed(
    p: &ProblemInstance,
    step: f64,
    max_iter: usize,
    tol_improve: f64,
    mut observe: impl FnMut(usize, f64),
) -> Result<OracleResult> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(domain("gradient step must be positive"));
    }
    if !(tol_improve >= 0.0) {
        return Err(domain("improvement tolerance must be nonnegative"));
    }
    let mut x = Allocation::uniform(p.len())?;
    let mut value = evaluate_objective(p, &x)?;
    observe(0, value);

    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; p.len()];
    while iterations < max_iter {
        iterations += 1;
        let grad = marginal_utilities(p, &x)?;
        let mut s = step;
        let (next, next_value) = loop {
            for ((t, xi), gi) in trial.iter_mut().zip(x.as_slice()).zip(&grad) {
                *t = xi + s * gi;
            }
            let y = project_to_simplex(&trial)?;
            let fy = evaluate_objective(p, &y)?;
            if fy >= value {
                break (y, fy);
            }
            s *= 0.5;
            if s < step * 1e-30 {
                break (x.clone(), value);
            }
        };
        let improvement = next_value - value;
        x = next;
        value = next_value;
        observe(iterations, value);
        if improvement < tol_improve {
            converged = true;
            break;
        }
    }
    Ok(OracleResult {
        method: Method::ProjectedGradient,
        allocation: x,
        objective: value,
        iterations: iterations as u64,
        resolution: None,
        lambda: None,
        converged,
    })
}

/// Number of points `(k_1, .., k_n)` with `k_i >= 0`, `sum k_i = m`.
fn lattice_size(n: usize, m: usize) -> f64 {
    // C(m + n - 1, n - 1)
    (1..n).fold(1.0, |acc, i| acc * (m + i) as f64 / i as f64)
}

struct GridScan<'a> {
    tables: &'a [Vec<f64>],
    best_value: f64,
    best: Vec<usize>,
    current: Vec<usize>,
    visited: u64,
}

impl GridScan<'_> {
    fn scan(&mut self, coord: usize, remaining: usize, partial: f64) {
        let last = self.tables.len() - 1;
        if coord == last {
            self.visited += 1;
            let value = partial + self.tables[coord][remaining];
            if value > self.best_value {
                self.best_value = value;
                self.current[coord] = remaining;
                self.best.copy_from_slice(&self.current);
            }
            return;
        }
        if coord + 1 == last {
            // Innermost pair: the last coordinate takes whatever remains.
            let (head, tail) = (&self.tables[coord], &self.tables[last]);
            let mut best_here = (f64::NEG_INFINITY, 0);
            for k in (0..=remaining).rev() {
                let value = partial + head[k] + tail[remaining - k];
                if value > best_here.0 {
                    best_here = (value, k);
                }
            }
            self.visited += remaining as u64 + 1;
            if best_here.0 > self.best_value {
                self.best_value = best_here.0;
                self.current[coord] = best_here.1;
                self.current[last] = remaining - best_here.1;
                self.best.copy_from_slice(&self.current);
            }
            return;
        }
        for k in (0..=remaining).rev() {
            self.current[coord] = k;
            self.scan(coord + 1, remaining - k, partial + self.tables[coord][k]);
        }
    }
}

/// Exhaustive search over the simplex lattice with spacing `resolution`
/// (`n <= 4`).
pub fn solve_by_grid_search(p: &ProblemInstance, resolution: f64) -> Result<OracleResult> {
    let n = p.len();
    if n > GRID_MAX_SIZE {
        return Err(Error::UnsupportedSize {
            n,
            max: GRID_MAX_SIZE,
        });
    }
    if !(1e-5..=1e-1).contains(&resolution) {
        return Err(domain(format!(
            "grid resolution {resolution} outside [1e-5, 1e-1]"
        )));
    }
    let m = (1.0 / resolution).round() as usize;
    if lattice_size(n, m) > GRID_MAX_POINTS {
        return Err(domain(format!(
            "grid with n = {n} at resolution {resolution} exceeds {GRID_MAX_POINTS:e} points"
        )));
    }
    let tables: Vec<Vec<f64>> = p
        .coefficients()
        .iter()
        .map(|&a| {
            (0..=m)
                .map(|k| {
                    let x = k as f64 / m as f64;
                    a * x / (1.0 + x)
                })
                .collect()
        })
        .collect();
    let mut grid = GridScan {
        tables: &tables,
        best_value: f64::NEG_INFINITY,
        best: vec![0; n],
        current: vec![0; n],
        visited: 0,
    };
    grid.scan(0, m, 0.0);

    let allocation = Allocation::normalized(grid.best.iter().map(|&k| k as f64).collect())?;
    let objective = evaluate_objective(p, &allocation)?;
    Ok(OracleResult {
        method: Method::GridSearch,
        allocation,
        objective,
        iterations: grid.visited,
        resolution: Some(1.0 / m as f64),
        lambda: None,
        converged: true,
    })
}

/// Parameters for the oracles run by [`cross_validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub bisection_tol_sum: f64,
    pub bisection_max_iter: usize,
    pub gradient_step: f64,
    pub gradient_max_iter: usize,
    pub gradient_tol_improve: f64,
    pub grid_resolution: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            bisection_tol_sum: 1e-12,
            bisection_max_iter: 200,
            gradient_step: 0.1,
            gradient_max_iter: 1_000_000,
            gradient_tol_improve: 1e-15,
            grid_resolution: 1e-3,
        }
    }
}

/// One method's answer inside a [`CrossValidation`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub allocation: Allocation,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseGap {
    pub first: Method,
    pub second: Method,
    pub objective_gap: f64,
    /// Largest componentwise allocation difference.
    pub allocation_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidation {
    pub outcomes: Vec<MethodOutcome>,
    pub gaps: Vec<PairwiseGap>,
    pub tolerance: f64,
    pub passed: bool,
}

impl CrossValidation {
    pub fn max_objective_gap(&self) -> f64 {
        self.gaps.iter().map(|g| g.objective_gap).fold(0.0, f64::max)
    }
}

/// Runs the closed form and each requested oracle, then compares every
/// pair. Passes iff all pairwise objective gaps are within `tol`.
pub fn cross_validate(
    p: &ProblemInstance,
    methods: &[Method],
    tol: f64,
    settings: &OracleSettings,
) -> Result<CrossValidation> {
    if !(tol >= 0.0) {
        return Err(domain("cross-validation tolerance must be nonnegative"));
    }
    let mut selected: Vec<Method> = methods.to_vec();
    selected.push(Method::ClosedForm);
    selected.sort();
    selected.dedup();
    if selected.len() < 2 {
        return Err(domain("cross-validation needs at least one oracle besides the closed form"));
    }

    let mut outcomes = Vec::with_capacity(selected.len());
    for method in selected {
        let outcome = match method {
            Method::ClosedForm => {
                let r = solve(p)?;
                MethodOutcome {
                    method,
                    allocation: r.allocation,
                    objective: r.objective,
                    converged: true,
                }
            }
            _ => {
                let r = match method {
                    Method::LambdaBisection => solve_by_lambda_bisection(
                        p,
                        settings.bisection_tol_sum,
                        settings.bisection_max_iter,
                    )?,
                    Method::ProjectedGradient => solve_by_projected_gradient(
                        p,
                        settings.gradient_step,
                        settings.gradient_max_iter,
                        settings.gradient_tol_improve,
                    )?,
                    _ => solve_by_grid_search(p, settings.grid_resolution)?,
                };
                MethodOutcome {
                    method,
                    allocation: r.allocation,
                    objective: r.objective,
                    converged: r.converged,
                }
            }
        };
        outcomes.push(outcome);
    }

    let mut gaps = Vec::new();
    for (i, first) in outcomes.iter().enumerate() {
        for second in &outcomes[i + 1..] {
            gaps.push(PairwiseGap {
                first: first.method,
                second: second.method,
                objective_gap: (first.objective - second.objective).abs(),
                allocation_distance: first.allocation.max_abs_diff(&second.allocation),
            });
        }
    }
    let passed = gaps.iter().all(|g| g.objective_gap <= tol);
    Ok(CrossValidation {
        outcomes,
        gaps,
        tolerance: tol,
        passed,
    })
}
