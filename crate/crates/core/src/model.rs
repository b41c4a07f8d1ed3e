//! Problem data, feasible allocations and the quantities evaluated on them.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Largest admissible deviation of `sum(x)` from 1 for an [`Allocation`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Default cut-off below which a coordinate counts as unfunded.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

/// Positive project coefficients together with their descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a: Vec<f64>,
    // rank -> original index, ties kept in input order
    order: Vec<usize>,
    sorted: Vec<f64>,
}

impl ProblemInstance {
    /// Validates the coefficients and computes their stable descending order.
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(domain("at least one coefficient is required"));
        }
        if let Some((i, v)) = a.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(domain(format!(
                "coefficient {i} must be positive and finite, got {v}"
            )));
        }
        // Positive floats order like their bit patterns; complementing gives
        // descending order, and the index breaks ties as a stable sort would.
        let mut keyed: Vec<(u64, usize)> = a
            .iter()
            .enumerate()
            .map(|(i, v)| (!v.to_bits(), i))
            .collect();
        keyed.sort_unstable();
        let order: Vec<usize> = keyed.iter().map(|&(_, i)| i).collect();
        let sorted: Vec<f64> = keyed.iter().map(|&(k, _)| f64::from_bits(!k)).collect();
        Ok(Self { a, order, sorted })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Coefficients in input order.
    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    /// Original indices listed from the largest coefficient to the smallest.
    pub fn descending_order(&self) -> &[usize] {
        &self.order
    }

    /// Rank of each original index in the descending order.
    pub fn sort_perm(&self) -> Vec<usize> {
        let mut perm = vec![0; self.order.len()];
        for (rank, &i) in self.order.iter().enumerate() {
            perm[i] = rank;
        }
        perm
    }

    /// Coefficients in descending order.
    pub fn sorted_coefficients(&self) -> &[f64] {
        &self.sorted
    }

    pub fn max_coefficient(&self) -> f64 {
        self.sorted[0]
    }

    pub fn total(&self) -> f64 {
        self.a.iter().sum()
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.a.len() {
            return Err(Error::Dimension {
                expected: self.a.len(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Allocation {
    x: Vec<f64>,
}

impl Allocation {
    /// Accepts `x` only if every entry is finite and nonnegative and the
    /// entries sum to one within [`SUM_TOLERANCE`].
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(domain("allocation must have at least one component"));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(domain(format!(
                "allocation component {i} must be finite and nonnegative, got {v}"
            )));
        }
        let total = accurate_sum(&x);
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(domain(format!("allocation sums to {total}, not 1")));
        }
        Ok(Self { x })
    }

    /// Rescales a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(mut x: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(domain(format!(
                "component {i} must be finite and nonnegative, got {v}"
            )));
        }
        let total = accurate_sum(&x);
        if !(total > 0.0) {
            return Err(domain("cannot normalize a vector with zero sum"));
        }
        x.iter_mut().for_each(|v| *v /= total);
        Self::new(x)
    }

    /// The vertex putting the whole budget on `index`.
    pub fn vertex(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(domain(format!("vertex index {index} out of range for n = {n}")));
        }
        let mut x = vec![0.0; n];
        x[index] = 1.0;
        Ok(Self { x })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain("allocation must have at least one component"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }

    /// Largest componentwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Allocation) -> f64 {
        self.x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for Allocation {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.x[i]
    }
}

/// Neumaier-compensated sum.
pub(crate) fn accurate_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `F(x) = sum a_i x_i / (1 + x_i)`.
pub fn evaluate_objective(p: &ProblemInstance, x: &Allocation) -> Result<f64> {
    evaluate_objective_raw(p, x.as_slice())
}

/// `F` at an arbitrary point with every `x_i > -1`, for derivative checks
/// off the simplex.
pub fn evaluate_objective_raw(p: &ProblemInstance, x: &[f64]) -> Result<f64> {
    p.check_dimension(x)?;
    if let Some(v) = x.iter().find(|v| !(v.is_finite() && **v > -1.0)) {
        return Err(domain(format!("objective undefined at x = {v}")));
    }
    Ok(p.a.iter().zip(x).map(|(a, x)| a * x / (1.0 + x)).sum())
}

/// `sum a_i / (1 + x_i)`, the quantity minimized by the optimal allocation.
/// Adds up with [`evaluate_objective`] to `sum a_i`.
pub fn evaluate_min_form(p: &ProblemInstance, x: &Allocation) -> Result<f64> {
    p.check_dimension(x.as_slice())?;
    Ok(p.a
        .iter()
        .zip(x.as_slice())
        .map(|(a, x)| a / (1.0 + x))
        .sum())
}

/// Marginal utilities `a_i / (1 + x_i)^2` at a feasible allocation.
pub fn marginal_utilities(p: &ProblemInstance, x: &Allocation) -> Result<Vec<f64>> {
    marginal_utilities_raw(p, x.as_slice())
}

/// Marginal utilities at an arbitrary point with every `x_i > -1`; the
/// point need not lie on the simplex.
pub fn marginal_utilities_raw(p: &ProblemInstance, x: &[f64]) -> Result<Vec<f64>> {
    p.check_dimension(x)?;
    if let Some(v) = x.iter().find(|v| !(v.is_finite() && **v > -1.0)) {
        return Err(domain(format!("marginal utility undefined at x = {v}")));
    }
    Ok(p.a
        .iter()
        .zip(x)
        .map(|(a, x)| {
            let d = 1.0 + x;
            a / (d * d)
        })
        .collect())
}

/// Result of replaying the tea-mixing experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingOutcome {
    /// Tea concentration of the combined withdrawn volume.
    pub concentration: f64,
    /// Set when some `a_i > 1`: the value is still the objective but no
    /// longer a physical concentration.
    pub exceeds_unit_concentration: bool,
}

/// Replays the cup experiment with explicit mass and volume bookkeeping.
///
/// Cup `i` starts with one unit of liquid holding tea mass `a_i`. Pouring
/// `x_i` of water into it and drawing the same volume back out yields
/// `x_i` of liquid at the diluted concentration. The withdrawn portions are
/// pooled and the pooled concentration is returned.
pub fn simulate_mixing(p: &ProblemInstance, x: &Allocation) -> Result<MixingOutcome> {
    p.check_dimension(x.as_slice())?;
    let mut pooled_mass = 0.0;
    let mut pooled_volume = 0.0;
    for (&tea, &water) in p.a.iter().zip(x.as_slice()) {
        let cup_volume = 1.0 + water;
        let cup_concentration = tea / cup_volume;
        pooled_mass += cup_concentration * water;
        pooled_volume += water;
    }
    Ok(MixingOutcome {
        concentration: pooled_mass / pooled_volume,
        exceeds_unit_concentration: p.a.iter().any(|&a| a > 1.0),
    })
}

/// Thresholds applied by [`kkt_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktTolerances {
    /// Bound on `|g'_i(x_i) - lambda|` over funded coordinates.
    pub active: f64,
    /// Bound on `max(0, a_i - lambda)` over unfunded coordinates.
    pub inactive: f64,
    /// Coordinates at or below this value are treated as unfunded.
    pub zero_threshold: f64,
}

impl KktTolerances {
    pub fn new(active: f64, inactive: f64) -> Self {
        Self {
            active,
            inactive,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
        }
    }
}

impl Default for KktTolerances {
    fn default() -> Self {
        Self::new(1e-9, 1e-12)
    }
}

/// Numerical optimality certificate for an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// Mean marginal utility over the funded coordinates.
    pub lambda: f64,
    pub max_active_deviation: f64,
    pub max_inactive_violation: f64,
    pub active_count: usize,
    pub passed: bool,
}

/// Checks the equimarginal condition on funded coordinates and
/// `a_i <= lambda` on unfunded ones.
pub fn kkt_check(p: &ProblemInstance, x: &Allocation, tol: KktTolerances) -> Result<KktReport> {
    if !(tol.active > 0.0 && tol.inactive > 0.0 && tol.zero_threshold > 0.0) {
        return Err(domain("KKT tolerances must be positive"));
    }
    let marginals = marginal_utilities(p, x)?;
    let is_active = |i: usize| x[i] > tol.zero_threshold;

    let (sum, count) = (0..p.len())
        .filter(|&i| is_active(i))
        .fold((0.0, 0usize), |(s, c), i| (s + marginals[i], c + 1));
    if count == 0 {
        return Err(domain("no coordinate exceeds the zero threshold"));
    }
    let lambda = sum / count as f64;

    let mut max_active_deviation: f64 = 0.0;
    let mut max_inactive_violation: f64 = 0.0;
    for (i, &m) in marginals.iter().enumerate() {
        if is_active(i) {
            max_active_deviation = max_active_deviation.max((m - lambda).abs());
        } else {
            max_inactive_violation = max_inactive_violation.max(p.a[i] - lambda);
        }
    }
    Ok(KktReport {
        lambda,
        max_active_deviation,
        max_inactive_violation,
        active_count: count,
        passed: max_active_deviation <= tol.active && max_inactive_violation <= tol.inactive,
    })
}
