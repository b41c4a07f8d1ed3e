//! Closed-form optimum.
//!
//! With coefficients sorted so that `a_1 >= a_2 >= ... >= a_n` and
//! `e_i = sqrt(a_i / a_1)`, the optimum funds exactly the first `k` projects,
//! where `k` is found by a forward pass that stops at the first `j` with
//! `j * e_j <= e_1 + ... + e_{j-1}`. On the funded set
//! `1 + x_j = (k + 1) e_j / S` with `S = e_1 + ... + e_k`, so all funded
//! marginals equal `lambda = a_1 (S / (k + 1))^2`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{accurate_sum, evaluate_objective, Allocation, ProblemInstance};

/// Normalized square-root ratios `e_i = sqrt(a_(i) / a_(1))` in descending
/// order; `e_1 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVector {
    e: Vec<f64>,
}

impl RatioVector {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        match e.first() {
            None => return Err(domain("ratio vector must be nonempty")),
            Some(&first) if first != 1.0 => {
                return Err(domain(format!("leading ratio must be exactly 1, got {first}")))
            }
            _ => {}
        }
        if let Some(v) = e.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(domain(format!("ratio {v} outside (0, 1]")));
        }
        if e.windows(2).any(|w| w[1] > w[0]) {
            return Err(domain("ratios must be non-increasing"));
        }
        Ok(Self { e })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }
}

/// Ratios over the descending view of `p`.
pub fn normalized_ratios(p: &ProblemInstance) -> RatioVector {
    let sorted = p.sorted_coefficients();
    let top = sorted[0];
    let mut e = Vec::with_capacity(sorted.len());
    e.push(1.0);
    e.extend(sorted[1..].iter().map(|&v| (v / top).sqrt()));
    RatioVector { e }
}

/// Number of funded projects.
///
/// Single forward pass with a running prefix sum; the first `j` where
/// `j * e_j <= S_{j-1}` ends the scan, and no later index can pass again
/// because the ratios are non-increasing.
pub fn active_set_size(e: &RatioVector) -> usize {
    let e = e.as_slice();
    let mut prefix = e[0];
    let mut k = 1;
    for (idx, &ej) in e.iter().enumerate().skip(1) {
        let j = (idx + 1) as f64;
        if j * ej > prefix {
            prefix += ej;
            k = idx + 1;
        } else {
            break;
        }
    }
    k
}

/// Optimal allocation in descending-coefficient order for active-set size `k`.
pub fn closed_form_allocation(e: &RatioVector, k: usize) -> Result<Allocation> {
    let e = e.as_slice();
    let n = e.len();
    if k == 0 || k > n {
        return Err(domain(format!("active set size {k} outside 1..={n}")));
    }
    let sum: f64 = e[..k].iter().sum();
    let weight = (k + 1) as f64;
    // Rounding dust on the last funded coordinate, scaled with the prefix sum.
    let dust = 1e-15 * sum.max(1.0);

    let mut x = vec![0.0; n];
    for (j, (xj, &ej)) in x.iter_mut().zip(&e[..k]).enumerate() {
        let numerator = weight * ej - sum;
        if numerator < -dust {
            return Err(domain(format!(
                "active set size {k} too large: coordinate {j} would be negative"
            )));
        }
        *xj = numerator.max(0.0) / sum;
    }
    let total = accurate_sum(&x[..k]);
    if total != 1.0 {
        x[..k].iter_mut().for_each(|v| *v /= total);
    }
    Allocation::new(x)
}

/// Optimal allocation together with its certificate quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    /// Allocation in the caller's original index order.
    pub allocation: Allocation,
    /// Allocation in descending-coefficient order.
    pub sorted_allocation: Allocation,
    pub active_count: usize,
    pub objective: f64,
    /// Common marginal utility of the funded projects.
    pub lambda: f64,
}

/// Solves `max sum a_i x_i / (1 + x_i)` over the probability simplex.
pub fn solve(p: &ProblemInstance) -> Result<SolveResult> {
    if p.len() == 1 {
        let x = Allocation::vertex(1, 0)?;
        return assemble(p, x, 1, 1.0);
    }
    let e = normalized_ratios(p);
    let k = active_set_size(&e);
    let sorted = closed_form_allocation(&e, k)?;
    let prefix: f64 = e.as_slice()[..k].iter().sum();
    assemble(p, sorted, k, prefix)
}

/// Maps a sorted-order allocation back to input order and fills in the
/// objective and `lambda`.
pub(crate) fn assemble(
    p: &ProblemInstance,
    sorted: Allocation,
    k: usize,
    prefix: f64,
) -> Result<SolveResult> {
    let mut x = vec![0.0; p.len()];
    for (&orig, &v) in p.descending_order().iter().zip(&sorted.as_slice()[..k]) {
        x[orig] = v;
    }
    let allocation = Allocation::new(x)?;
    let objective = evaluate_objective(p, &allocation)?;
    let ratio = prefix / (k + 1) as f64;
    Ok(SolveResult {
        allocation,
        sorted_allocation: sorted,
        active_count: k,
        objective,
        lambda: p.max_coefficient() * ratio * ratio,
    })
}

/// Explicit two-project optimum for `a1 >= a2 > 0`.
pub fn two_cup_solution(a1: f64, a2: f64) -> Result<(f64, f64)> {
    if !(a2 > 0.0 && a1 >= a2 && a1.is_finite()) {
        return Err(domain(format!("expected a1 >= a2 > 0, got ({a1}, {a2})")));
    }
    if a2 > a1 / 4.0 {
        let (r1, r2) = (a1.sqrt(), a2.sqrt());
        let s = r1 + r2;
        Ok(((2.0 * r1 - r2) / s, (2.0 * r2 - r1) / s))
    } else {
        Ok((1.0, 0.0))
    }
}

/// Explicit three-project optimum for `a1 >= a2 >= a3 > 0`.
pub fn three_cup_solution(a1: f64, a2: f64, a3: f64) -> Result<(f64, f64, f64)> {
    if !(a3 > 0.0 && a2 >= a3 && a1 >= a2 && a1.is_finite()) {
        return Err(domain(format!(
            "expected a1 >= a2 >= a3 > 0, got ({a1}, {a2}, {a3})"
        )));
    }
    let e1 = 1.0;
    let e2 = (a2 / a1).sqrt();
    let e3 = (a3 / a1).sqrt();
    if 3.0 * e3 > e1 + e2 {
        let s = e1 + e2 + e3;
        Ok((
            (3.0 * e1 - e2 - e3) / s,
            (3.0 * e2 - e1 - e3) / s,
            (3.0 * e3 - e1 - e2) / s,
        ))
    } else if 2.0 * e2 > e1 {
        let s = e1 + e2;
        Ok(((2.0 * e1 - e2) / s, (2.0 * e2 - e1) / s, 0.0))
    } else {
        Ok((1.0, 0.0, 0.0))
    }
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::model::{kkt_check, KktTolerances};

    fn inst(a: &[f64]) -> ProblemInstance {
        ProblemInstance::new(a.to_vec()).unwrap()
    }

    fn ratios(e: &[f64]) -> RatioVector {
        RatioVector::new(e.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn ratio_vector_validation() {
        assert!(RatioVector::new(vec![]).is_err());
        assert!(RatioVector::new(vec![0.9, 0.5]).is_err());
        assert!(RatioVector::new(vec![1.0, 0.5, 0.6]).is_err());
        assert!(RatioVector::new(vec![1.0, 0.0]).is_err());
        assert!(RatioVector::new(vec![1.0, 1.0, 0.3]).is_ok());
    }

    #[test]
    fn normalized_ratio_examples() {
        let e = normalized_ratios(&inst(&[0.8, 0.4, 0.25]));
        assert!(close(e.as_slice(), &[1.0, 0.7071068, 0.5590170], 1e-7));
        assert_eq!(e.as_slice()[0], 1.0);
        assert_eq!(normalized_ratios(&inst(&[5.0, 5.0, 5.0])).as_slice(), &[1.0; 3]);
        assert_eq!(normalized_ratios(&inst(&[4.0, 1.0])).as_slice(), &[1.0, 0.5]);
        // Unsorted input is viewed in descending order.
        assert_eq!(normalized_ratios(&inst(&[1.0, 4.0])).as_slice(), &[1.0, 0.5]);
    }

    #[test]
    fn active_set_examples() {
        assert_eq!(active_set_size(&ratios(&[1.0, 0.7071068, 0.5590170])), 2);
        assert_eq!(active_set_size(&ratios(&[1.0, 0.5590170])), 2);
        assert_eq!(active_set_size(&ratios(&[1.0, 0.4])), 1);
        assert_eq!(active_set_size(&ratios(&[1.0; 7])), 7);
        assert_eq!(active_set_size(&ratios(&[1.0])), 1);
        // Equality is not a strict improvement.
        assert_eq!(active_set_size(&ratios(&[1.0, 0.5])), 1);
    }

    #[test]
    fn closed_form_examples() {
        let x = closed_form_allocation(&ratios(&[1.0, 0.7071068, 0.5590170]), 2).unwrap();
        assert!(close(x.as_slice(), &[0.757359, 0.242641, 0.0], 1e-5));
        let x = closed_form_allocation(&ratios(&[1.0, 0.5590170]), 2).unwrap();
        assert!(close(x.as_slice(), &[0.924290, 0.075710], 1e-5));
        let x = closed_form_allocation(&ratios(&[1.0; 6]), 6).unwrap();
        assert!(close(x.as_slice(), &[1.0 / 6.0; 6], 1e-15));
    }

    #[test]
    fn closed_form_rejects_bad_k() {
        let e = ratios(&[1.0, 0.7071068, 0.5590170]);
        assert!(closed_form_allocation(&e, 0).is_err());
        assert!(closed_form_allocation(&e, 4).is_err());
        // k = 3 would need a negative third coordinate.
        assert!(closed_form_allocation(&e, 3).is_err());
    }

    #[test]
    fn solve_examples() {
        let r = solve(&inst(&[0.8, 0.25])).unwrap();
        assert!(close(r.allocation.as_slice(), &[0.924290, 0.075710], 1e-5));
        assert!((r.objective - 0.401858).abs() < 1e-6);
        assert_eq!(r.active_count, 2);

        let swapped = solve(&inst(&[0.25, 0.8])).unwrap();
        assert!(close(swapped.allocation.as_slice(), &[0.075710, 0.924290], 1e-5));
        assert_eq!(swapped.objective, r.objective);

        let r = solve(&inst(&[0.8, 0.4, 0.25])).unwrap();
        assert!(close(r.allocation.as_slice(), &[0.757359, 0.242641, 0.0], 1e-5));
        assert_eq!(r.allocation[2], 0.0);
        assert!((r.objective - 0.422876).abs() < 1e-6);
        assert_eq!(r.active_count, 2);

        let c = 0.7;
        let r = solve(&inst(&[c])).unwrap();
        assert_eq!(r.allocation.as_slice(), &[1.0]);
        assert_eq!(r.objective, c / 2.0);
        assert_eq!(r.active_count, 1);
        assert_eq!(r.lambda, c / 4.0);
    }

    #[test]
    fn lambda_identity_matches_marginals() {
        for a in [&[0.8, 0.25][..], &[0.8, 0.4, 0.25], &[0.3, 0.9, 0.5, 0.05, 0.7]] {
            let p = inst(a);
            let r = solve(&p).unwrap();
            let kkt = kkt_check(&p, &r.allocation, KktTolerances::default()).unwrap();
            assert!(kkt.passed, "{a:?}: {kkt:?}");
            assert!((kkt.lambda - r.lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn two_cup_examples() {
        let (x1, x2) = two_cup_solution(0.8, 0.25).unwrap();
        assert!((x1 - 0.924290).abs() < 1e-5 && (x2 - 0.075710).abs() < 1e-5);
        assert_eq!(two_cup_solution(0.8, 0.2).unwrap(), (1.0, 0.0));
        assert_eq!(two_cup_solution(1.0, 1.0).unwrap(), (0.5, 0.5));
        assert!(two_cup_solution(0.25, 0.8).is_err());
        assert!(two_cup_solution(0.8, 0.0).is_err());
    }

    #[test]
    fn three_cup_examples() {
        let (x1, x2, x3) = three_cup_solution(0.8, 0.4, 0.25).unwrap();
        assert!(close(&[x1, x2, x3], &[0.757359, 0.242641, 0.0], 1e-5));
        assert_eq!(x3, 0.0);
        let (x1, x2, x3) = three_cup_solution(1.0, 1.0, 1.0).unwrap();
        assert!(close(&[x1, x2, x3], &[1.0 / 3.0; 3], 1e-15));
        assert_eq!(three_cup_solution(1.0, 0.04, 0.04).unwrap(), (1.0, 0.0, 0.0));
        assert!(three_cup_solution(0.8, 0.25, 0.4).is_err());
    }

    #[test]
    fn explicit_formulas_agree_with_solve() {
        for (a1, a2) in [(0.8, 0.25), (0.8, 0.2), (1.0, 1.0), (0.9, 0.3), (0.5, 0.1)] {
            let (x1, x2) = two_cup_solution(a1, a2).unwrap();
            let r = solve(&inst(&[a1, a2])).unwrap();
            assert!(close(r.allocation.as_slice(), &[x1, x2], 1e-12));
        }
        for (a1, a2, a3) in [(0.8, 0.4, 0.25), (1.0, 0.9, 0.8), (1.0, 0.3, 0.2), (1.0, 0.1, 0.1)] {
            let (x1, x2, x3) = three_cup_solution(a1, a2, a3).unwrap();
            let r = solve(&inst(&[a1, a2, a3])).unwrap();
            assert!(close(r.allocation.as_slice(), &[x1, x2, x3], 1e-12));
        }
    }

    #[test]
    fn boundary_equality_gives_zero_either_way() {
        // e = (1, 1/2): 2 * e_2 == e_1 exactly.
        let p = inst(&[1.0, 0.25]);
        let e = normalized_ratios(&p);
        let excluded = closed_form_allocation(&e, 1).unwrap();
        let included = closed_form_allocation(&e, 2).unwrap();
        assert_eq!(excluded.as_slice(), &[1.0, 0.0]);
        assert!(excluded.max_abs_diff(&included) <= 1e-15);
        assert_eq!(solve(&p).unwrap().allocation.as_slice(), &[1.0, 0.0]);
    }
}
