use equimarginal::oracles::project_to_simplex;
use equimarginal::{
    active_set_size, closed_form_allocation, evaluate_min_form, evaluate_objective,
    evaluate_objective_raw, kkt_check, marginal_utilities, normalized_ratios, simulate_mixing,
    solve, Allocation, KktTolerances, ProblemInstance,
};
use proptest::prelude::*;

fn coefficients(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..=1.0, 1..=max_len)
}

fn instance_and_point(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    coefficients(max_len).prop_flat_map(|a| {
        let n = a.len();
        (Just(a), prop::collection::vec(0.0f64..1.0, n))
    })
}

fn simplex_point(raw: &[f64]) -> Allocation {
    if raw.iter().sum::<f64>() > 0.0 {
        Allocation::normalized(raw.to_vec()).unwrap()
    } else {
        Allocation::vertex(raw.len(), 0).unwrap()
    }
}

/// Largest `j` in `2..=n` with `j * e_j > e_1 + ... + e_{j-1}`, scanning
/// every index instead of stopping early.
fn active_set_by_definition(e: &[f64]) -> usize {
    let mut best = 1;
    let mut prefix = e[0];
    for j in 2..=e.len() {
        if j as f64 * e[j - 1] > prefix {
            best = j;
        }
        prefix += e[j - 1];
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn objective_and_min_form_add_to_total((a, raw) in instance_and_point(10)) {
        let p = ProblemInstance::new(a).unwrap();
        let x = simplex_point(&raw);
        let f = evaluate_objective(&p, &x).unwrap();
        let m = evaluate_min_form(&p, &x).unwrap();
        prop_assert!((f + m - p.total()).abs() <= 1e-12);
    }

    #[test]
    fn objective_bounds((a, raw) in instance_and_point(10)) {
        let p = ProblemInstance::new(a).unwrap();
        let x = simplex_point(&raw);
        let f = evaluate_objective(&p, &x).unwrap();
        prop_assert!(f > 0.0);
        prop_assert!(f <= p.total() / 2.0 + 1e-15);
    }

    #[test]
    fn mixing_matches_objective((a, raw) in instance_and_point(10)) {
        let p = ProblemInstance::new(a).unwrap();
        let x = simplex_point(&raw);
        let mix = simulate_mixing(&p, &x).unwrap();
        prop_assert!((mix.concentration - evaluate_objective(&p, &x).unwrap()).abs() <= 1e-12);
        prop_assert!(!mix.exceeds_unit_concentration);
    }

    #[test]
    fn marginals_match_central_differences((a, raw) in instance_and_point(8)) {
        let p = ProblemInstance::new(a).unwrap();
        let x: Vec<f64> = raw.iter().map(|v| 0.05 + 0.9 * v).collect();
        let interior = simplex_point(&x);
        let grad = marginal_utilities(&p, &interior).unwrap();
        let h = 1e-6;
        for i in 0..p.len() {
            let mut up = interior.as_slice().to_vec();
            let mut down = up.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (evaluate_objective_raw(&p, &up).unwrap()
                - evaluate_objective_raw(&p, &down).unwrap())
                / (2.0 * h);
            prop_assert!(((fd - grad[i]) / grad[i]).abs() <= 1e-6, "i={} fd={} g={}", i, fd, grad[i]);
        }
    }

    #[test]
    fn solve_passes_kkt(a in coefficients(50)) {
        let p = ProblemInstance::new(a).unwrap();
        let r = solve(&p).unwrap();
        let kkt = kkt_check(&p, &r.allocation, KktTolerances::new(1e-9, 1e-12)).unwrap();
        prop_assert!(kkt.passed, "{:?}", kkt);
        prop_assert!((kkt.lambda - r.lambda).abs() <= 1e-12);
        prop_assert!((r.objective - evaluate_objective(&p, &r.allocation).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn allocation_is_monotone_in_coefficients(a in coefficients(20)) {
        let p = ProblemInstance::new(a).unwrap();
        let r = solve(&p).unwrap();
        let sorted_a = p.sorted_coefficients();
        let x = r.sorted_allocation.as_slice();
        for i in 0..x.len() - 1 {
            prop_assert!(x[i] >= x[i + 1]);
            if sorted_a[i] > sorted_a[i + 1] && x[i + 1] > 0.0 {
                prop_assert!(x[i] > x[i + 1]);
            }
        }
        // Funded set is exactly the k largest coefficients.
        prop_assert!(x[r.active_count..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_is_scale_invariant(a in coefficients(20), c in 1e-3f64..1e3) {
        let base = solve(&ProblemInstance::new(a.clone()).unwrap()).unwrap();
        let scaled_a: Vec<f64> = a.iter().map(|v| v * c).collect();
        let scaled = solve(&ProblemInstance::new(scaled_a).unwrap()).unwrap();
        prop_assert!(base.allocation.max_abs_diff(&scaled.allocation) <= 1e-12);
        prop_assert!(((scaled.objective - c * base.objective) / (c * base.objective)).abs() <= 1e-12);
    }

    #[test]
    fn solve_is_permutation_equivariant(
        (a, perm) in coefficients(20).prop_flat_map(|a| {
            let idx: Vec<usize> = (0..a.len()).collect();
            (Just(a), Just(idx).prop_shuffle())
        })
    ) {
        let base = solve(&ProblemInstance::new(a.clone()).unwrap()).unwrap();
        let permuted_a: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let permuted = solve(&ProblemInstance::new(permuted_a).unwrap()).unwrap();
        for (pos, &i) in perm.iter().enumerate() {
            prop_assert!((permuted.allocation[pos] - base.allocation[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn unused_cups_stay_unused_when_a_weaker_cup_is_added(a in coefficients(20), frac in 0.0f64..1.0) {
        let p = ProblemInstance::new(a.clone()).unwrap();
        let r = solve(&p).unwrap();
        let unused: Vec<usize> = (0..a.len()).filter(|&i| r.allocation[i] == 0.0).collect();
        if let Some(weakest_unused) = unused.iter().map(|&i| a[i]).reduce(f64::min) {
            let mut extended = a.clone();
            extended.push(weakest_unused * (0.01 + 0.99 * frac));
            let r2 = solve(&ProblemInstance::new(extended).unwrap()).unwrap();
            prop_assert_eq!(r2.allocation[a.len()], 0.0);
            for &i in &unused {
                prop_assert_eq!(r2.allocation[i], 0.0);
            }
        }
    }

    #[test]
    fn first_violation_is_final(a in coefficients(30)) {
        let e = normalized_ratios(&ProblemInstance::new(a).unwrap());
        let e = e.as_slice();
        let mut prefix = e[0];
        let mut failed = false;
        for j in 2..=e.len() {
            let pass = j as f64 * e[j - 1] > prefix;
            prop_assert!(!(failed && pass), "condition recovered at j = {}", j);
            failed |= !pass;
            prefix += e[j - 1];
        }
    }

    #[test]
    fn forward_pass_matches_full_scan(a in coefficients(30)) {
        let e = normalized_ratios(&ProblemInstance::new(a).unwrap());
        prop_assert_eq!(active_set_size(&e), active_set_by_definition(e.as_slice()));
    }

    #[test]
    fn tied_coefficients_get_equal_shares(
        base in coefficients(8),
        copies in prop::collection::vec(1usize..4, 8),
    ) {
        let mut a = Vec::new();
        for (v, &c) in base.iter().zip(&copies) {
            a.extend(std::iter::repeat_n(*v, c));
        }
        let r = solve(&ProblemInstance::new(a.clone()).unwrap()).unwrap();
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                if a[i] == a[j] {
                    prop_assert!((r.allocation[i] - r.allocation[j]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn projection_is_feasible_and_idempotent(v in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let x = project_to_simplex(&v).unwrap();
        prop_assert!(x.as_slice().iter().all(|&t| t >= 0.0));
        let again = project_to_simplex(x.as_slice()).unwrap();
        prop_assert!(x.max_abs_diff(&again) <= 1e-12);
    }
}

#[test]
fn boundary_equality_inclusion_is_harmless() {
    // Each instance puts one ratio exactly on the k-rule boundary.
    for a in [vec![1.0, 0.25], vec![4.0, 1.0], vec![1.0, 1.0, 1.0, 0.5625]] {
        let p = ProblemInstance::new(a.clone()).unwrap();
        let e = normalized_ratios(&p);
        let k = active_set_size(&e);
        let without = closed_form_allocation(&e, k).unwrap();
        assert!(k < e.len());
        {
            let with = closed_form_allocation(&e, k + 1).unwrap();
            assert!(without.max_abs_diff(&with) <= 1e-12, "{a:?}");
            assert!(with[k].abs() <= 1e-12);
        }
    }
}
