//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes plain strings or numbers and returns a JSON document.
//! The logic lives in ordinary functions so it can be tested natively.

use equimarginal::oracles::{cross_validate, Method, OracleSettings, GRID_MAX_SIZE};
use equimarginal::{
    evaluate_objective, kkt_check, marginal_utilities, solve, two_cup_solution, Allocation,
    KktTolerances, ProblemInstance,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct SolveView {
    input: Vec<f64>,
    allocation: Vec<f64>,
    marginals: Vec<f64>,
    active_count: usize,
    objective: f64,
    lambda: f64,
    kkt_passed: bool,
}

#[derive(Serialize)]
struct CurvePoint {
    share: f64,
    objective: f64,
}

#[derive(Serialize)]
struct CurveView {
    a1: f64,
    a2: f64,
    points: Vec<CurvePoint>,
    best_share: f64,
    best_objective: f64,
    second_cup_used: bool,
}

#[derive(Serialize)]
struct MethodView {
    method: &'static str,
    objective: f64,
    allocation: Vec<f64>,
    converged: bool,
}

#[derive(Serialize)]
struct VerifyView {
    passed: bool,
    tolerance: f64,
    max_gap: f64,
    methods: Vec<MethodView>,
}

fn parse_list(text: &str) -> Result<ProblemInstance, String> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("invalid number '{t}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("enter at least one coefficient".into());
    }
    ProblemInstance::new(values).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view serializes")
}

pub fn solve_view(text: &str) -> Result<String, String> {
    let p = parse_list(text)?;
    let r = solve(&p).map_err(|e| e.to_string())?;
    let kkt = kkt_check(&p, &r.allocation, KktTolerances::default()).map_err(|e| e.to_string())?;
    let marginals = marginal_utilities(&p, &r.allocation).map_err(|e| e.to_string())?;
    Ok(to_json(&SolveView {
        input: p.coefficients().to_vec(),
        allocation: r.allocation.into_vec(),
        marginals,
        active_count: r.active_count,
        objective: r.objective,
        lambda: r.lambda,
        kkt_passed: kkt.passed,
    }))
}

/// Samples the two-cup return along `x = (t, 1 - t)` and marks the optimum.
pub fn curve_view(a1: f64, a2: f64, steps: usize) -> Result<String, String> {
    if !(2..=10_000).contains(&steps) {
        return Err("steps must be between 2 and 10000".into());
    }
    let p = ProblemInstance::new(vec![a1, a2]).map_err(|e| e.to_string())?;
    let points = (0..=steps)
        .map(|i| {
            let share = i as f64 / steps as f64;
            let x = Allocation::normalized(vec![share, 1.0 - share]).map_err(|e| e.to_string())?;
            let objective = evaluate_objective(&p, &x).map_err(|e| e.to_string())?;
            Ok(CurvePoint { share, objective })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let r = solve(&p).map_err(|e| e.to_string())?;
    let (hi, lo) = if a1 >= a2 { (a1, a2) } else { (a2, a1) };
    let (_, x_lo) = two_cup_solution(hi, lo).map_err(|e| e.to_string())?;
    Ok(to_json(&CurveView {
        a1,
        a2,
        points,
        best_share: r.allocation[0],
        best_objective: r.objective,
        second_cup_used: x_lo > 0.0,
    }))
}

/// Cross-checks the closed form against the numerical oracles.
/// The grid oracle joins only for instances of at most four cups.
pub fn verify_view(text: &str, tol: f64) -> Result<String, String> {
    let p = parse_list(text)?;
    let mut methods = vec![Method::LambdaBisection, Method::ProjectedGradient];
    if p.len() <= GRID_MAX_SIZE {
        methods.push(Method::GridSearch);
    }
    let settings = OracleSettings {
        grid_resolution: if p.len() <= 3 { 1e-3 } else { 1e-2 },
        ..OracleSettings::default()
    };
    let report = cross_validate(&p, &methods, tol, &settings).map_err(|e| e.to_string())?;
    Ok(to_json(&VerifyView {
        passed: report.passed,
        tolerance: report.tolerance,
        max_gap: report.max_objective_gap(),
        methods: report
            .outcomes
            .into_iter()
            .map(|o| MethodView {
                method: o.method.name(),
                objective: o.objective,
                allocation: o.allocation.into_vec(),
                converged: o.converged,
            })
            .collect(),
    }))
}

#[wasm_bindgen]
pub fn solve_json(coefficients: &str) -> Result<String, JsError> {
    solve_view(coefficients).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn two_cup_curve(a1: f64, a2: f64, steps: usize) -> Result<String, JsError> {
    curve_view(a1, a2, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify_json(coefficients: &str, tol: f64) -> Result<String, JsError> {
    verify_view(coefficients, tol).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn solve_accepts_commas_and_spaces() {
        let v = parse(&solve_view("0.8, 0.4 0.25").unwrap());
        assert_eq!(v["active_count"], 2);
        assert_eq!(v["allocation"][2], 0.0);
        assert_eq!(v["kkt_passed"], true);
    }

    #[test]
    fn solve_rejects_bad_input() {
        assert!(solve_view("").unwrap_err().contains("at least one"));
        assert!(solve_view("0.8,abc").unwrap_err().contains("'abc'"));
        assert!(solve_view("0.8,-0.1").is_err());
    }

    #[test]
    fn curve_peak_matches_solver() {
        let v = parse(&curve_view(0.8, 0.25, 1000).unwrap());
        let points = v["points"].as_array().unwrap();
        assert_eq!(points.len(), 1001);
        let best = v["best_objective"].as_f64().unwrap();
        for pt in points {
            assert!(pt["objective"].as_f64().unwrap() <= best + 1e-12);
        }
        assert!((v["best_share"].as_f64().unwrap() - 0.924289).abs() < 1e-6);
        assert_eq!(v["second_cup_used"], true);
    }

    #[test]
    fn curve_below_threshold_keeps_one_cup() {
        let v = parse(&curve_view(0.2, 1.0, 50).unwrap());
        assert_eq!(v["second_cup_used"], false);
        assert_eq!(v["best_share"], 0.0);
        assert!(curve_view(1.0, 0.5, 1).is_err());
    }

    #[test]
    fn verify_small_and_large() {
        let v = parse(&verify_view("0.8,0.4,0.25", 1e-5).unwrap());
        assert_eq!(v["passed"], true);
        assert_eq!(v["methods"].as_array().unwrap().len(), 4);
        let v = parse(&verify_view("0.9,0.8,0.7,0.6,0.5", 1e-5).unwrap());
        assert_eq!(v["passed"], true);
        assert_eq!(v["methods"].as_array().unwrap().len(), 3);
    }
}
