mod common;

use common::problem;
use whopt::kernel::{compute_problem_kernel, DEFAULT_RESOLUTION};
use whopt::solver::{solve_expanding, solve_truncated, SolveStatus, SolverConfig};

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn disk_and_ray_truncation() {
    let p = problem("ex1.json");
    let s = solve_truncated(&p.objective, &p.set, 10.0, &[], &SolverConfig::default()).unwrap();
    assert!(close(&s.x, &[1.0, 0.0], 1e-6), "{s:?}");
    assert!((s.value - 1.0).abs() < 1e-6);
}

#[test]
fn disk_and_ray_converges() {
    let p = problem("ex1.json");
    let o = solve_expanding(&p, &[0.0, 0.0], &SolverConfig::default(), None).unwrap();
    assert_eq!(o.status, SolveStatus::Converged, "{o:?}");
    assert!(close(o.x.as_ref().unwrap(), &[1.0, 0.0], 1e-4));
    assert!((o.value.unwrap() - 1.0).abs() < 1e-6);
    assert!(o.trace.len() < 5);
}

#[test]
fn hyperbola_strip_plain_and_shifted() {
    let p = problem("ex2.json");
    let s = solve_truncated(&p.objective, &p.set, 100.0, &[], &SolverConfig::default()).unwrap();
    assert!(close(&s.x, &[16.0, 16.0], 1e-4), "{s:?}");
    let o = solve_expanding(&p, &[0.0, 0.0], &SolverConfig::default(), None).unwrap();
    assert_eq!(o.status, SolveStatus::Converged);
    assert!((o.value.unwrap() - 896.0).abs() < 1e-6, "{o:?}");
    // f + x1 is minimized at (15, 16) with value 911.5
    let o = solve_expanding(&p, &[-1.0, 0.0], &SolverConfig::default(), None).unwrap();
    assert_eq!(o.status, SolveStatus::Converged);
    assert!(close(o.x.as_ref().unwrap(), &[15.0, 16.0], 1e-4), "{o:?}");
    assert!((o.value.unwrap() - 911.5).abs() < 1e-6);
    assert!(o.trace.windows(2).all(|w| w[1].value <= w[0].value));
}

#[test]
fn linear_descent_escapes_along_e1() {
    let p = problem("escaping.json");
    let k = compute_problem_kernel(&p, DEFAULT_RESOLUTION).unwrap();
    let o = solve_expanding(&p, &[0.0, 0.0], &SolverConfig::default(), Some(&k)).unwrap();
    assert_eq!(o.status, SolveStatus::Escaping, "{o:?}");
    assert!(close(o.escape_direction.as_ref().unwrap(), &[1.0, 0.0], 1e-6));
    assert!(o.kernel_distance.unwrap() < 1e-6);
    assert!(o.asymptotic_value.unwrap() <= 1e-6);
}

#[test]
fn quartic_closed_forms() {
    let p = problem("quartic.json");
    let o = solve_expanding(&p, &[4.0, 4.0], &SolverConfig::default(), None).unwrap();
    assert_eq!(o.status, SolveStatus::Converged);
    assert!(close(o.x.as_ref().unwrap(), &[1.0, 1.0], 1e-4), "{o:?}");
    assert!((o.value.unwrap() + 6.0).abs() < 1e-6);
    let o = solve_expanding(&p, &[-1.0, -1.0], &SolverConfig::default(), None).unwrap();
    assert_eq!(o.x.unwrap(), vec![0.0, 0.0]);
    assert_eq!(o.value.unwrap(), 0.0);
}
