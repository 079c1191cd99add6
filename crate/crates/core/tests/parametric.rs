mod common;

use common::problem;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use whopt::certificates::CertifyConfig;
use whopt::expr::parse_infix;
use whopt::parametric::{
    closed_graph_check, grid_points, local_boundedness_probe, perturbation_inclusion_test, sweep, ExistenceLabel,
};
use whopt::solver::{SolveStatus, SolverConfig};
use whopt::Error;

#[test]
fn strip_sweep_matches_the_kernel_polar() {
    let p = problem("ex2.json");
    let grid = grid_points(&[vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0], vec![-1.0, 0.0, 1.0]]);
    let records = sweep(&p, &grid, &CertifyConfig::default(), false).unwrap();
    assert_eq!(records.len(), 18);
    for r in &records {
        let interior = r.u[0] < 0.0;
        assert_eq!(r.kernel_margin.unwrap() > 0.0, interior, "{:?}", r.u);
        if interior {
            assert_eq!(r.status, SolveStatus::Converged);
            assert!(r.norm.unwrap() < r.final_radius);
            assert_eq!(r.label, ExistenceLabel::Certified);
        }
    }
    // same grid and seed, same records
    let again = sweep(&p, &grid, &CertifyConfig::default(), false).unwrap();
    assert_eq!(serde_json::to_string(&records).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn quartic_sweep_closed_forms() {
    let p = problem("quartic.json");
    let records = sweep(&p, &[vec![4.0, 4.0], vec![-1.0, -1.0]], &CertifyConfig::default(), false).unwrap();
    assert!((records[0].value.unwrap() + 6.0).abs() < 1e-6);
    assert_eq!(records[1].value.unwrap(), 0.0);
    assert!(records.iter().all(|r| r.label == ExistenceLabel::Certified));
}

#[test]
fn quartic_is_locally_bounded() {
    let p = problem("quartic.json");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = local_boundedness_probe(&p, &[4.0, 4.0], 0.5, 16, &SolverConfig::default(), &mut rng).unwrap();
    assert!(!r.unbounded);
    let bound = (4.5f64 / 4.0).cbrt() * 2f64.sqrt();
    assert!(r.sup_norm.unwrap() <= bound + 1e-6, "{r:?}");
}

#[test]
fn strip_local_boundedness() {
    let p = problem("ex2.json");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = local_boundedness_probe(&p, &[-1.0, 0.0], 0.25, 8, &SolverConfig::default(), &mut rng).unwrap();
    assert!(r.sup_norm.is_some_and(f64::is_finite), "{r:?}");
}

fn quartic_minimizer(u: &[f64]) -> Vec<f64> {
    u.iter().map(|c| (c.max(0.0) / 4.0).cbrt()).collect()
}

#[test]
fn closed_graph_on_quartic_sequence() {
    let p = problem("quartic.json");
    let seq: Vec<(Vec<f64>, Vec<f64>)> = (1..=6)
        .map(|k| {
            let u = vec![4.0 + 1.0 / k as f64, 4.0];
            let x = quartic_minimizer(&u);
            (u, x)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let v = closed_graph_check(&p, &seq, &[4.0, 4.0], &[1.0, 1.0], &mut rng).unwrap();
    assert!(v.pass, "{v:?}");
    let v = closed_graph_check(&p, &seq, &[4.0, 4.0], &[1.1, 1.0], &mut rng).unwrap();
    assert!(!v.pass);
}

#[test]
fn closed_graph_on_strip_sequence() {
    let p = problem("ex2.json");
    let cfg = CertifyConfig::default();
    let us: Vec<Vec<f64>> = (1..=4).map(|k| vec![-1.0 - 1.0 / k as f64, 0.0]).collect();
    let records = sweep(&p, &us, &cfg, false).unwrap();
    let seq: Vec<(Vec<f64>, Vec<f64>)> = records
        .iter()
        .map(|r| (r.u.clone(), r.certificate.as_ref().unwrap().solve.x.clone().unwrap()))
        .collect();
    let limit = sweep(&p, &[vec![-1.0, 0.0]], &cfg, false).unwrap();
    let x_bar = limit[0].certificate.as_ref().unwrap().solve.x.clone().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let v = closed_graph_check(&p, &seq, &[-1.0, 0.0], &x_bar, &mut rng).unwrap();
    assert!(v.pass, "{v:?}");
}

#[test]
fn perturbed_minimizers_point_into_the_kernel() {
    let p = problem("perturbed_cone.json");
    let q = parse_infix("-2*sqrt(x1)").unwrap();
    let v = perturbation_inclusion_test(&p, &[q], 90).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.table.unwrap().as_array().unwrap().iter().any(|r| r["kernel_distance"].is_number()));
    let v = perturbation_inclusion_test(&p, &[parse_infix("0").unwrap()], 90).unwrap();
    assert!(v.pass);
    assert_eq!(v.statistic, 0.0);
}

#[test]
fn inclusion_needs_a_cone() {
    let r = perturbation_inclusion_test(&problem("ex2.json"), &[], 90);
    assert!(matches!(r, Err(Error::ConePrecondition)));
}
