mod common;

use common::problem;
use whopt::certificates::{
    certify_condition_a, certify_parametric, certify_trivial_kernel, domain_interior_contains, CertificateKind,
    CertifyConfig,
};
use whopt::kernel::KernelClass;
use whopt::solver::SolveStatus;
use whopt::Error;

fn cfg() -> CertifyConfig {
    CertifyConfig::default()
}

#[test]
fn disk_and_ray_has_trivial_kernel_certificate() {
    let c = certify_trivial_kernel(&problem("ex1.json"), &cfg()).unwrap();
    assert_eq!(c.kind, CertificateKind::TrivialKernel, "{}", c.conclusion);
    assert!(c.hypotheses.iter().all(|h| h.pass));
    assert!((c.margin() - 1.0).abs() < 1e-9);
}

#[test]
fn hyperbola_strip_is_not_trivial_but_meets_condition_a() {
    let p = problem("ex2.json");
    let c = certify_trivial_kernel(&p, &cfg()).unwrap();
    assert_eq!(c.kind, CertificateKind::NotCertified);
    assert_eq!(c.kernel.unwrap().classification, KernelClass::Nontrivial);
    let a = certify_condition_a(&p, &cfg()).unwrap();
    assert_eq!(a.kind, CertificateKind::PseudoconvexConditionA, "{a:#?}");
    for w in &a.witnesses {
        assert!(w.margin >= 0.5, "{w:?}");
        assert!(w.fd_margin.unwrap() >= 0.5 * cfg().delta);
    }
}

#[test]
fn condition_a_refuses_trivial_kernels() {
    assert!(matches!(
        certify_condition_a(&problem("ex1.json"), &cfg()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn flat_objective_has_unbounded_solution_set() {
    let c = certify_condition_a(&problem("flat_ray.json"), &cfg()).unwrap();
    assert_eq!(c.kind, CertificateKind::UnboundedSolutionSet, "{c:#?}");
    let w = &c.witnesses[0];
    assert!((w.ray[0] - 1.0).abs() < 1e-9 && w.ray[1].abs() < 1e-9);
}

#[test]
fn empty_kernel_concludes_no_solutions() {
    let c = certify_trivial_kernel(&problem("empty_kernel.json"), &cfg()).unwrap();
    assert_eq!(c.kind, CertificateKind::NotCertified);
    assert!(c.conclusion.contains("Sol(K,f) = ∅"));
}

#[test]
fn domain_route_on_the_strip() {
    let p = problem("ex2.json");
    for u in [[-1.0, -100.0], [1.0, 0.0]] {
        let c = domain_interior_contains(&p, &u, &cfg()).unwrap();
        assert_eq!(c.kind, CertificateKind::DomainInterior, "{u:?}: {}", c.conclusion);
        assert!(c.margin() >= 1e-3);
        assert!(c.witnesses.iter().all(|w| w.fd_margin.unwrap() >= 0.5 * cfg().delta));
    }
}

#[test]
fn parametric_routes_on_the_strip() {
    let p = problem("ex2.json");
    let c = certify_parametric(&p, &[-1.0, 0.0], &cfg()).unwrap();
    assert_eq!(c.kernel_route.kind, CertificateKind::KernelPolarRoute);
    assert!((c.kernel_margin.unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(c.solve.status, SolveStatus::Converged);
    let c = certify_parametric(&p, &[1.0, 0.0], &cfg()).unwrap();
    assert_eq!(c.kernel_route.kind, CertificateKind::NotCertified);
    assert_eq!(c.domain_route.kind, CertificateKind::DomainInterior);
    assert_eq!(c.solve.status, SolveStatus::Converged);
}

#[test]
fn parametric_needs_degree_above_one() {
    assert!(matches!(
        certify_parametric(&problem("ex1.json"), &[0.0, 0.0], &cfg()),
        Err(Error::DegreeTooSmall { .. })
    ));
}
