use std::path::Path;
use std::process::ExitCode;

use serde_json::{json, Value};
use whopt::analysis::{asymptotic_agreement, check_little_o, check_positive_homogeneity, HOMOGENEITY_SCALES, LITTLE_O_SCALES};
use whopt::certificates::{certify_condition_a, certify_trivial_kernel, CertificateKind, CertifyConfig};
use whopt::expr::{parse_infix, SmoothFn};
use whopt::geometry::{ambient_check, convexity_midpoint_check, sphere_rays, validate_asymptotic_cone};
use whopt::kernel::{compute_problem_kernel, KernelClass};
use whopt::parametric::{closed_graph_check, grid_points, local_boundedness_probe, sweep, SweepRecord};
use whopt::problem::{parse_alpha, ProblemSpec};
use whopt::solver::{minty_check, solve_expanding, SolveStatus, SolverConfig};
use whopt::verdict::ValidationVerdict;
use whopt::Error;

use crate::report::{emit, error_value, exit_code, problem_value, Failure, Report, Verdict, EXIT_VALIDATION};
use crate::{AsymptoticOverride, Cli, Command, Global};

/// Realization scales used when validating an asymptotic cone.
const CONE_SCALES: [f64; 3] = [1e2, 1e3, 1e4];


pub fn parse_vector(text: &str, n: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Failure::bad_input(format!("{what}: expected comma-separated numbers, got {text:?}")))?;
    if v.len() != n {
        return Err(Failure::bad_input(format!("{what}: expected {n} entries, got {}", v.len())));
    }
    Ok(v)
}

pub fn parse_grid(text: &str, n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let axes: Vec<&str> = text.split(';').collect();
    if axes.len() != n {
        return Err(Failure::bad_input(format!("--grid: expected {n} axes separated by ';', got {}", axes.len())));
    }
    let axes = axes
        .iter()
        .map(|a| {
            let k = a.split(',').count();
            parse_vector(a, k, "--grid")
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(grid_points(&axes))
}

fn certify_config(g: &Global) -> CertifyConfig {
    CertifyConfig {
        resolution: g.resolution,
        delta: g.delta,
        radius: g.radius,
        seed: g.seed,
        solver: SolverConfig {
            k0: g.k0,
            max_doublings: g.max_doublings,
            restarts: g.restarts,
            ..SolverConfig::default()
        },
        ..CertifyConfig::default()
    }
}

fn with_override(p: ProblemSpec, o: &AsymptoticOverride) -> Result<ProblemSpec, Failure> {
    if o.h.is_none() && o.alpha_override.is_none() {
        return Ok(p);
    }
    let h = match &o.h {
        Some(text) => parse_infix(text).map_err(|e| Failure::bad_input(format!("--h: {e}")))?,
        None => p.asymptotic_fn().map_err(|e| Failure::bad_input(e.to_string()))?.expr().clone(),
    };
    let (alpha, text) = match &o.alpha_override {
        Some(a) => parse_alpha(&json!(a), "--alpha-override").map_err(|e| Failure::bad_input(e.to_string()))?,
        None => (p.alpha, p.alpha_text.clone()),
    };
    p.with_asymptotic(h, alpha, text).map_err(|e| Failure::bad_input(e.to_string()))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Kernel { .. } => "kernel",
        Command::Certify { .. } => "certify",
        Command::Solve { .. } => "solve",
        Command::Parametric { .. } => "parametric",
        Command::ProbeUsc { .. } => "probe-usc",
    }
}

type Outcome = Result<(Value, Verdict), Error>;

fn problem_path(c: &Command) -> &Path {
    match c {
        Command::Validate { problem, .. }
        | Command::Kernel { problem, .. }
        | Command::Certify { problem }
        | Command::Solve { problem, .. }
        | Command::Parametric { problem, .. }
        | Command::ProbeUsc { problem, .. } => problem,
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let g = &cli.global;
    let path = problem_path(&cli.command);
    let text = std::fs::read_to_string(path).map_err(|e| Failure::bad_input(format!("cannot read {}: {e}", path.display())))?;
    let cfg = certify_config(g);
    let mut config = json!(cfg);
    config["jobs"] = json!(g.jobs);
    let parsed = ProblemSpec::from_json_str(&text);
    config["seed"] = json!(g.seed.or(parsed.as_ref().ok().map(|p| p.seed)));
    let p = match parsed {
        Ok(p) => p,
        Err(e) => {
            // schema errors still get a report so the pointer is machine-readable
            let report = Report {
                command: command_name(&cli.command),
                problem: json!({"path": path.display().to_string()}),
                config,
            };
            let line = format!("error: {}: {e}", path.display());
            emit(g.out.as_deref(), &report.finish(("error", error_value(&e)), None), &line)?;
            return Ok(ExitCode::from(exit_code(&e)));
        }
    };
    let p = match &cli.command {
        Command::Validate { asymptotic, .. } | Command::Kernel { asymptotic, .. } => with_override(p, asymptotic)?,
        _ => p,
    };
    let report = Report {
        command: command_name(&cli.command),
        problem: problem_value(path, &p),
        config,
    };
    let outcome = match &cli.command {
        Command::Validate { .. } => validate(&p, &cfg),
        Command::Kernel { .. } => kernel(&p, &cfg),
        Command::Certify { .. } => certify(&p, &cfg),
        Command::Solve { u, .. } => {
            let u = match u {
                Some(t) => parse_vector(t, p.n, "--u")?,
                None => vec![0.0; p.n],
            };
            solve(&p, &u, &cfg)
        }
        Command::Parametric { grid, csv, timings, .. } => {
            let grid = parse_grid(grid, p.n)?;
            parametric(&p, &grid, &cfg, *timings, csv.as_deref())?
        }
        Command::ProbeUsc {
            center, radius, samples, ..
        } => {
            let c = parse_vector(center, p.n, "--center")?;
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Failure::bad_input("--radius must be positive"));
            }
            probe_usc(&p, &c, *radius, *samples, &cfg)
        }
    };
    match outcome {
        Ok((result, verdict)) => {
            let line = format!("{}: {}", verdict.status, verdict.summary);
            let code = if verdict.pass { 0 } else { EXIT_VALIDATION };
            emit(g.out.as_deref(), &report.finish(("result", result), Some(&verdict)), &line)?;
            Ok(ExitCode::from(code))
        }
        Err(e) => {
            let code = exit_code(&e);
            emit(g.out.as_deref(), &report.finish(("error", error_value(&e)), None), &format!("error: {e}"))?;
            Ok(ExitCode::from(code))
        }
    }
}

/// Runs a check, turning an error into a failing verdict.
fn checked(name: &str, r: Result<ValidationVerdict, Error>) -> Value {
    match r {
        Ok(v) => json!(v),
        Err(e) => json!({"check": name, "pass": false, "error": error_value(&e)}),
    }
}

fn labelled(mut v: ValidationVerdict, label: &str) -> ValidationVerdict {
    v.check = format!("{}[{label}]", v.check);
    v
}

fn validate(p: &ProblemSpec, cfg: &CertifyConfig) -> Outcome {
    let mut rng = p.rng(cfg.seed);
    let cone = p.set.asymptotic_cone()?;
    let mut checks = vec![
        checked("asymptotic_cone", validate_asymptotic_cone(&p.set, &cone, &CONE_SCALES).map_err(Error::from)),
        checked("ambient_containment", ambient_check(&p.set, &cone, &mut rng, cfg.samples, cfg.radius).map_err(Error::from)),
    ];
    let mut candidates: Vec<(String, &SmoothFn)> = Vec::new();
    if let Some(h) = &p.asymptotic {
        candidates.push(("h".into(), h));
    }
    for (i, a) in p.alternates.iter().enumerate() {
        candidates.push((format!("alternate {i}"), a));
    }
    for (label, h) in &candidates {
        let hom = check_positive_homogeneity(h.expr(), p.alpha, &p.set.ambient, &mut rng, cfg.samples, &HOMOGENEITY_SCALES);
        checks.push(checked("positive_homogeneity", hom.map(|v| labelled(v, label))));
        let lo = if cone.is_trivial() {
            Ok(ValidationVerdict::new("little_o", json!({"note": "asymptotic cone is {0}"})))
        } else {
            check_little_o(p.objective.expr(), h.expr(), p.alpha, &p.set, &cone, cfg.resolution, &LITTLE_O_SCALES)
        };
        checks.push(checked("little_o", lo.map(|v| labelled(v, label))));
    }
    if let Some(h) = &p.asymptotic {
        let rays = sphere_rays(&cone, cfg.resolution);
        for (i, a) in p.alternates.iter().enumerate() {
            let v = asymptotic_agreement(h.expr(), a.expr(), &rays);
            checks.push(json!(labelled(v, &format!("h vs alternate {i}"))));
        }
    }
    if p.set.convex {
        checks.push(json!(convexity_midpoint_check(&p.set, &mut rng, cfg.pairs, cfg.radius)));
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["pass"] != json!(true))
        .map(|c| c["check"].as_str().unwrap_or("?").to_string())
        .collect();
    let verdict = if failed.is_empty() {
        Verdict::new("pass", true, format!("{} checks passed", checks.len()))
    } else {
        Verdict::new("fail", false, format!("failed: {}", failed.join(", ")))
    };
    Ok((json!({"asymptotic_cone": cone, "checks": checks}), verdict))
}

fn kernel(p: &ProblemSpec, cfg: &CertifyConfig) -> Outcome {
    let r = compute_problem_kernel(p, cfg.resolution)?;
    let summary = match r.classification {
        KernelClass::Trivial => format!("trivial kernel, sphere minimum {}", r.sphere_min),
        KernelClass::Nontrivial => format!("nontrivial kernel with {} representative rays {:?}", r.rays.len(), r.rays),
        KernelClass::Empty => format!("empty kernel, sphere minimum {}", r.sphere_min),
    };
    let status = format!("{:?}", r.classification);
    Ok((json!({"kernel": r, "asymptotic": p.asymptotic.as_ref().map(|h| h.expr().to_string()), "alpha": p.alpha_text}), Verdict::new(status, true, summary)))
}

fn certify(p: &ProblemSpec, cfg: &CertifyConfig) -> Outcome {
    let trivial = certify_trivial_kernel(p, cfg)?;
    let nontrivial = trivial.kernel.as_ref().is_some_and(|k| k.classification == KernelClass::Nontrivial);
    let mut result = json!({"trivial_kernel": trivial});
    let mut best = (trivial.kind, trivial.conclusion.clone());
    if nontrivial {
        match certify_condition_a(p, cfg) {
            Ok(c) => {
                best = (c.kind, c.conclusion.clone());
                result["condition_a"] = json!(c);
            }
            Err(e @ Error::SearchInconclusive { .. }) => result["condition_a"] = json!({"error": error_value(&e)}),
            Err(e) => return Err(e),
        }
    }
    let status = format!("{:?}", best.0);
    let summary = if best.0 == CertificateKind::NotCertified {
        format!("not certified: {}", best.1)
    } else {
        best.1
    };
    Ok((result, Verdict::new(status, true, summary)))
}

fn solve(p: &ProblemSpec, u: &[f64], cfg: &CertifyConfig) -> Outcome {
    if u.iter().any(|&c| c != 0.0) {
        p.require_parametric_degree()?;
    }
    let kernel = compute_problem_kernel(p, cfg.resolution).ok();
    let o = solve_expanding(p, u, &cfg.solver, kernel.as_ref())?;
    let mut result = json!({"outcome": o});
    let summary = match o.status {
        SolveStatus::Converged => {
            let x = o.x.as_ref().expect("converged outcomes carry a point");
            let f_u = p.shifted_objective(u)?;
            result["minty"] = json!(minty_check(&f_u, &p.set, x, 500, &mut p.rng(cfg.seed)));
            format!("converged to {x:?} with value {}", o.value.unwrap_or(f64::NAN))
        }
        SolveStatus::Escaping => {
            let d = o.escape_direction.as_deref().unwrap_or(&[]);
            match o.kernel_distance {
                Some(k) => format!("escaping along {d:?} (kernel distance {k})"),
                None => format!("escaping along {d:?}"),
            }
        }
        SolveStatus::Indeterminate => format!("indeterminate after radius {}", o.final_radius),
    };
    Ok((result, Verdict::new(format!("{:?}", o.status), true, summary)))
}

fn write_csv(path: &Path, records: &[SweepRecord]) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::bad_input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    let n = records.first().map_or(0, |r| r.u.len());
    let mut header: Vec<String> = (1..=n).map(|i| format!("u{i}")).collect();
    header.extend(["label", "status", "kernel_margin", "norm", "value"].map(String::from));
    w.write_record(&header).map_err(fail)?;
    let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        let mut row: Vec<String> = r.u.iter().map(f64::to_string).collect();
        row.push(json!(r.label).as_str().unwrap_or_default().to_string());
        row.push(format!("{:?}", r.status));
        row.push(num(r.kernel_margin));
        row.push(num(r.norm));
        row.push(num(r.value));
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::bad_input(format!("cannot write {}: {e}", path.display())))
}

fn parametric(p: &ProblemSpec, grid: &[Vec<f64>], cfg: &CertifyConfig, timings: bool, csv: Option<&Path>) -> Result<Outcome, Failure> {
    let records = match sweep(p, grid, cfg, timings) {
        Ok(r) => r,
        Err(e) => return Ok(Err(e)),
    };
    if let Some(path) = csv {
        write_csv(path, &records)?;
    }
    let count = |label: &str| records.iter().filter(|r| json!(r.label) == json!(label)).count();
    let summary = format!(
        "{} shifts: {} certified, {} unbounded, {} solved-only, {} escaping, {} indeterminate",
        records.len(),
        count("certified"),
        count("unbounded-solution-set"),
        count("solved-only"),
        count("escaping"),
        count("indeterminate")
    );
    let details: Vec<Value> = records.iter().map(|r| json!(r.certificate)).collect();
    Ok(Ok((json!({"records": records, "certificates": details}), Verdict::new("swept", true, summary))))
}

fn probe_usc(p: &ProblemSpec, center: &[f64], radius: f64, samples: usize, cfg: &CertifyConfig) -> Outcome {
    let mut rng = p.rng(cfg.seed);
    let bounded = local_boundedness_probe(p, center, radius, samples, &cfg.solver, &mut rng)?;
    let kernel = compute_problem_kernel(p, cfg.resolution).ok();
    let mut sequence = Vec::new();
    for k in 1..=6 {
        let mut u = center.to_vec();
        u[0] += radius / k as f64;
        let o = solve_expanding(p, &u, &cfg.solver, kernel.as_ref())?;
        if let Some(x) = o.x {
            sequence.push((u, x));
        }
    }
    let at_center = solve_expanding(p, center, &cfg.solver, kernel.as_ref())?;
    let closed = match (&at_center.x, sequence.len()) {
        (Some(x_bar), 6) => Some(closed_graph_check(p, &sequence, center, x_bar, &mut rng)?),
        _ => None,
    };
    let summary = match (&bounded.claim, &closed) {
        (Some(c), Some(v)) => format!("{c}; closed graph {}", if v.pass { "passed" } else { "failed" }),
        (Some(c), None) => format!("{c}; closed graph not checked (a solve did not converge)"),
        (None, _) => "mixed outcomes over the sampled ball; no claim".to_string(),
    };
    let status = if bounded.unbounded {
        "unbounded"
    } else if bounded.sup_norm.is_some() && closed.as_ref().is_some_and(|v| v.pass) {
        "bounded-closed"
    } else {
        "inconclusive"
    };
    Ok((json!({"local_boundedness": bounded, "closed_graph": closed}), Verdict::new(status, true, summary)))
}
