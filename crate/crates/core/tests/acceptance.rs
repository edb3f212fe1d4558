//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p rps-ocp --test acceptance -- 1 8`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rps_ocp::cli::{run_decay, ExperimentConfig, FineReference};
use rps_ocp::coeff::{constant, CoefficientField};
use rps_ocp::fem::{
    assemble_load, assemble_stiffness, error_norms, solve_dirichlet, ControlOperator, DofMap, FineOperators,
};
use rps_ocp::homog::{
    build_measurements, compute_global_basis, compute_local_basis, default_layers, galerkin_solve, linear_fit,
    BasisKind,
};
use rps_ocp::mesh::MeshHierarchy;
use rps_ocp::ocp::{
    assemble_coarse, default_desired, mass_norm, solve_ocp, solve_ocp_with_history, weighted_mean, AdmissibleSet,
    DesiredState, OcpProblem, SolverOptions,
};

type Outcome = Result<String, String>;

const TRIG: &str = "trig";
const CHANNEL: &str = "channel:1e4";
const SWEEP_NC: [usize; 3] = [8, 16, 32];
const FINE_CELLS: usize = 256;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, outcome: Outcome) -> Outcome {
    let t = elapsed.as_secs_f64();
    match outcome {
        Ok(d) if t <= limit_s => Ok(format!("{d}; {t:.1}s (limit {limit_s}s)")),
        Ok(d) => Err(format!("{d}; runtime {t:.1}s exceeds {limit_s}s")),
        Err(d) => Err(format!("{d}; {t:.1}s")),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn config(coefficient: &str) -> ExperimentConfig {
    ExperimentConfig {
        coefficient: coefficient.into(),
        nc: SWEEP_NC.to_vec(),
        fine_cells: Some(FINE_CELLS),
        ..ExperimentConfig::default()
    }
}

fn coefficient(spec: &str) -> CoefficientField {
    config(spec).coefficient_field().expect("valid coefficient")
}

/// Least-squares slope of `log e` against `log H`.
fn rate(hs: &[f64], es: &[f64]) -> f64 {
    let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Degree-5, 7-point triangle rule (barycentric points, weights summing to one).
const QUAD: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059715871789770, 0.470142064105115, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.059715871789770, 0.470142064105115], 0.132394152788506),
    ([0.470142064105115, 0.470142064105115, 0.059715871789770], 0.132394152788506),
    ([0.797426985353087, 0.101286507323456, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.797426985353087, 0.101286507323456], 0.125939180544827),
    ([0.101286507323456, 0.101286507323456, 0.797426985353087], 0.125939180544827),
];

/// `‖z_h − z‖_{L²}` by high-order quadrature, independent of the assembly code.
fn l2_error(mesh: &MeshHierarchy, nodal: &[f64], exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for (t, tri) in mesh.fine.triangles.iter().enumerate() {
        let v = mesh.fine.vertices(t);
        let area = mesh.fine.area(t);
        for (b, w) in QUAD {
            let x = b[0] * v[0][0] + b[1] * v[1][0] + b[2] * v[2][0];
            let y = b[0] * v[0][1] + b[1] * v[1][1] + b[2] * v[2][1];
            let zh = b[0] * nodal[tri[0]] + b[1] * nodal[tri[1]] + b[2] * nodal[tri[2]];
            sum += w * area * (zh - exact(x, y)).powi(2);
        }
    }
    sum.sqrt()
}

/// Manufactured solution `sin(πx) sin(πy)` for `a ≡ 1`.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let exact = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let one = constant(1.0).map_err(err)?;
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    for n in [16, 32, 64] {
        let mesh = MeshHierarchy::unit_square(n, 0).map_err(err)?;
        let a = assemble_stiffness(&mesh, &one).map_err(err)?;
        let b = assemble_load(&mesh, |x, y| 2.0 * PI * PI * exact(x, y));
        let z = solve_dirichlet(&a, &b).map_err(err)?;
        let full = DofMap::interior(&mesh).extend(&z);
        // ‖sin(πx) sin(πy)‖ = 1/2 on the unit square.
        errors.push(l2_error(&mesh, &full, exact) / 0.5);
        hs.push(1.0 / n as f64);
    }
    let order = rate(&hs, &errors);
    let pairwise: Vec<String> = errors
        .windows(2)
        .map(|w| format!("{:.3}", (w[0] / w[1]).log2()))
        .collect();
    let outcome = ensure(
        (order - 2.0).abs() <= 0.2,
        format!(
            "L2 errors {:.3e} {:.3e} {:.3e}, fitted order {order:.3} (pairwise {})",
            errors[0],
            errors[1],
            errors[2],
            pairwise.join(", ")
        ),
    );
    within(start.elapsed(), 10.0, outcome)
}

/// `‖u‖²_A = ‖Iu‖²_A + ‖u − Iu‖²_A` with `Iu = Σ (Cu)_i φ_i`.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mesh = MeshHierarchy::unit_square(8, 2).map_err(err)?;
    let a = assemble_stiffness(&mesh, &coefficient(TRIG)).map_err(err)?;
    let meas = build_measurements(&mesh, BasisKind::Grps);
    let basis = compute_global_basis(&mesh, &a, &meas).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u: Vec<f64> = (0..a.nrows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let iu = basis.prolong(&meas.apply(&u));
        let rest: Vec<f64> = u.iter().zip(&iu).map(|(x, y)| x - y).collect();
        let lhs = a.quadratic_form(&u);
        let rhs = a.quadratic_form(&iu) + a.quadratic_form(&rest);
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    let outcome = ensure(worst <= 1e-8, format!("max relative defect {worst:.3e} over 100 vectors"));
    within(start.elapsed(), 60.0, outcome)
}

/// Constraint defects of global and localized RPS/GRPS bases at `Nc = 8, J = 2`.
fn small_basis_defects(coeff: &CoefficientField) -> Result<(f64, usize), String> {
    let mesh = MeshHierarchy::unit_square(8, 2).map_err(err)?;
    let dofs = DofMap::interior(&mesh);
    let a = assemble_stiffness(&mesh, coeff).map_err(err)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for kind in [BasisKind::Rps, BasisKind::Grps] {
        let meas = build_measurements(&mesh, kind);
        let global = compute_global_basis(&mesh, &a, &meas).map_err(err)?;
        worst = worst.max(global.constraint_defect(&meas));
        count += global.len();
        for l in [1, 2, 3, default_layers(8)] {
            let local = compute_local_basis(&mesh, &dofs, &a, &meas, l).map_err(|e| format!("{kind} l={l}: {e}"))?;
            worst = worst.max(local.constraint_defect(&meas));
            count += local.len();
        }
    }
    Ok((worst, count))
}

fn criterion_3(coeff: &CoefficientField, sweep: &Sweep) -> Outcome {
    let (small, count) = small_basis_defects(coeff)?;
    let worst = small.max(sweep.max_defect);
    ensure(
        worst <= 1e-8,
        format!(
            "max |C phi_i - e_i| = {worst:.3e} over {} basis vectors (RPS/GRPS global+local at Nc=8, plus {} localized GRPS sweep vectors)",
            count + sweep.vectors,
            sweep.vectors
        ),
    )
}

/// Tail-energy decay of a central global GRPS function and truncation ratios.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        nc: vec![16],
        refine: 2,
        fine_cells: None,
        layers: (1..=7).collect(),
        ..config(TRIG)
    };
    let report = run_decay(&cfg, 16, BasisKind::Grps).map_err(err)?;
    let h = 1.0 / 16.0;
    let (rs, logs): (Vec<f64>, Vec<f64>) = report
        .profile
        .iter()
        .filter(|p| p.radius >= 2.0 * h - 1e-12 && p.radius <= 8.0 * h + 1e-12 && p.tail_fraction > 0.0)
        .map(|p| (p.radius, p.tail_fraction.ln()))
        .unzip();
    if rs.len() < 3 {
        return Err(format!("only {} usable radii in [2H, 8H]", rs.len()));
    }
    let (_, slope, r2) = linear_fit(&rs, &logs);
    let beta = -slope;
    let d = |l: usize| report.truncation.iter().find(|t| t.0 == l).map(|t| t.1).unwrap();
    let ratios: Vec<f64> = [1, 3, 5].iter().map(|&l| d(l) / d(l + 2)).collect();
    let ok = beta > 0.0 && r2 >= 0.9 && ratios.iter().all(|&r| r >= 2.0);
    let outcome = ensure(
        ok,
        format!(
            "beta = {beta:.3} (per unit length, {:.3} per H), R^2 = {r2:.4}; truncation ratios d(l)/d(l+2) for l=1,3,5: {:.2}, {:.2}, {:.2}",
            beta * h,
            ratios[0],
            ratios[1],
            ratios[2]
        ),
    );
    within(start.elapsed(), 300.0, outcome)
}

/// Per-`Nc` results of the localized GRPS sweep at fixed `h = 1/256`.
struct NcResult {
    nc: usize,
    h: f64,
    combined: Vec<(usize, f64)>,
    all_converged: bool,
    elliptic_h1: Option<f64>,
}

struct Sweep {
    results: Vec<NcResult>,
    max_defect: f64,
    vectors: usize,
    total: Duration,
    elliptic_time: Duration,
}

/// Builds localized bases for every `l` in `layers(nc)`, solving the coarse
/// control problem for each and the elliptic problem at the default depth.
fn run_sweep(spec: &str, layers: impl Fn(usize) -> Vec<usize>) -> Result<Sweep, String> {
    let start = Instant::now();
    let cfg = config(spec);
    let mut results = Vec::new();
    let mut max_defect = 0.0f64;
    let mut vectors = 0;
    let mut elliptic_time = Duration::ZERO;
    for nc in SWEEP_NC {
        let t_ref = Instant::now();
        let reference = FineReference::build(&cfg, nc).map_err(err)?;
        let ref_time = t_ref.elapsed();
        if !reference.solution.converged {
            return Err(format!("fine reference at Nc={nc} did not converge"));
        }
        let fine = &reference.fine;
        let meas = build_measurements(&reference.mesh, BasisKind::Grps);
        let load = assemble_load(&reference.mesh, |_, _| 1.0);
        let z = solve_dirichlet(&fine.stiffness, &load).map_err(err)?;
        let target = default_layers(nc);
        let mut combined = Vec::new();
        let mut all_converged = true;
        let mut elliptic_h1 = None;
        for l in layers(nc) {
            let t = Instant::now();
            let (basis, _, record) = reference
                .coarse_run(&cfg, BasisKind::Grps, l)
                .map_err(|e| format!("Nc={nc} l={l}: {e}"))?;
            max_defect = max_defect.max(basis.constraint_defect(&meas));
            vectors += basis.len();
            combined.push((l, record.combined));
            all_converged &= record.converged;
            if l == target {
                let zh = galerkin_solve(&basis, &fine.stiffness, &load).map_err(err)?;
                elliptic_h1 = Some(error_norms(&z, &zh, &fine.norms).map_err(err)?.h1);
                elliptic_time += t.elapsed() + ref_time;
            }
            eprintln!(
                "  [{spec}] Nc={nc} l={l}: combined {:.4e} ({:.1}s)",
                record.combined,
                t.elapsed().as_secs_f64()
            );
        }
        results.push(NcResult {
            nc,
            h: reference.mesh.coarse_h(),
            combined,
            all_converged,
            elliptic_h1,
        });
    }
    Ok(Sweep {
        results,
        max_defect,
        vectors,
        total: start.elapsed(),
        elliptic_time,
    })
}

fn criterion_5(sweep: &Sweep) -> Outcome {
    let hs: Vec<f64> = sweep.results.iter().map(|r| r.h).collect();
    let es: Vec<f64> = sweep.results.iter().map(|r| r.elliptic_h1.unwrap_or(f64::NAN)).collect();
    let fitted = rate(&hs, &es);
    let listing: Vec<String> = sweep
        .results
        .iter()
        .zip(&es)
        .map(|(r, e)| format!("Nc={} l={}: {e:.3e}", r.nc, default_layers(r.nc)))
        .collect();
    let outcome = ensure(
        fitted >= 0.8,
        format!("H1 relative errors [{}], fitted rate {fitted:.3}", listing.join(", ")),
    );
    within(sweep.elliptic_time, 900.0, outcome)
}

/// Monotone-with-slack decrease in `l`, saturation, and the saturated rate in `H`.
fn criterion_6(sweep: &Sweep) -> Outcome {
    let mut problems = Vec::new();
    let mut listing = Vec::new();
    for r in &sweep.results {
        let violations: Vec<usize> = r
            .combined
            .windows(2)
            .filter(|w| w[1].1 > 1.05 * w[0].1)
            .map(|w| w[1].0)
            .collect();
        if !violations.is_empty() {
            problems.push(format!("Nc={} increases beyond 5% at l={violations:?}", r.nc));
        }
        let n = r.combined.len();
        let last_change = (r.combined[n - 1].1 - r.combined[n - 2].1).abs() / r.combined[n - 2].1;
        if last_change > 0.05 {
            problems.push(format!("Nc={} not saturated (last change {:.1}%)", r.nc, 100.0 * last_change));
        }
        if !r.all_converged {
            problems.push(format!("Nc={} has unconverged coarse solves", r.nc));
        }
        listing.push(format!(
            "Nc={}: {:.3e} -> {:.3e} (l=1..{}, last change {:.2}%)",
            r.nc,
            r.combined[0].1,
            r.combined[n - 1].1,
            r.combined[n - 1].0,
            100.0 * last_change
        ));
    }
    let hs: Vec<f64> = sweep.results.iter().map(|r| r.h).collect();
    let sat: Vec<f64> = sweep.results.iter().map(|r| r.combined.last().unwrap().1).collect();
    let fitted = rate(&hs, &sat);
    if fitted < 0.8 {
        problems.push(format!("saturated rate {fitted:.3} < 0.8"));
    }
    let detail = format!("{}; saturated rate {fitted:.3}", listing.join("; "));
    let outcome = if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", problems.join("; ")))
    };
    within(sweep.total, 1800.0, outcome)
}

/// Contraction towards a reachable target and the active mean constraint,
/// on the coarse system of a localized GRPS basis (`Nc = 8, J = 2`).
fn criterion_7(coeff: &CoefficientField) -> Outcome {
    let mesh = MeshHierarchy::unit_square(8, 2).map_err(err)?;
    let fine = FineOperators::assemble(&mesh, coeff, &ControlOperator::Identity).map_err(err)?;
    let meas = build_measurements(&mesh, BasisKind::Grps);
    let basis = compute_local_basis(&mesh, &fine.dofs, &fine.stiffness, &meas, default_layers(8)).map_err(err)?;

    let free = OcpProblem::standard(&mesh).with_admissible(AdmissibleSet::Unconstrained);
    let system = assemble_coarse(&free, &mesh, &fine, &basis).map_err(err)?;
    let y0 = basis.prolong(&system.state(&vec![0.0; system.controls()]));
    let reachable = free.with_desired(DesiredState::Nodal(fine.dofs.extend(&y0)));
    let system = assemble_coarse(&reachable, &mesh, &fine, &basis).map_err(err)?;
    let options = SolverOptions {
        rho: 0.5,
        eps: 1e-14,
        max_iter: 400,
        initial: Some(vec![1.0; system.controls()]),
        ..SolverOptions::default()
    };
    let sol = solve_ocp_with_history(&system, &options).map_err(err)?;
    let u_star = &sol.u;
    let dist: Vec<f64> = sol
        .history
        .iter()
        .map(|u| {
            let d: Vec<f64> = u.iter().zip(u_star).map(|(a, b)| a - b).collect();
            mass_norm(&d, &system.m)
        })
        .collect();
    // Ratios are meaningful until the iterates reach round-off around u*.
    let floor = 1e-9 * dist[0];
    let ratios: Vec<f64> = (5..dist.len() - 1)
        .take_while(|&n| dist[n + 1] > floor)
        .map(|n| dist[n + 1] / dist[n])
        .collect();
    let delta = ratios.iter().cloned().fold(0.0, f64::max);
    let mut problems = Vec::new();
    if ratios.is_empty() {
        problems.push("no iterations past the fifth above round-off".to_string());
    }
    if !(delta < 1.0) {
        problems.push(format!("contraction ratio {delta:.4} >= 1"));
    }

    let sin = default_desired(&mesh).nodal(&mesh);
    let target = DesiredState::Nodal(sin.iter().map(|v| -10.0 * v).collect());
    let eps = 1e-8;
    let base = SolverOptions {
        rho: 0.5,
        eps,
        ..SolverOptions::default()
    };
    let pushing = OcpProblem::standard(&mesh).with_desired(target);
    let unconstrained = assemble_coarse(
        &pushing.clone().with_admissible(AdmissibleSet::Unconstrained),
        &mesh,
        &fine,
        &basis,
    )
    .map_err(err)?;
    let free_mean = weighted_mean(&solve_ocp(&unconstrained, &base).map_err(err)?.u, &unconstrained.m);
    if !(free_mean < 0.0) {
        problems.push(format!("target does not activate the constraint (free mean {free_mean:.3e})"));
    }
    let constrained = assemble_coarse(&pushing, &mesh, &fine, &basis).map_err(err)?;
    let csol = solve_ocp(&constrained, &base).map_err(err)?;
    let mean = weighted_mean(&csol.u, &constrained.m);
    let defect = constrained.fixed_point_defect(&csol.u, &csol.p, 0.5).map_err(err)?;
    if !csol.converged {
        problems.push("constrained solve did not converge".into());
    }
    if mean < -1e-10 {
        problems.push(format!("control mean {mean:.3e} < -1e-10"));
    }
    if defect > 10.0 * eps {
        problems.push(format!("fixed-point defect {defect:.3e} > 10 eps"));
    }
    let detail = format!(
        "max ratio past n=5: {delta:.4} over {} steps ({} iterations); active case: free mean {free_mean:.3e}, constrained mean {mean:.3e}, defect {defect:.3e} ({} iterations)",
        ratios.len(),
        sol.iterations,
        csol.iterations
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", problems.join("; ")))
    }
}

/// Idempotence, non-expansiveness and the closed-form branches of the projection.
fn criterion_8() -> Outcome {
    let sets = [
        AdmissibleSet::NonnegMean,
        AdmissibleSet::Box { lower: -1.0, upper: 2.0 },
        AdmissibleSet::Unconstrained,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_expansion = 0.0f64;
    let mut shifted = 0;
    for pair in 0..1000 {
        let n = rng.random_range(1..200);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let offset = if pair % 2 == 0 { -2.0 } else { 1.0 };
        let u: Vec<f64> = (0..n).map(|_| offset + rng.random_range(-5.0..5.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        for k in &sets {
            let pu = k.project(&u, &m).map_err(err)?;
            let pv = k.project(&v, &m).map_err(err)?;
            if k.project(&pu, &m).map_err(err)? != pu {
                return Err(format!("{k} not idempotent on pair {pair}"));
            }
            if matches!(k, AdmissibleSet::NonnegMean) && pu != u {
                shifted += 1;
            }
            let dp: Vec<f64> = pu.iter().zip(&pv).map(|(a, b)| a - b).collect();
            let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            worst_expansion = worst_expansion.max(mass_norm(&dp, &m) / mass_norm(&d, &m));
        }
    }
    // Closed-form branches with exactly representable data.
    let m = [1.0, 1.0, 2.0];
    let w = [-3.0, -1.0, -2.0];
    let p = AdmissibleSet::NonnegMean.project(&w, &m).map_err(err)?;
    let shift_ok = weighted_mean(&w, &m) == -2.0 && p == vec![-1.0, 1.0, 0.0] && weighted_mean(&p, &m) == 0.0;
    let w = [3.0, -1.0, 0.0];
    let identity_ok = AdmissibleSet::NonnegMean.project(&w, &m).map_err(err)? == w.to_vec();
    ensure(
        worst_expansion <= 1.0 + 1e-12 && shift_ok && identity_ok,
        format!(
            "idempotent on 1000 pairs x 3 sets ({shifted} nonneg-mean shifts), max ||Pu-Pv||_M/||u-v||_M = {worst_expansion:.15}, shift branch exact: {shift_ok}, identity branch exact: {identity_ok}"
        ),
    )
}

/// High contrast: criteria 3 and 7 unchanged, saturated errors finite and decreasing in `H`.
fn criterion_9() -> Outcome {
    let start = Instant::now();
    let coeff = coefficient(CHANNEL);
    let sweep = run_sweep(CHANNEL, |nc| vec![default_layers(nc)])?;
    let c3 = criterion_3(&coeff, &sweep);
    let c7 = criterion_7(&coeff);
    let sat: Vec<(usize, f64)> = sweep.results.iter().map(|r| (r.nc, r.combined[0].1)).collect();
    let finite_decreasing = sat.iter().all(|s| s.1.is_finite()) && sat.windows(2).all(|w| w[1].1 < w[0].1);
    let listing: Vec<String> = sat.iter().map(|(nc, e)| format!("Nc={nc}: {e:.3e}")).collect();
    let detail = format!(
        "kappa = {:.3e}; criterion 3: {}; criterion 7: {}; saturated combined errors [{}]; {:.1}s",
        coeff.kappa(),
        c3.as_ref().map_or_else(|e| format!("FAIL ({e})"), |d| format!("PASS ({d})")),
        c7.as_ref().map_or_else(|e| format!("FAIL ({e})"), |d| format!("PASS ({d})")),
        listing.join(", "),
        start.elapsed().as_secs_f64()
    );
    ensure(c3.is_ok() && c7.is_ok() && finite_decreasing, detail)
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |k: usize| selected.is_empty() || selected.contains(&k);
    let mut outcomes: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        match &o {
            Ok(d) => println!("criterion {k}: PASS — {d}"),
            Err(d) => println!("criterion {k}: FAIL — {d}"),
        }
        outcomes.push((k, o));
    };

    if wants(1) {
        report(1, criterion_1());
    }
    if wants(2) {
        report(2, criterion_2());
    }
    if wants(4) {
        report(4, criterion_4());
    }
    if wants(7) {
        report(7, criterion_7(&coefficient(TRIG)));
    }
    if wants(8) {
        report(8, criterion_8());
    }
    if wants(3) || wants(5) || wants(6) {
        // Criterion 3 also covers every basis built by the sweep.
        let layers = |nc: usize| (1..=default_layers(nc)).collect();
        match run_sweep(TRIG, layers) {
            Ok(sweep) => {
                if wants(3) {
                    report(3, criterion_3(&coefficient(TRIG), &sweep));
                }
                if wants(5) {
                    report(5, criterion_5(&sweep));
                }
                if wants(6) {
                    report(6, criterion_6(&sweep));
                }
            }
            Err(e) => {
                for k in [3, 5, 6] {
                    if wants(k) {
                        report(k, Err(format!("sweep failed: {e}")));
                    }
                }
            }
        }
    }
    if wants(9) {
        report(9, criterion_9());
    }

    outcomes.sort_by_key(|o| o.0);
    println!("\nsummary:");
    for (k, o) in &outcomes {
        println!("  criterion {k}: {}", if o.is_ok() { "PASS" } else { "FAIL" });
    }
    if outcomes.iter().all(|o| o.1.is_ok()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
