//! Experiment harness: configuration, sweeps and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coeff::{self, CoefficientField};
use crate::error::{Error, Result};
use crate::fem::{prolong_cells, ControlOperator, FineOperators};
use crate::homog::{
    build_measurements, compute_global_basis_function, compute_local_basis, decay_profile, default_layers,
    energy_distance, energy_norm, horizontal_slice, local_basis_function, BasisKind, CoarseBasis, DecayPoint,
};
use crate::mesh::{MeshHierarchy, Rect};
use crate::ocp::{
    assemble_coarse, compare, default_desired, solve_ocp, solve_ocp_fine, AdmissibleSet, DesiredState, OcpProblem,
    OcpSolution, SolverOptions,
};

/// Fully resolved experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `trig`, `constant:<a>`, `channel:<kappa>[,<channels>,<seed>]` or `raster:<path>`.
    pub coefficient: String,
    /// `[x0, y0, x1, y1]`.
    pub domain: [f64; 4],
    pub nc: Vec<usize>,
    /// Refinement levels `J`; ignored when `fine_cells` is set.
    pub refine: u32,
    /// Fix the fine mesh at this many cells along the short side, choosing `J` per `Nc`.
    pub fine_cells: Option<usize>,
    /// Localization layers; empty means `1..=ceil(2 log2 Nc)` for each `Nc`.
    pub layers: Vec<usize>,
    pub basis: Vec<BasisKind>,
    pub rho: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub constraint: AdmissibleSet,
    /// `sin`, `sin:<scale>` or `const:<value>`.
    pub yd: String,
    /// Decay center.
    pub center: [f64; 2],
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            coefficient: "trig".into(),
            domain: [0.0, 0.0, 1.0, 1.0],
            nc: vec![8],
            refine: 2,
            fine_cells: None,
            layers: Vec::new(),
            basis: vec![BasisKind::Grps],
            rho: 0.5,
            eps: 1e-8,
            max_iter: 1000,
            constraint: AdmissibleSet::NonnegMean,
            yd: "sin".into(),
            center: [0.5, 0.5],
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.nc.is_empty() {
            return Err(Error::config("nc", "at least one value required"));
        }
        if let Some(&bad) = self.nc.iter().find(|&&n| n < 2) {
            return Err(Error::config("nc", format!("{bad} < 2")));
        }
        if self.fine_cells.is_none() && self.refine < 1 {
            return Err(Error::config("refine", "J must be at least 1"));
        }
        for &nc in &self.nc {
            self.levels_for(nc)?;
        }
        if self.layers.contains(&0) {
            return Err(Error::config("layers", "layer counts must be positive"));
        }
        if self.basis.is_empty() {
            return Err(Error::config("basis", "at least one kind required"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config("rho", format!("{} is not positive", self.rho)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", format!("{} is not positive", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        let [x0, y0, x1, y1] = self.domain;
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::config("domain", "empty rectangle"));
        }
        parse_desired(&self.yd, self.rect())?;
        self.coefficient_field()?;
        Ok(())
    }

    pub fn rect(&self) -> Rect {
        let [x0, y0, x1, y1] = self.domain;
        Rect::new(x0, y0, x1, y1)
    }

    /// Refinement levels for a given `Nc`.
    pub fn levels_for(&self, nc: usize) -> Result<u32> {
        match self.fine_cells {
            None => Ok(self.refine),
            Some(fine) => {
                let ratio = fine / nc;
                if ratio * nc != fine || !ratio.is_power_of_two() || ratio < 2 {
                    return Err(Error::config(
                        "fine_cells",
                        format!("{fine} is not Nc = {nc} times a power of two >= 2"),
                    ));
                }
                Ok(ratio.trailing_zeros())
            }
        }
    }

    pub fn layers_for(&self, nc: usize) -> Vec<usize> {
        if self.layers.is_empty() {
            (1..=default_layers(nc)).collect()
        } else {
            self.layers.clone()
        }
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField> {
        parse_coefficient(&self.coefficient, self.rect())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            rho: self.rho,
            eps: self.eps,
            max_iter: self.max_iter,
            ..SolverOptions::default()
        }
    }

    /// Writes `config.toml` into the output directory.
    pub fn echo(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join("config.toml");
        fs::write(&path, self.to_toml())?;
        Ok(path)
    }
}

pub fn parse_coefficient(spec: &str, domain: Rect) -> Result<CoefficientField> {
    let spec = spec.trim();
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::config("coefficient", format!("{s:?}: {e}")))
    };
    match name {
        "trig" => Ok(coeff::trig_coefficient()),
        "constant" => coeff::constant(num(arg)?),
        "channel" => {
            let parts: Vec<&str> = arg.split(',').collect();
            let kappa = num(parts[0])?;
            let channels = parts.get(1).map(|s| num(s)).transpose()?.unwrap_or(4.0) as usize;
            let seed = parts.get(2).map(|s| num(s)).transpose()?.unwrap_or(7.0) as u64;
            coeff::synthetic_channel_on(domain, 64, 64, kappa, channels, seed)
        }
        "raster" => coeff::load_raster(arg, domain),
        other => Err(Error::config(
            "coefficient",
            format!("unknown kind {other:?} (trig|constant:<a>|channel:<kappa>|raster:<path>)"),
        )),
    }
}

pub fn parse_desired(spec: &str, domain: Rect) -> Result<DesiredState> {
    let spec = spec.trim();
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::config("yd", format!("{s:?}: {e}")))
    };
    match name {
        "sin" => {
            let scale = if arg.is_empty() { 1.0 } else { num(arg)? };
            let mesh = MeshHierarchy::build(domain, 1, 0)?;
            let DesiredState::Function(g) = default_desired(&mesh) else {
                unreachable!()
            };
            Ok(DesiredState::function(move |x, y| scale * g(x, y)))
        }
        "const" => {
            let v = num(arg)?;
            Ok(DesiredState::function(move |_, _| v))
        }
        other => Err(Error::config("yd", format!("unknown target {other:?} (sin[:<scale>]|const:<v>)"))),
    }
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: BasisKind,
    pub nc: usize,
    pub h: f64,
    pub layers: usize,
    pub coarse_dof: usize,
    pub state_h1: f64,
    pub adjoint_h1: f64,
    pub control_l2: f64,
    pub combined: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
}

/// A sweep entry that could not be computed.
#[derive(Debug)]
pub struct SweepFailure {
    pub kind: BasisKind,
    pub nc: usize,
    pub layers: usize,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SweepReport {
    pub records: Vec<ErrorRecord>,
    pub failures: Vec<SweepFailure>,
}

const RECORD_HEADER: &str =
    "kind,nc,h,layers,coarse_dof,state_h1,adjoint_h1,control_l2,combined,iterations,converged,wall_time";

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RECORD_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
                r.kind,
                r.nc,
                sci(r.h),
                r.layers,
                r.coarse_dof,
                sci(r.state_h1),
                sci(r.adjoint_h1),
                sci(r.control_l2),
                sci(r.combined),
                r.iterations,
                r.converged,
                r.wall_time
            );
        }
        out
    }
}

/// Shared per-`Nc` state: mesh, fine operators and the fine reference solution.
pub struct FineReference {
    pub mesh: MeshHierarchy,
    pub fine: FineOperators,
    pub problem: OcpProblem,
    pub solution: OcpSolution,
}

impl FineReference {
    pub fn build(config: &ExperimentConfig, nc: usize) -> Result<Self> {
        let mesh = MeshHierarchy::build(config.rect(), nc, config.levels_for(nc)?)?;
        let fine = FineOperators::assemble(&mesh, &config.coefficient_field()?, &ControlOperator::Identity)?;
        let problem = OcpProblem::standard(&mesh)
            .with_desired(parse_desired(&config.yd, config.rect())?)
            .with_admissible(config.constraint);
        let (_, solution) = solve_ocp_fine(&problem, &mesh, &fine, &config.solver_options())?;
        Ok(Self {
            mesh,
            fine,
            problem,
            solution,
        })
    }

    /// Localized basis, coarse solve and errors for one `(kind, l)`.
    pub fn coarse_run(
        &self,
        config: &ExperimentConfig,
        kind: BasisKind,
        layers: usize,
    ) -> Result<(CoarseBasis, OcpSolution, ErrorRecord)> {
        let start = Instant::now();
        let meas = build_measurements(&self.mesh, kind);
        let basis = compute_local_basis(&self.mesh, &self.fine.dofs, &self.fine.stiffness, &meas, layers)?;
        let system = assemble_coarse(&self.problem, &self.mesh, &self.fine, &basis)?;
        let solution = solve_ocp(&system, &config.solver_options())?;
        let errors = compare(&self.mesh, &self.fine, &self.solution, &basis, &solution)?;
        let record = ErrorRecord {
            kind,
            nc: self.mesh.nc(),
            h: self.mesh.coarse_h(),
            layers,
            coarse_dof: basis.len(),
            state_h1: errors.state_h1,
            adjoint_h1: errors.adjoint_h1,
            control_l2: errors.control_l2,
            combined: errors.combined(),
            iterations: solution.iterations,
            converged: solution.converged,
            wall_time: start.elapsed().as_secs_f64(),
        };
        Ok((basis, solution, record))
    }
}

/// Error sweep over `Nc x kind x l`. Failed entries are collected, not fatal.
pub fn run_convergence(config: &ExperimentConfig) -> Result<SweepReport> {
    config.validate()?;
    let mut report = SweepReport::default();
    for &nc in &config.nc {
        let reference = match FineReference::build(config, nc) {
            Ok(r) => r,
            Err(error) => {
                for &kind in &config.basis {
                    for layers in config.layers_for(nc) {
                        report.failures.push(SweepFailure {
                            kind,
                            nc,
                            layers,
                            error: Error::Linalg(format!("fine reference failed: {error}")),
                        });
                    }
                }
                continue;
            }
        };
        for &kind in &config.basis {
            for layers in config.layers_for(nc) {
                match reference.coarse_run(config, kind, layers) {
                    Ok((_, _, record)) => report.records.push(record),
                    Err(error) => report.failures.push(SweepFailure { kind, nc, layers, error }),
                }
            }
        }
    }
    report.records.sort_by_key(|r| (r.kind, r.nc, r.layers));
    Ok(report)
}

/// Decay data for one global basis function.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub kind: BasisKind,
    pub nc: usize,
    pub measurement: usize,
    pub center: [f64; 2],
    pub profile: Vec<DecayPoint>,
    pub slice: Vec<(f64, f64)>,
    /// `(l, ‖φ − φ^l‖_a / ‖φ‖_a)`.
    pub truncation: Vec<(usize, f64)>,
}

impl DecayReport {
    pub fn profile_csv(&self) -> String {
        let mut out = String::from("r,tail_fraction\n");
        for p in &self.profile {
            let _ = writeln!(out, "{},{}", sci(p.radius), sci(p.tail_fraction));
        }
        out
    }

    pub fn slice_csv(&self) -> String {
        let mut out = String::from("x,value,log10_abs\n");
        for &(x, v) in &self.slice {
            let _ = writeln!(out, "{},{},{}", sci(x), sci(v), sci(v.abs().log10()));
        }
        out
    }

    pub fn truncation_csv(&self) -> String {
        let mut out = String::from("layers,relative_energy_distance\n");
        for &(l, d) in &self.truncation {
            let _ = writeln!(out, "{l},{}", sci(d));
        }
        out
    }
}

/// Global basis function nearest `config.center`, its tail profile, slice and
/// truncation errors for the configured layers.
pub fn run_decay(config: &ExperimentConfig, nc: usize, kind: BasisKind) -> Result<DecayReport> {
    config.validate()?;
    let mesh = MeshHierarchy::build(config.rect(), nc, config.levels_for(nc)?)?;
    let fine = FineOperators::assemble(&mesh, &config.coefficient_field()?, &ControlOperator::Identity)?;
    let meas = build_measurements(&mesh, kind);
    let i = meas.nearest(&mesh, config.center);
    let center = meas.center(&mesh, i);
    let phi = compute_global_basis_function(&fine.stiffness, &meas, i)?;
    let profile = decay_profile(&mesh, &fine.dofs, &fine.coefficient, &phi.values, center);
    let slice = horizontal_slice(&mesh, &fine.dofs, &phi.values, center[1]);
    let norm = energy_norm(&fine.stiffness, &phi);
    let truncation = config
        .layers_for(nc)
        .into_iter()
        .map(|l| {
            let (local, _) = local_basis_function(&mesh, &fine.dofs, &fine.stiffness, &meas, i, l)?;
            Ok((l, energy_distance(&fine.stiffness, &phi, &local) / norm))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport {
        kind,
        nc,
        measurement: i,
        center,
        profile,
        slice,
        truncation,
    })
}

/// Writes `name` under `dir`, creating the directory.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Fine nodal values as `x,y,value` rows.
pub fn nodal_csv(mesh: &MeshHierarchy, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (p, v) in mesh.fine.nodes.iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", sci(p[0]), sci(p[1]), sci(*v));
    }
    out
}

/// Fine cell values as `x,y,value` rows at barycenters.
pub fn cell_csv(mesh: &MeshHierarchy, values: &[f64]) -> String {
    let mut out = String::from("x,y,value\n");
    for (t, v) in values.iter().enumerate() {
        let [x, y] = mesh.fine.barycenter(t);
        let _ = writeln!(out, "{},{},{}", sci(x), sci(y), sci(*v));
    }
    out
}

/// Sparse basis dump: `basis,node,value` with fine node indices.
pub fn basis_csv(basis: &CoarseBasis, reference: &FineReference) -> String {
    let nodes = reference.fine.dofs.nodes();
    let mut out = String::from("basis,node,value\n");
    for (i, v) in basis.vectors.iter().enumerate() {
        for (&k, &x) in v.dofs.iter().zip(&v.values) {
            let _ = writeln!(out, "{i},{},{}", nodes[k as usize], sci(x));
        }
    }
    out
}

/// Single coarse solve with all vectors written to `config.out`.
pub fn run_solve(config: &ExperimentConfig, export_basis: bool) -> Result<ErrorRecord> {
    config.validate()?;
    let nc = config.nc[0];
    let kind = config.basis[0];
    let layers = config.layers.first().copied().unwrap_or_else(|| default_layers(nc));
    let reference = FineReference::build(config, nc)?;
    let (basis, solution, record) = reference.coarse_run(config, kind, layers)?;
    let mesh = &reference.mesh;
    let dofs = &reference.fine.dofs;
    let dir = &config.out;
    let mut coarse_mesh = Vec::new();
    mesh.coarse.write_text(&mut coarse_mesh)?;
    write_output(dir, "coarse_mesh.txt", &String::from_utf8_lossy(&coarse_mesh))?;
    let mut fine_mesh = Vec::new();
    mesh.fine.write_text(&mut fine_mesh)?;
    write_output(dir, "fine_mesh.txt", &String::from_utf8_lossy(&fine_mesh))?;
    write_output(dir, "state.csv", &nodal_csv(mesh, &dofs.extend(&basis.prolong(&solution.y))))?;
    write_output(dir, "adjoint.csv", &nodal_csv(mesh, &dofs.extend(&basis.prolong(&solution.p))))?;
    write_output(dir, "control.csv", &cell_csv(mesh, &prolong_cells(mesh, &solution.u)))?;
    write_output(dir, "reference_state.csv", &nodal_csv(mesh, &dofs.extend(&reference.solution.y)))?;
    write_output(dir, "reference_control.csv", &cell_csv(mesh, &reference.solution.u))?;
    let mut trace = String::from("n,increment,objective\n");
    for (n, t) in solution.trace.iter().enumerate() {
        let _ = writeln!(trace, "{},{},{}", n + 1, sci(t.increment), sci(t.objective));
    }
    write_output(dir, "trace.csv", &trace)?;
    write_output(dir, "errors.csv", &SweepReport { records: vec![record.clone()], failures: Vec::new() }.to_csv())?;
    if export_basis {
        write_output(dir, "basis.csv", &basis_csv(&basis, &reference))?;
    }
    Ok(record)
}
