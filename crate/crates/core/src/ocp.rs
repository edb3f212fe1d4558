//! Distributed optimal control: projected gradient on the reduced problem
//!
//! ```text
//! min ½‖y − y_d‖² + ½‖u‖²   s.t.  −∇·(a∇y) = f + Bu,  u ∈ K
//! ```
//!
//! in matrix form over any state space spanned by a basis `Φ`:
//! `Y = S⁻¹(F + DU)`, `P = S⁻¹(Q Y − Y_d)`, `U ← P_K(U − ρ(U + M⁻¹DᵀP))`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass_full, cell_prolongation, cell_relative_l2, control_areas, error_norms,
    prolong_cells, ControlLevel, FineOperators,
};
use crate::homog::{galerkin_project, CoarseBasis};
use crate::linalg::{Cholesky, SparseOperator};
use crate::mesh::MeshHierarchy;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Admissible controls `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdmissibleSet {
    /// `∫ u ≥ 0`.
    NonnegMean,
    /// `a ≤ u ≤ b` pointwise.
    Box { lower: f64, upper: f64 },
    Unconstrained,
}

impl AdmissibleSet {
    pub fn bounded(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::config("constraint", format!("box bounds {lower} > {upper}")));
        }
        Ok(Self::Box { lower, upper })
    }

    /// Projection onto `K` in the inner product weighted by the diagonal mass `m`.
    pub fn project(&self, w: &[f64], m: &[f64]) -> Result<Vec<f64>> {
        if w.is_empty() {
            return Err(Error::EmptyControlSpace);
        }
        if w.len() != m.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} controls with {} mass entries",
                w.len(),
                m.len()
            )));
        }
        Ok(match *self {
            AdmissibleSet::NonnegMean => {
                let mean = weighted_mean(w, m);
                if mean >= 0.0 {
                    return Ok(w.to_vec());
                }
                let mut v: Vec<f64> = w.iter().map(|&x| x - mean).collect();
                // Rounding can leave the shifted mean slightly negative; overshoot by
                // a rounding-level margin so the result is feasible as computed and
                // a second projection is the identity.
                let mut margin = mean_roundoff(w, m);
                while weighted_mean(&v, m) < 0.0 {
                    v = w.iter().map(|&x| x - (mean - margin)).collect();
                    margin *= 2.0;
                }
                v
            }
            AdmissibleSet::Box { lower, upper } => w.iter().map(|&x| x.clamp(lower, upper)).collect(),
            AdmissibleSet::Unconstrained => w.to_vec(),
        })
    }

    pub fn contains(&self, w: &[f64], m: &[f64], tol: f64) -> bool {
        match *self {
            AdmissibleSet::NonnegMean => weighted_mean(w, m) >= -tol,
            AdmissibleSet::Box { lower, upper } => w.iter().all(|&x| x >= lower - tol && x <= upper + tol),
            AdmissibleSet::Unconstrained => true,
        }
    }
}

impl fmt::Display for AdmissibleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdmissibleSet::NonnegMean => f.write_str("nonneg-mean"),
            AdmissibleSet::Box { lower, upper } => write!(f, "box:{lower:?},{upper:?}"),
            AdmissibleSet::Unconstrained => f.write_str("none"),
        }
    }
}

impl FromStr for AdmissibleSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "nonneg-mean" => return Ok(Self::NonnegMean),
            "none" | "unconstrained" => return Ok(Self::Unconstrained),
            _ => {}
        }
        let bounds = s
            .strip_prefix("box:")
            .ok_or_else(|| Error::config("constraint", format!("{s:?} (expected nonneg-mean|box:<a>,<b>|none)")))?;
        let (a, b) = bounds
            .split_once(',')
            .ok_or_else(|| Error::config("constraint", format!("box needs two bounds, got {bounds:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::config("constraint", format!("bad bound {v:?}: {e}")))
        };
        Self::bounded(parse(a)?, parse(b)?)
    }
}

impl TryFrom<String> for AdmissibleSet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdmissibleSet> for String {
    fn from(k: AdmissibleSet) -> String {
        k.to_string()
    }
}

pub fn weighted_mean(w: &[f64], m: &[f64]) -> f64 {
    let total: f64 = m.iter().sum();
    w.iter().zip(m).map(|(x, a)| x * a).sum::<f64>() / total
}

/// Worst-case rounding error of [`weighted_mean`].
fn mean_roundoff(w: &[f64], m: &[f64]) -> f64 {
    let total: f64 = m.iter().sum();
    let magnitude: f64 = w.iter().zip(m).map(|(x, a)| (x * a).abs()).sum();
    2.0 * (w.len() as f64 + 2.0) * f64::EPSILON * magnitude / total
}

/// `‖w‖_M` for a diagonal mass.
pub fn mass_norm(w: &[f64], m: &[f64]) -> f64 {
    w.iter().zip(m).map(|(x, a)| a * x * x).sum::<f64>().sqrt()
}

/// Target state.
#[derive(Clone)]
pub enum DesiredState {
    Function(ScalarFn),
    /// Values at every fine node.
    Nodal(Vec<f64>),
}

impl fmt::Debug for DesiredState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesiredState::Function(_) => f.write_str("Function"),
            DesiredState::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
        }
    }
}

impl DesiredState {
    pub fn function(g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(g))
    }

    pub fn nodal(&self, mesh: &MeshHierarchy) -> Vec<f64> {
        match self {
            DesiredState::Function(g) => mesh.fine.nodes.iter().map(|&[x, y]| g(x, y)).collect(),
            DesiredState::Nodal(v) => v.clone(),
        }
    }
}

/// Default target `sin(πx) sin(πy)` over the domain.
pub fn default_desired(mesh: &MeshHierarchy) -> DesiredState {
    let r = mesh.domain();
    DesiredState::function(move |x, y| {
        use std::f64::consts::PI;
        (PI * (x - r.x0) / r.width()).sin() * (PI * (y - r.y0) / r.height()).sin()
    })
}

#[derive(Clone, Debug)]
pub struct OcpProblem {
    pub forcing: ScalarFnHolder,
    pub desired: DesiredState,
    pub admissible: AdmissibleSet,
}

/// Debug-printable wrapper for the forcing term.
#[derive(Clone)]
pub struct ScalarFnHolder(pub ScalarFn);

impl fmt::Debug for ScalarFnHolder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFn")
    }
}

impl OcpProblem {
    /// `f = 1`, `y_d = sin(πx) sin(πy)`, non-negative mean controls.
    pub fn standard(mesh: &MeshHierarchy) -> Self {
        Self {
            forcing: ScalarFnHolder(Arc::new(|_, _| 1.0)),
            desired: default_desired(mesh),
            admissible: AdmissibleSet::NonnegMean,
        }
    }

    pub fn with_forcing(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.forcing = ScalarFnHolder(Arc::new(f));
        self
    }

    pub fn with_desired(mut self, desired: DesiredState) -> Self {
        self.desired = desired;
        self
    }

    pub fn with_admissible(mut self, k: AdmissibleSet) -> Self {
        self.admissible = k;
        self
    }

    /// Fine load `(f, φ_k)` and target moments `(y_d, φ_k)` with `‖y_d‖²`.
    fn fine_vectors(&self, mesh: &MeshHierarchy, fine: &FineOperators) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let f = &self.forcing.0;
        let load = assemble_load(mesh, |x, y| f(x, y));
        let nodal = self.desired.nodal(mesh);
        if nodal.len() != mesh.fine.n_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "target has {} values for {} nodes",
                nodal.len(),
                mesh.fine.n_nodes()
            )));
        }
        if load.iter().chain(&nodal).any(|v| !v.is_finite()) {
            return Err(Error::config("problem", "forcing or target is not finite"));
        }
        let moments_full = assemble_mass_full(mesh).mul_vec(&nodal);
        let norm2 = crate::linalg::dot(&nodal, &moments_full);
        Ok((load, fine.dofs.restrict(&moments_full), norm2))
    }
}

/// Reduced-problem matrices on one state space.
pub struct ControlSystem {
    /// Stiffness `S`.
    pub s: SparseOperator,
    /// State mass `Q`.
    pub q: SparseOperator,
    /// Control-to-state coupling `D`.
    pub d: SparseOperator,
    /// Diagonal of the control mass `M`.
    pub m: Vec<f64>,
    pub f: Vec<f64>,
    pub yd: Vec<f64>,
    /// `‖y_d‖²`, so the objective has its true value.
    pub yd_norm2: f64,
    pub admissible: AdmissibleSet,
    factor: Cholesky,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("states", &self.states())
            .field("controls", &self.controls())
            .field("admissible", &self.admissible)
            .finish()
    }
}

impl ControlSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        s: SparseOperator,
        q: SparseOperator,
        d: SparseOperator,
        m: Vec<f64>,
        f: Vec<f64>,
        yd: Vec<f64>,
        yd_norm2: f64,
        admissible: AdmissibleSet,
    ) -> Result<Self> {
        let n = s.nrows();
        let ok = s.ncols() == n
            && q.nrows() == n
            && q.ncols() == n
            && d.nrows() == n
            && d.ncols() == m.len()
            && f.len() == n
            && yd.len() == n;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "S {}x{}, Q {}x{}, D {}x{}, M {}, F {}, Yd {}",
                s.nrows(),
                s.ncols(),
                q.nrows(),
                q.ncols(),
                d.nrows(),
                d.ncols(),
                m.len(),
                f.len(),
                yd.len()
            )));
        }
        if m.is_empty() {
            return Err(Error::EmptyControlSpace);
        }
        if let Some(bad) = m.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::NotPositiveDefinite { pivot: bad });
        }
        let factor = Cholesky::new(&s)?;
        Ok(Self {
            s,
            q,
            d,
            m,
            f,
            yd,
            yd_norm2,
            admissible,
            factor,
        })
    }

    pub fn states(&self) -> usize {
        self.s.nrows()
    }

    pub fn controls(&self) -> usize {
        self.m.len()
    }

    /// `Y = S⁻¹(F + DU)`.
    pub fn state(&self, u: &[f64]) -> Vec<f64> {
        let mut rhs = self.d.mul_vec(u);
        for (r, f) in rhs.iter_mut().zip(&self.f) {
            *r += f;
        }
        self.factor.solve(&rhs)
    }

    /// `P = S⁻¹(QY − Y_d)`.
    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut rhs = self.q.mul_vec(y);
        for (r, t) in rhs.iter_mut().zip(&self.yd) {
            *r -= t;
        }
        self.factor.solve(&rhs)
    }

    /// Reduced gradient `U + M⁻¹DᵀP`.
    pub fn gradient(&self, u: &[f64], p: &[f64]) -> Vec<f64> {
        let dtp = self.d.mul_transpose_vec(p);
        u.iter()
            .zip(dtp)
            .zip(&self.m)
            .map(|((u, g), m)| u + g / m)
            .collect()
    }

    /// `½‖y − y_d‖² + ½‖u‖²`.
    pub fn objective(&self, y: &[f64], u: &[f64]) -> f64 {
        let misfit = 0.5 * self.q.quadratic_form(y) - crate::linalg::dot(y, &self.yd) + 0.5 * self.yd_norm2;
        misfit.max(0.0) + 0.5 * mass_norm(u, &self.m).powi(2)
    }

    pub fn state_norm(&self, y: &[f64]) -> f64 {
        self.q.quadratic_form(y).max(0.0).sqrt()
    }

    /// One projected-gradient step.
    pub fn step(&self, u: &[f64], p: &[f64], rho: f64) -> Result<Vec<f64>> {
        let g = self.gradient(u, p);
        let w: Vec<f64> = u.iter().zip(&g).map(|(u, g)| u - rho * g).collect();
        self.admissible.project(&w, &self.m)
    }

    /// `‖u − P_K(u − ρ(u + M⁻¹Dᵀp))‖_M`.
    pub fn fixed_point_defect(&self, u: &[f64], p: &[f64], rho: f64) -> Result<f64> {
        let next = self.step(u, p, rho)?;
        let diff: Vec<f64> = u.iter().zip(&next).map(|(a, b)| a - b).collect();
        Ok(mass_norm(&diff, &self.m))
    }
}

/// Builds the system on the span of `basis`, controls on `level` cells.
pub fn assemble_system(
    problem: &OcpProblem,
    mesh: &MeshHierarchy,
    fine: &FineOperators,
    basis: &CoarseBasis,
    level: ControlLevel,
) -> Result<ControlSystem> {
    if basis.fine_dim() != fine.dofs.len() {
        return Err(Error::DimensionMismatch(format!(
            "basis over {} dofs, fine space has {}",
            basis.fine_dim(),
            fine.dofs.len()
        )));
    }
    let (load, moments, norm2) = problem.fine_vectors(mesh, fine)?;
    let mut projected = galerkin_project(basis, &[&fine.stiffness, fine.mass()]);
    let q = projected.pop().expect("mass");
    let s = projected.pop().expect("stiffness");
    let coupling = match level {
        ControlLevel::Fine => fine.coupling.clone(),
        ControlLevel::Coarse => fine.coupling.matmul(&cell_prolongation(mesh)),
    };
    let d = basis.transpose_operator().matmul(&coupling);
    ControlSystem::new(
        s,
        q,
        d,
        control_areas(mesh, level),
        basis.restrict(&load),
        basis.restrict(&moments),
        norm2,
        problem.admissible,
    )
}

/// Coarse system: state in `span Φ`, controls piecewise constant on coarse triangles.
pub fn assemble_coarse(
    problem: &OcpProblem,
    mesh: &MeshHierarchy,
    fine: &FineOperators,
    basis: &CoarseBasis,
) -> Result<ControlSystem> {
    assemble_system(problem, mesh, fine, basis, ControlLevel::Coarse)
}

/// Fine reference system: P1 states, controls on fine triangles.
pub fn assemble_fine(problem: &OcpProblem, mesh: &MeshHierarchy, fine: &FineOperators) -> Result<ControlSystem> {
    let (load, moments, norm2) = problem.fine_vectors(mesh, fine)?;
    ControlSystem::new(
        fine.stiffness.clone(),
        fine.mass().clone(),
        fine.coupling.clone(),
        fine.control_areas.clone(),
        load,
        moments,
        norm2,
        problem.admissible,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub rho: f64,
    /// Relative tolerance on the state increment.
    pub eps: f64,
    pub max_iter: usize,
    /// Halve `ρ` whenever a step increases the objective.
    pub halving: bool,
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rho: 0.5,
            eps: 1e-8,
            max_iter: 1000,
            halving: false,
            initial: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    /// `‖Y⁽ⁿ⁺¹⁾ − Y⁽ⁿ⁾‖_Q`.
    pub increment: f64,
    pub objective: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcpSolution {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// Control iterates `u⁽⁰⁾, u⁽¹⁾, …` when requested.
    pub history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Projected gradient iteration; stops when `‖ΔY‖_Q ≤ eps ‖Y⁽⁰⁾‖_Q`.
///
/// Non-convergence is reported through `converged`, not as an error.
pub fn solve_ocp(system: &ControlSystem, options: &SolverOptions) -> Result<OcpSolution> {
    solve_impl(system, options, false)
}

/// As [`solve_ocp`], also recording every control iterate.
pub fn solve_ocp_with_history(system: &ControlSystem, options: &SolverOptions) -> Result<OcpSolution> {
    solve_impl(system, options, true)
}

fn solve_impl(system: &ControlSystem, options: &SolverOptions, keep_history: bool) -> Result<OcpSolution> {
    if !(options.rho > 0.0) {
        return Err(Error::config("rho", format!("must be positive, got {}", options.rho)));
    }
    if !(options.eps > 0.0) {
        return Err(Error::config("eps", format!("must be positive, got {}", options.eps)));
    }
    let mut u = match &options.initial {
        Some(u0) if u0.len() != system.controls() => {
            return Err(Error::DimensionMismatch(format!(
                "initial control of length {} for {} cells",
                u0.len(),
                system.controls()
            )))
        }
        Some(u0) => u0.clone(),
        None => vec![0.0; system.controls()],
    };
    let mut y = system.state(&u);
    let mut objective = system.objective(&y, &u);
    let scale = match system.state_norm(&y) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut rho = options.rho;
    let mut history = Vec::new();
    if keep_history {
        history.push(u.clone());
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        let p = system.adjoint(&y);
        let mut u_next = system.step(&u, &p, rho)?;
        let mut y_next = system.state(&u_next);
        let mut obj_next = system.objective(&y_next, &u_next);
        while options.halving && obj_next > objective * (1.0 + 1e-12) && rho > 1e-12 {
            rho *= 0.5;
            u_next = system.step(&u, &p, rho)?;
            y_next = system.state(&u_next);
            obj_next = system.objective(&y_next, &u_next);
        }
        let diff: Vec<f64> = y_next.iter().zip(&y).map(|(a, b)| a - b).collect();
        let increment = system.state_norm(&diff);
        trace.push(TraceEntry {
            increment,
            objective: obj_next,
            rho,
        });
        u = u_next;
        y = y_next;
        objective = obj_next;
        iterations += 1;
        if keep_history {
            history.push(u.clone());
        }
        if increment <= options.eps * scale {
            converged = true;
            break;
        }
    }
    let p = system.adjoint(&y);
    Ok(OcpSolution {
        y,
        p,
        u,
        history,
        iterations,
        trace,
        converged,
    })
}

/// Fine reference solve.
pub fn solve_ocp_fine(
    problem: &OcpProblem,
    mesh: &MeshHierarchy,
    fine: &FineOperators,
    options: &SolverOptions,
) -> Result<(ControlSystem, OcpSolution)> {
    let system = assemble_fine(problem, mesh, fine)?;
    let solution = solve_ocp(&system, options)?;
    Ok((system, solution))
}

/// Relative errors of a coarse solution against the fine reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OcpErrors {
    /// `‖y − y_H‖₁ / ‖y‖₁`.
    pub state_h1: f64,
    pub adjoint_h1: f64,
    /// `‖u − u_H‖ / ‖u‖`.
    pub control_l2: f64,
}

impl OcpErrors {
    pub fn combined(&self) -> f64 {
        self.state_h1 + self.adjoint_h1 + self.control_l2
    }
}

/// Compares `(Φ Y_H, Φ P_H, U_H)` against fine `(y, p, u)`.
pub fn compare(
    mesh: &MeshHierarchy,
    fine: &FineOperators,
    reference: &OcpSolution,
    basis: &CoarseBasis,
    coarse: &OcpSolution,
) -> Result<OcpErrors> {
    let y = error_norms(&reference.y, &basis.prolong(&coarse.y), &fine.norms)?;
    let p = error_norms(&reference.p, &basis.prolong(&coarse.p), &fine.norms)?;
    let u = cell_relative_l2(&reference.u, &prolong_cells(mesh, &coarse.u), &fine.control_areas)?;
    Ok(OcpErrors {
        state_h1: y.h1,
        adjoint_h1: p.h1,
        control_l2: u,
    })
}
