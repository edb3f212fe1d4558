//! Browser bindings: coefficient heatmaps, single basis functions and small
//! control solves on the unit square. Fine nodes form a row-major grid
//! (bottom row first), so nodal vectors can be drawn directly as images.

use wasm_bindgen::prelude::*;

use rps_ocp::cli::parse_coefficient;
use rps_ocp::fem::{ControlOperator, FineOperators};
use rps_ocp::homog::{build_measurements, compute_global_basis_function, compute_local_basis, local_basis_function, BasisKind};
use rps_ocp::mesh::{MeshHierarchy, Rect};
use rps_ocp::ocp::{assemble_coarse, compare, solve_ocp, solve_ocp_fine, AdmissibleSet, OcpProblem, SolverOptions};

const MAX_FINE_CELLS: usize = 128;

/// A scalar image: `values[row * nx + col]`, row 0 at the bottom.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Grid {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Grid {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[wasm_bindgen(getter)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct ControlResult {
    state: Grid,
    control: Grid,
    iterations: usize,
    converged: bool,
    coarse_dof: usize,
    combined_error: f64,
}

#[wasm_bindgen]
impl ControlResult {
    /// Coarse state on fine nodes.
    #[wasm_bindgen(getter)]
    pub fn state(&self) -> Grid {
        self.state.clone()
    }

    /// Coarse control sampled on a `2 nc x nc`-cell grid (two triangles per cell).
    #[wasm_bindgen(getter)]
    pub fn control(&self) -> Grid {
        self.control.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }

    #[wasm_bindgen(getter, js_name = coarseDof)]
    pub fn coarse_dof(&self) -> usize {
        self.coarse_dof
    }

    /// `‖y−y_H‖₁ + ‖p−p_H‖₁ + ‖u−u_H‖` relative to the fine solve.
    #[wasm_bindgen(getter, js_name = combinedError)]
    pub fn combined_error(&self) -> f64 {
        self.combined_error
    }
}

fn mesh(nc: usize, refine: u32) -> Result<MeshHierarchy, String> {
    if nc < 2 || nc << refine > MAX_FINE_CELLS {
        return Err(format!("need 2 <= nc and nc * 2^refine <= {MAX_FINE_CELLS}"));
    }
    MeshHierarchy::unit_square(nc, refine).map_err(|e| e.to_string())
}

/// `log10 a(x)` sampled at cell centers of an `n x n` grid.
pub fn coefficient_grid(spec: &str, n: usize) -> Result<Grid, String> {
    let field = parse_coefficient(spec, Rect::UNIT).map_err(|e| e.to_string())?;
    let n = n.clamp(2, 512);
    let values = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            field.eval((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64).log10()
        })
        .collect();
    Ok(Grid { nx: n, ny: n, values })
}

/// Basis function nearest `(x, y)` on fine nodes; `layers = 0` gives the global one.
pub fn basis_grid(spec: &str, kind: &str, nc: usize, refine: u32, layers: usize, x: f64, y: f64) -> Result<Grid, String> {
    let kind: BasisKind = kind.parse().map_err(|e: rps_ocp::Error| e.to_string())?;
    let mesh = mesh(nc, refine)?;
    let coeff = parse_coefficient(spec, Rect::UNIT).map_err(|e| e.to_string())?;
    let fine = FineOperators::assemble(&mesh, &coeff, &ControlOperator::Identity).map_err(|e| e.to_string())?;
    let meas = build_measurements(&mesh, kind);
    let i = meas.nearest(&mesh, [x, y]);
    let phi = if layers == 0 {
        compute_global_basis_function(&fine.stiffness, &meas, i).map_err(|e| e.to_string())?
    } else {
        local_basis_function(&mesh, &fine.dofs, &fine.stiffness, &meas, i, layers)
            .map_err(|e| e.to_string())?
            .0
    };
    let (fx, fy) = mesh.fine_cells();
    Ok(Grid {
        nx: fx + 1,
        ny: fy + 1,
        values: fine.dofs.extend(&phi.to_dense(fine.dofs.len())),
    })
}

/// Localized GRPS control solve with `f = 1`, `y_d = sin(πx) sin(πy)`.
pub fn control_solve(spec: &str, nc: usize, refine: u32, layers: usize, constraint: &str) -> Result<ControlResult, String> {
    let mesh = mesh(nc, refine)?;
    let coeff = parse_coefficient(spec, Rect::UNIT).map_err(|e| e.to_string())?;
    let admissible: AdmissibleSet = constraint.parse().map_err(|e: rps_ocp::Error| e.to_string())?;
    let fine = FineOperators::assemble(&mesh, &coeff, &ControlOperator::Identity).map_err(|e| e.to_string())?;
    let meas = build_measurements(&mesh, BasisKind::Grps);
    let basis = compute_local_basis(&mesh, &fine.dofs, &fine.stiffness, &meas, layers.max(1)).map_err(|e| e.to_string())?;
    let problem = OcpProblem::standard(&mesh).with_admissible(admissible);
    let options = SolverOptions::default();
    let system = assemble_coarse(&problem, &mesh, &fine, &basis).map_err(|e| e.to_string())?;
    let sol = solve_ocp(&system, &options).map_err(|e| e.to_string())?;
    let (_, reference) = solve_ocp_fine(&problem, &mesh, &fine, &options).map_err(|e| e.to_string())?;
    let errors = compare(&mesh, &fine, &reference, &basis, &sol).map_err(|e| e.to_string())?;

    let (fx, fy) = mesh.fine_cells();
    let state = Grid {
        nx: fx + 1,
        ny: fy + 1,
        values: fine.dofs.extend(&basis.prolong(&sol.y)),
    };
    // Coarse triangles come per cell as (lower, upper); draw each as half a pixel pair.
    let (cx, cy) = mesh.coarse_cells();
    let mut control = vec![0.0; 2 * cx * cy];
    for j in 0..cy {
        for i in 0..cx {
            let cell = j * cx + i;
            control[j * 2 * cx + 2 * i] = sol.u[2 * cell];
            control[j * 2 * cx + 2 * i + 1] = sol.u[2 * cell + 1];
        }
    }
    Ok(ControlResult {
        state,
        control: Grid {
            nx: 2 * cx,
            ny: cy,
            values: control,
        },
        iterations: sol.iterations,
        converged: sol.converged,
        coarse_dof: basis.len(),
        combined_error: errors.combined(),
    })
}

#[wasm_bindgen(js_name = coefficientHeatmap)]
pub fn coefficient_heatmap(spec: &str, n: usize) -> Result<Grid, JsError> {
    coefficient_grid(spec, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = basisFunction)]
pub fn basis_function(
    spec: &str,
    kind: &str,
    nc: usize,
    refine: u32,
    layers: usize,
    x: f64,
    y: f64,
) -> Result<Grid, JsError> {
    basis_grid(spec, kind, nc, refine, layers, x, y).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = solveControl)]
pub fn solve_control(spec: &str, nc: usize, refine: u32, layers: usize, constraint: &str) -> Result<ControlResult, JsError> {
    control_solve(spec, nc, refine, layers, constraint).map_err(|e| JsError::new(&e))
}
