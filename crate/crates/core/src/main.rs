use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rps_ocp::cli::{run_convergence, run_decay, run_solve, write_output, ExperimentConfig};
use rps_ocp::homog::BasisKind;
use rps_ocp::ocp::AdmissibleSet;

#[derive(Parser)]
#[command(version, about = "Coarse-space solver for elliptic optimal control with rough coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error sweep over Nc, basis kind and localization layers.
    Convergence(Common),
    /// Decay profile, slice and truncation errors of a central global basis function.
    Decay(Common),
    /// One coarse solve; writes solution vectors, trace and mesh dumps.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also dump the basis as (basis, node, value) rows.
        #[arg(long)]
        export_basis: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// trig | constant:<a> | channel:<kappa>[,<channels>,<seed>] | raster:<path>
    #[arg(long)]
    coeff: Option<String>,
    /// Coarse cells along the short side (comma separated).
    #[arg(long, value_delimiter = ',')]
    nc: Option<Vec<usize>>,
    /// Refinement levels J.
    #[arg(long)]
    refine: Option<u32>,
    /// Fixed fine cells along the short side (overrides --refine per Nc).
    #[arg(long)]
    fine_cells: Option<usize>,
    /// Localization layers (comma separated).
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// rps | grps (comma separated).
    #[arg(long, value_delimiter = ',')]
    basis: Option<Vec<BasisKind>>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// nonneg-mean | box:<a>,<b> | none
    #[arg(long)]
    constraint: Option<AdmissibleSet>,
    /// sin | sin:<scale> | const:<v>
    #[arg(long)]
    yd: Option<String>,
    /// x0,y0,x1,y1
    #[arg(long, value_delimiter = ',', num_args = 4)]
    domain: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> rps_ocp::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.coeff {
            c.coefficient = v;
        }
        if let Some(v) = self.nc {
            c.nc = v;
        }
        if let Some(v) = self.refine {
            c.refine = v;
        }
        if self.fine_cells.is_some() {
            c.fine_cells = self.fine_cells;
        }
        if let Some(v) = self.layers {
            c.layers = v;
        }
        if let Some(v) = self.basis {
            c.basis = v;
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.eps {
            c.eps = v;
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.constraint {
            c.constraint = v;
        }
        if let Some(v) = self.yd {
            c.yd = v;
        }
        if let Some(v) = self.domain {
            c.domain = [v[0], v[1], v[2], v[3]];
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(command: Command) -> rps_ocp::Result<bool> {
    match command {
        Command::Convergence(common) => {
            let config = common.resolve()?;
            config.echo()?;
            let report = run_convergence(&config)?;
            let path = write_output(&config.out, "convergence.csv", &report.to_csv())?;
            for f in &report.failures {
                eprintln!("failed: kind={} nc={} l={}: {}", f.kind, f.nc, f.layers, f.error);
            }
            println!("{} rows -> {}", report.records.len(), path.display());
            Ok(report.failures.is_empty())
        }
        Command::Decay(common) => {
            let config = common.resolve()?;
            config.echo()?;
            let mut ok = true;
            for &nc in &config.nc {
                for &kind in &config.basis {
                    match run_decay(&config, nc, kind) {
                        Ok(r) => {
                            let tag = format!("{kind}_nc{nc}");
                            write_output(&config.out, &format!("decay_{tag}.csv"), &r.profile_csv())?;
                            write_output(&config.out, &format!("slice_{tag}.csv"), &r.slice_csv())?;
                            write_output(&config.out, &format!("truncation_{tag}.csv"), &r.truncation_csv())?;
                            println!("{tag}: measurement {} at ({:.4}, {:.4})", r.measurement, r.center[0], r.center[1]);
                        }
                        Err(e) => {
                            eprintln!("failed: kind={kind} nc={nc}: {e}");
                            ok = false;
                        }
                    }
                }
            }
            Ok(ok)
        }
        Command::Solve { common, export_basis } => {
            let config = common.resolve()?;
            config.echo()?;
            let r = run_solve(&config, export_basis)?;
            println!(
                "{} Nc={} l={} dof={}: |y|={:.3e} |p|={:.3e} |u|={:.3e} iterations={} converged={}",
                r.kind, r.nc, r.layers, r.coarse_dof, r.state_h1, r.adjoint_h1, r.control_l2, r.iterations, r.converged
            );
            println!("output -> {}", config.out.display());
            Ok(r.converged)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
