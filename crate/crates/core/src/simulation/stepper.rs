use crate::coupling::{interpolate_velocity, spread_force};
use crate::error::{Error, Result};
use crate::fluid::{FluidParams, FluidSolver, FluidState};
use crate::geometry::{SurfaceGeometry, SurfaceGrid};
use crate::scalar::{Real, Vec3};
use crate::shell::{
    compute_coefficients, compute_force, decompose_offset, MaterialParams, ShellCoefficients, ELASTIC_FORCE_SIGN,
};

use super::config::ModelConfig;
use super::model::{build_model_shell, clamp_force, clamp_mask, impulse_force, node_thickness};

/// Lagrangian state of the shell.
///
/// Positions are kept as the reference `X0` plus a separately stored
/// displacement, so displacements far below the rounding level of `X0`
/// are still resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellState<T> {
    /// `X - X0` per node.
    pub displacement: Vec<Vec3<T>>,
    pub t: T,
    pub step: usize,
}

impl<T: Real> ShellState<T> {
    pub fn at_rest(nodes: usize) -> Self {
        ShellState { displacement: vec![[T::zero(); 3]; nodes], t: T::zero(), step: 0 }
    }

    pub fn positions(&self, grid: &SurfaceGrid<T>) -> Vec<Vec3<T>> {
        grid.x0
            .iter()
            .zip(&self.displacement)
            .map(|(x, d)| [x[0] + d[0], x[1] + d[1], x[2] + d[2]])
            .collect()
    }

    pub fn max_displacement(&self) -> T {
        self.displacement
            .iter()
            .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
            .fold(T::zero(), T::max)
    }
}

/// Energy budget of the coupled system (erg).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energy {
    /// `½ Σ δE·(X − X0) Δq` of the linear shell operator.
    pub elastic: f64,
    /// `½ ρ Σ |u|² h³`.
    pub kinetic: f64,
    /// `½ k Σ |X − X0|²` over clamped nodes.
    pub spring: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.elastic + self.kinetic + self.spring
    }
}

/// A fully assembled fluid-shell system.
pub struct Simulation<T: Real> {
    pub cfg: ModelConfig,
    pub grid: SurfaceGrid<T>,
    pub geometry: SurfaceGeometry<T>,
    pub coefficients: ShellCoefficients<T>,
    pub fluid: FluidState<T>,
    pub shell: ShellState<T>,
    solver: FluidSolver<T>,
    areas: Vec<T>,
}

impl<T: Real> Simulation<T> {
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        let grid = build_model_shell::<T>(cfg)?;
        Self::with_grid(cfg, grid)
    }

    /// Assembles the system on a given reference surface.
    pub fn with_grid(cfg: &ModelConfig, grid: SurfaceGrid<T>) -> Result<Self> {
        cfg.validate()?;
        let geometry = SurfaceGeometry::build(&grid)?;
        let h0 = if grid.lattice.n1 == cfg.n1() && grid.lattice.n2 == cfg.n2() {
            node_thickness::<T>(cfg)?
        } else {
            return Err(Error::ShapeMismatch(format!(
                "grid {}x{} does not match config {}x{}",
                grid.lattice.n1,
                grid.lattice.n2,
                cfg.n1(),
                cfg.n2()
            )));
        };
        let mat = MaterialParams { lambda: T::lit(cfg.lambda), mu: T::lit(cfg.mu), h0 };
        let coefficients = compute_coefficients(&geometry, &mat, cfg.coefficient_order)?;
        let solver = FluidSolver::new(Self::fluid_params(cfg))?;
        let nodes = grid.lattice.nodes();
        Ok(Simulation {
            cfg: cfg.clone(),
            areas: grid.lattice.areas(),
            fluid: FluidState::at_rest(cfg.n),
            shell: ShellState::at_rest(nodes),
            grid,
            geometry,
            coefficients,
            solver,
        })
    }

    pub fn fluid_params(cfg: &ModelConfig) -> FluidParams<T> {
        FluidParams { n: cfg.n, a: T::lit(cfg.a), rho: T::lit(cfg.rho), mu_f: T::lit(cfg.mu_f), dt: T::lit(cfg.dt) }
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.shell.positions(&self.grid)
    }

    /// Normal displacement `ω` at every node.
    pub fn omega(&self) -> Vec<T> {
        self.shell
            .displacement
            .iter()
            .zip(&self.geometry.frame.normal)
            .map(|(d, n)| d[0] * n[0] + d[1] * n[1] + d[2] * n[2])
            .collect()
    }

    /// Lagrangian force density: elastic response plus edge springs.
    pub fn shell_force(&self) -> Result<Vec<Vec3<T>>> {
        let disp = decompose_offset(&self.shell.displacement, &self.geometry)?;
        let elastic = compute_force(&disp, &self.coefficients, &self.geometry)?;
        let springs = clamp_force(&self.shell.displacement, &self.grid.lattice, T::lit(self.cfg.k_clamp), self.cfg.clamp_rows);
        Ok(elastic
            .cartesian
            .iter()
            .zip(&springs)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
            .collect())
    }

    pub fn energy(&self) -> Result<Energy> {
        let disp = decompose_offset(&self.shell.displacement, &self.geometry)?;
        let elastic = compute_force(&disp, &self.coefficients, &self.geometry)?;
        let sign = ELASTIC_FORCE_SIGN;
        let mut e_el = 0.0;
        for ((f, d), a) in elastic.cartesian.iter().zip(&self.shell.displacement).zip(&self.areas) {
            e_el += 0.5 * sign * (0..3).map(|c| (f[c] * d[c]).as_f64()).sum::<f64>() * a.as_f64();
        }
        let h = self.cfg.h();
        let kinetic = 0.5 * self.cfg.rho * h * h * h * self.fluid.u.iter().flatten().map(|v| v.as_f64().powi(2)).sum::<f64>();
        let mask = clamp_mask(self.grid.lattice.n1, self.grid.lattice.n2, self.cfg.clamp_rows);
        let spring = 0.5
            * self.cfg.k_clamp
            * self
                .shell
                .displacement
                .iter()
                .zip(&mask)
                .filter(|(_, m)| **m)
                .map(|(d, _)| d.iter().map(|c| c.as_f64().powi(2)).sum::<f64>())
                .sum::<f64>();
        Ok(Energy { elastic: e_el, kinetic, spring })
    }

    /// Advances fluid and shell by one step.
    pub fn step(&mut self) -> Result<()> {
        let params = self.solver.params().clone();
        let x = self.positions();
        let f = self.shell_force()?;
        let mut body = spread_force(&f, &x, &self.areas, &params)?;
        body.add(&impulse_force(self.shell.step, &self.cfg))?;
        self.fluid = self.solver.step(&self.fluid, &body)?;
        let vel = interpolate_velocity(&self.fluid.u, &x, &params)?;
        for (d, v) in self.shell.displacement.iter_mut().zip(&vel) {
            for c in 0..3 {
                d[c] += params.dt * v[c];
            }
        }
        self.shell.step += 1;
        self.shell.t = params.dt * T::of_usize(self.shell.step);
        let max = self.shell.max_displacement();
        let limit = 0.5 * self.cfg.a;
        if !max.is_finite() || max.as_f64() > limit {
            return Err(Error::Unstable { step: self.shell.step as u64, max_disp: max.as_f64(), limit });
        }
        Ok(())
    }

    /// Runs `steps` steps, calling `observe` after each one.
    pub fn run(&mut self, steps: usize, mut observe: impl FnMut(&Self) -> Result<()>) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
            observe(self)?;
        }
        Ok(())
    }
}
