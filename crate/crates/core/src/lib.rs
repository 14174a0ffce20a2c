//! Immersed boundary simulation of a thin elastic shell in a periodic
//! incompressible viscous fluid.
//!
//! The numerical core is generic over the floating point type; the aliases
//! at the bottom of this file fix it to `f64` for everyday use.

pub mod coupling;
pub mod error;
pub mod fluid;
pub mod geometry;
pub mod harness;
pub mod scalar;
pub mod shell;
pub mod simulation;
pub mod tensor;

pub use error::{Error, Result};
pub use coupling::{interpolate_velocity, phi, spread_force, DeltaKernel};
pub use fluid::{fluid_step, BodyForce, FluidParams, FluidSolver, FluidState};
pub use geometry::{Frame, SurfaceGeometry, SurfaceGrid};
pub use scalar::Real;
pub use shell::{
    compute_coefficients, compute_force, decompose_displacement, CoefficientOrder, Displacement, MaterialParams,
    ShellCoefficients, ShellForceDensity,
};
pub use simulation::{ModelConfig, Simulation, Snapshot};
pub use tensor::{Lattice, Slot, TensorField};

pub type Lattice64 = Lattice<f64>;
pub type TensorField64 = TensorField<f64>;
pub type SurfaceGrid64 = SurfaceGrid<f64>;
pub type SurfaceGeometry64 = SurfaceGeometry<f64>;
pub type MaterialParams64 = MaterialParams<f64>;
pub type ShellCoefficients64 = ShellCoefficients<f64>;
pub type FluidParams64 = FluidParams<f64>;
pub type FluidState64 = FluidState<f64>;
pub type Simulation64 = Simulation<f64>;
