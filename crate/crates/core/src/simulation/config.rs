use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shell::CoefficientOrder;

/// Thickness profile of the model shell along its length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThicknessLaw {
    /// `0.001 (1 + 2q/3)^{5/3} 10^{-2q/9}` cm, the compliance-matched profile.
    Exact,
    /// `0.001 (1 + 5q)` cm, the linear tabulated profile.
    #[default]
    Table,
}

/// First index of the shell lattice in the position formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexOrigin {
    /// `k = 1..n`, so the first row sits at `q = Δq`.
    #[default]
    One,
    /// `k = 0..n-1`; lattices of different resolution nest exactly.
    Zero,
}

/// Model and run parameters. All lengths in cm, times in s, masses in g.
///
/// `rho` is a density (g cm⁻³) and `mu_f` a dynamic viscosity
/// (g cm⁻¹ s⁻¹).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Side of the periodic fluid cube.
    pub a: f64,
    /// Fluid lattice points per side.
    pub n: usize,
    pub rho: f64,
    pub mu_f: f64,
    /// Length of the full basilar membrane (sets the width taper).
    pub l_bm: f64,
    /// Length of the model shell.
    pub length: f64,
    /// Width at the base.
    pub w0: f64,
    /// Width at the apex of the full membrane.
    pub w1: f64,
    /// Helix angular rate; `1.8π / length` when absent.
    pub alpha: Option<f64>,
    /// Helix radius.
    pub radius: f64,
    /// Helix rise per radian.
    pub pitch: f64,
    /// Shell lattice rows along the length; `10 N` when absent.
    pub n1: Option<usize>,
    /// Shell lattice columns across the width; `3N/8` when absent.
    pub n2: Option<usize>,
    /// Lamé coefficients of the shell.
    pub lambda: f64,
    pub mu: f64,
    pub dt: f64,
    /// Total simulated time.
    pub t0: f64,
    pub thickness_law: ThicknessLaw,
    pub coefficient_order: CoefficientOrder,
    pub index_origin: IndexOrigin,
    /// Edge spring stiffness (g s⁻²).
    pub k_clamp: f64,
    /// Number of clamped rows along each edge.
    pub clamp_rows: usize,
    /// Height of the impulse plane (periodic, so `a` and `0` coincide).
    pub z_imp: f64,
    /// Surface density of the downward impulse force (g cm⁻¹ s⁻²).
    pub f_imp: f64,
    /// Duration over which `f_imp` acts. The whole impulse `f_imp·τ` is
    /// delivered in step 0, so runs with different `dt` receive the same
    /// momentum.
    pub impulse_duration: f64,
    /// Whether the impulse is applied at step 0.
    pub impulse: bool,
    /// Translation of the helix axis origin; centres the shell when absent.
    pub shell_offset: Option<[f64; 3]>,
    /// Steps between recorded snapshots (0 disables).
    pub output_every: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            a: 0.1,
            n: 32,
            rho: 1.034,
            mu_f: 0.0197,
            l_bm: 3.5,
            length: 0.5,
            w0: 0.015,
            w1: 0.056,
            alpha: None,
            radius: 1.0 / 30.0,
            pitch: 0.01,
            n1: None,
            n2: None,
            lambda: 26_197_503.0,
            mu: 523_950.0,
            dt: 4.0e-8,
            t0: 2.0e-6,
            thickness_law: ThicknessLaw::Table,
            coefficient_order: CoefficientOrder::Leading,
            index_origin: IndexOrigin::One,
            k_clamp: DEFAULT_K_CLAMP,
            clamp_rows: 2,
            z_imp: 0.0,
            f_imp: 4.0e-7,
            impulse_duration: 4.0e-8,
            impulse: true,
            shell_offset: None,
            output_every: 0,
        }
    }
}

/// Edge spring stiffness used when the config does not set one.
pub const DEFAULT_K_CLAMP: f64 = 1.0e7;

impl ModelConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ModelConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.8 * std::f64::consts::PI / self.length)
    }

    pub fn n1(&self) -> usize {
        self.n1.unwrap_or(10 * self.n)
    }

    pub fn n2(&self) -> usize {
        self.n2.unwrap_or(3 * self.n / 8)
    }

    pub fn h(&self) -> f64 {
        self.a / self.n as f64
    }

    /// Width of the strip at arc parameter `q1`.
    pub fn width(&self, q1: f64) -> f64 {
        self.w0 + q1 / self.l_bm * (self.w1 - self.w0)
    }

    pub fn steps(&self) -> usize {
        (self.t0 / self.dt).round() as usize
    }

    pub fn shell_offset(&self) -> [f64; 3] {
        self.shell_offset.unwrap_or([0.5 * self.a, 0.5 * self.a, 0.5 * (self.a - self.pitch * self.alpha() * self.length)])
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a", self.a),
            ("rho", self.rho),
            ("mu_f", self.mu_f),
            ("l_bm", self.l_bm),
            ("length", self.length),
            ("w0", self.w0),
            ("w1", self.w1),
            ("radius", self.radius),
            ("mu", self.mu),
            ("dt", self.dt),
            ("t0", self.t0),
            ("impulse_duration", self.impulse_duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("k_clamp", self.k_clamp), ("f_imp", self.f_imp), ("pitch", self.pitch), ("lambda", self.lambda)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("{name} = {v} must be non-negative")));
            }
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!("n = {} must be a power of two >= 4", self.n)));
        }
        if self.n1() < 5 || self.n2() < 5 {
            return Err(Error::Config(format!("shell lattice {}x{} is below 5x5", self.n1(), self.n2())));
        }
        if 2 * self.clamp_rows > self.n1().min(self.n2()) {
            return Err(Error::Config(format!("{} clamp rows do not fit the lattice", self.clamp_rows)));
        }
        Ok(())
    }
}
