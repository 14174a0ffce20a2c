//! Impulse response of the model shell along its centreline.

use std::path::Path;

use crate::error::{Error, Result};
use crate::simulation::{row_q1, ModelConfig, Simulation, ThicknessLaw};

/// Run length and snapshot cadence of the traveling-wave experiment.
#[derive(Clone, Debug)]
pub struct WaveSpec {
    pub cfg: ModelConfig,
    pub steps: usize,
    pub every: usize,
}

impl WaveSpec {
    /// `N = 32`, `Δt = 4·10⁻⁸ s`, compliance-matched thickness, a snapshot
    /// every 50 steps over 1000 steps.
    pub fn scaled() -> Self {
        let cfg = ModelConfig { n: 32, dt: 4e-8, thickness_law: ThicknessLaw::Exact, ..Default::default() };
        WaveSpec { cfg, steps: 1000, every: 50 }
    }
}

/// Centreline normal displacement at one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub step: usize,
    pub t: f64,
    /// `ω` along `q1`, averaged over the middle column(s).
    pub omega: Vec<f64>,
}

impl Profile {
    pub fn mean(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.omega.len() as f64
    }

    /// Row of the largest `|ω|` (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.omega.iter().enumerate() {
            if v.abs() > self.omega[best].abs() {
                best = i;
            }
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.omega[self.argmax()].abs()
    }
}

/// Centreline `ω` of `n1 × n2` node values.
pub fn centreline(omega: &[f64], n1: usize, n2: usize) -> Vec<f64> {
    let cols: Vec<usize> = if n2 % 2 == 1 { vec![n2 / 2] } else { vec![n2 / 2 - 1, n2 / 2] };
    (0..n1).map(|k1| cols.iter().map(|&k2| omega[k1 * n2 + k2]).sum::<f64>() / cols.len() as f64).collect()
}

#[derive(Clone, Debug)]
pub struct WaveReport {
    pub q1: Vec<f64>,
    pub profiles: Vec<Profile>,
    /// First snapshot after the mean centreline displacement stops growing
    /// downward.
    pub rebound: usize,
}

impl WaveReport {
    pub fn from_profiles(q1: Vec<f64>, profiles: Vec<Profile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Config("no snapshots recorded".into()));
        }
        let means: Vec<f64> = profiles.iter().map(Profile::mean).collect();
        let rebound = (1..means.len()).find(|&i| means[i] > means[i - 1]).unwrap_or(0);
        Ok(WaveReport { q1, profiles, rebound })
    }

    /// Mean centreline displacement at the first snapshot is downward.
    pub fn initially_downward(&self) -> bool {
        self.profiles[0].mean() < 0.0
    }

    pub fn argmax_rows(&self) -> Vec<usize> {
        self.profiles.iter().map(Profile::argmax).collect()
    }

    /// Arg-max of `|ω|` never moves toward the base after the rebound.
    pub fn front_advances(&self) -> bool {
        self.argmax_rows()[self.rebound..].windows(2).all(|w| w[1] >= w[0])
    }

    /// `wave_summary.csv` (per snapshot) and `wave_profile.csv` (long
    /// format, one row per snapshot and lattice row).
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("wave_summary.csv");
        let wrap = |e: csv::Error| Error::Csv { path: path.clone(), source: e };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        w.write_record(["step", "t", "mean_omega", "argmax_row", "argmax_q1", "max_abs_omega"]).map_err(wrap)?;
        for p in &self.profiles {
            let k = p.argmax();
            w.write_record([
                p.step.to_string(),
                format!("{:e}", p.t),
                format!("{:e}", p.mean()),
                k.to_string(),
                format!("{:.6}", self.q1[k]),
                format!("{:e}", p.max_abs()),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("wave_profile.csv");
        let wrap = |e: csv::Error| Error::Csv { path: path.clone(), source: e };
        let mut w = csv::Writer::from_path(&path).map_err(wrap)?;
        w.write_record(["step", "t", "row", "q1", "omega"]).map_err(wrap)?;
        for p in &self.profiles {
            for (k, (q, v)) in self.q1.iter().zip(&p.omega).enumerate() {
                w.write_record([p.step.to_string(), format!("{:e}", p.t), k.to_string(), format!("{q:.6}"), format!("{v:e}")])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

/// Runs the impulse experiment, calling `snapshot` at every recorded step.
pub fn run_wave_with(
    spec: &WaveSpec,
    mut snapshot: impl FnMut(&Simulation<f64>) -> Result<()>,
) -> Result<WaveReport> {
    if spec.every == 0 {
        return Err(Error::Config("snapshot cadence must be positive".into()));
    }
    let mut sim = Simulation::<f64>::new(&spec.cfg)?;
    let (n1, n2) = (sim.grid.lattice.n1, sim.grid.lattice.n2);
    let q1 = (0..n1).map(|k| row_q1(&spec.cfg, k)).collect();
    let mut profiles = Vec::new();
    for _ in 0..spec.steps {
        sim.step()?;
        if sim.shell.step % spec.every == 0 {
            profiles.push(Profile { step: sim.shell.step, t: sim.shell.t, omega: centreline(&sim.omega(), n1, n2) });
            snapshot(&sim)?;
        }
    }
    WaveReport::from_profiles(q1, profiles)
}

pub fn run_wave(spec: &WaveSpec) -> Result<WaveReport> {
    run_wave_with(spec, |_| Ok(()))
}
