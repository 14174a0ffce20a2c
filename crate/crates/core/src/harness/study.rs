//! Grid refinement study: common-grid sampling, error norms, rates.
//!
//! Runs store displacements `X - X0` rather than positions. Nested
//! lattices sample the same reference surface, so differences and the
//! relative-difference denominator are unchanged, while the rounding of
//! `X0` (about 1e-17 cm) stays out of signals that can be far smaller.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Vec3;
use crate::simulation::{IndexOrigin, ModelConfig, Simulation};

/// Discrete `L^p` norm over all nodes and Cartesian components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Inf];

    pub fn of(self, values: impl IntoIterator<Item = f64>) -> f64 {
        let it = values.into_iter().map(f64::abs);
        match self {
            Norm::L1 => it.sum(),
            Norm::L2 => it.map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Inf => it.fold(0.0, f64::max),
        }
    }

    pub fn of_vec3(self, x: &[Vec3<f64>]) -> f64 {
        self.of(x.iter().flatten().copied())
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Inf => "inf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "linf" | "max" => Ok(Norm::Inf),
            other => Err(Error::Config(format!("unknown norm {other:?} (expected 1, 2 or inf)"))),
        }
    }
}

fn stride(from: usize, to: usize) -> Option<usize> {
    if from == to {
        return Some(1);
    }
    if to < 2 || to > from || !(from - 1).is_multiple_of(to - 1) {
        return None;
    }
    Some((from - 1) / (to - 1))
}

/// Subsamples a node-major `from.0 × from.1` field onto `to` by striding.
/// Both corner nodes are kept, so `n - 1` of the target must divide
/// `n - 1` of the source along each axis.
pub fn restrict_to_common_grid<V: Copy>(x: &[V], from: (usize, usize), to: (usize, usize)) -> Result<Vec<V>> {
    if x.len() != from.0 * from.1 {
        return Err(Error::ShapeMismatch(format!("{} values for a {}x{} lattice", x.len(), from.0, from.1)));
    }
    let (Some(s1), Some(s2)) = (stride(from.0, to.0), stride(from.1, to.1)) else {
        return Err(Error::NonNested { from, to });
    };
    let mut out = Vec::with_capacity(to.0 * to.1);
    for k1 in 0..to.0 {
        for k2 in 0..to.1 {
            out.push(x[k1 * s1 * from.1 + k2 * s2]);
        }
    }
    Ok(out)
}

fn diff_norm(a: &[Vec3<f64>], b: &[Vec3<f64>], p: Norm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} nodes", a.len(), b.len())));
    }
    Ok(p.of(a.iter().zip(b).flat_map(|(u, v)| [u[0] - v[0], u[1] - v[1], u[2] - v[2]])))
}

/// `E = |X1 − X2|_p / |X1 − X1(0)|_p`.
pub fn relative_difference(x1: &[Vec3<f64>], x2: &[Vec3<f64>], x1_initial: &[Vec3<f64>], p: Norm) -> Result<f64> {
    let num = diff_norm(x1, x2, p)?;
    let den = diff_norm(x1, x1_initial, p)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Sampled shell history of one run, restricted to the common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRecord {
    /// `Δt·10⁸ / N`, e.g. `4/16`.
    pub label: String,
    pub n: usize,
    pub dt: f64,
    /// Common-grid dimensions.
    pub dims: (usize, usize),
    pub times: Vec<f64>,
    /// `X − X0` on the common grid at each sample time.
    pub displacement: Vec<Vec<Vec3<f64>>>,
    /// `|X(t) − X(0)|_p` per sample time, indexed as [`Norm::ALL`].
    pub norms: Vec<[f64; 3]>,
}

impl StudyRecord {
    pub fn new(n: usize, dt: f64, dims: (usize, usize)) -> Self {
        StudyRecord {
            label: run_label(n, dt),
            n,
            dt,
            dims,
            times: Vec::new(),
            displacement: Vec::new(),
            norms: Vec::new(),
        }
    }

    /// Appends one sample already on the common grid.
    pub fn push(&mut self, t: f64, displacement: Vec<Vec3<f64>>) -> Result<()> {
        if displacement.len() != self.dims.0 * self.dims.1 {
            return Err(Error::ShapeMismatch(format!(
                "{} nodes for common grid {}x{}",
                displacement.len(),
                self.dims.0,
                self.dims.1
            )));
        }
        self.norms.push(Norm::ALL.map(|p| p.of_vec3(&displacement)));
        self.times.push(t);
        self.displacement.push(displacement);
        Ok(())
    }
}

pub fn run_label(n: usize, dt: f64) -> String {
    let scaled = dt * 1e8;
    if (scaled - scaled.round()).abs() < 1e-9 {
        format!("{}/{}", scaled.round() as i64, n)
    } else {
        format!("{scaled}/{n}")
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check_compatible(r1: &StudyRecord, r2: &StudyRecord) -> Result<()> {
    if r1.times.len() != r2.times.len() || !r1.times.iter().zip(&r2.times).all(|(a, b)| same_time(*a, *b)) {
        return Err(Error::TimeSetMismatch);
    }
    if r1.dims != r2.dims {
        return Err(Error::NonNested { from: r1.dims, to: r2.dims });
    }
    Ok(())
}

/// `Σ_t |X1(t) − X2(t)|_p` over the sample times inside `window`
/// (inclusive, with a relative tolerance on the ends).
pub fn spacetime_norm(r1: &StudyRecord, r2: &StudyRecord, p: Norm, window: (f64, f64)) -> Result<f64> {
    check_compatible(r1, r2)?;
    let (lo, hi) = window;
    let mut total = 0.0;
    for (i, &t) in r1.times.iter().enumerate() {
        if (t >= lo || same_time(t, lo)) && (t <= hi || same_time(t, hi)) {
            total += diff_norm(&r1.displacement[i], &r2.displacement[i], p)?;
        }
    }
    Ok(total)
}

/// `log2(coarse / fine)`: the order implied by two successive differences.
pub fn rate(coarse_pair: f64, fine_pair: f64) -> Result<f64> {
    if !(coarse_pair > 0.0) || !(fine_pair > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok((coarse_pair / fine_pair).log2())
}

/// Rates for every consecutive triple of runs, ordered coarse to fine:
/// `log2(‖X_mid − X_coarse‖ / ‖X_fine − X_mid‖)`.
pub fn convergence_rates(records: &[StudyRecord], p: Norm, window: (f64, f64)) -> Result<Vec<f64>> {
    if records.len() < 3 {
        return Err(Error::InsufficientRuns { needed: 3, got: records.len() });
    }
    records
        .windows(3)
        .map(|w| {
            let coarse = spacetime_norm(&w[1], &w[0], p, window)?;
            let fine = spacetime_norm(&w[2], &w[1], p, window)?;
            rate(coarse, fine)
        })
        .collect()
}

/// `E(t)` between two runs; `X1` is the finer run. Entries are `None`
/// while the finer run has not moved.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSeries {
    pub coarse: String,
    pub fine: String,
    pub times: Vec<f64>,
    pub e: Vec<[Option<f64>; 3]>,
}

impl ErrorSeries {
    pub fn between(coarse: &StudyRecord, fine: &StudyRecord) -> Result<Self> {
        check_compatible(coarse, fine)?;
        let zero = vec![[0.0; 3]; fine.dims.0 * fine.dims.1];
        let mut e = Vec::with_capacity(fine.times.len());
        for i in 0..fine.times.len() {
            let mut row = [None; 3];
            for p in Norm::ALL {
                row[p.index()] = match relative_difference(&fine.displacement[i], &coarse.displacement[i], &zero, p) {
                    Ok(v) => Some(v),
                    Err(Error::ZeroDenominator) => None,
                    Err(err) => return Err(err),
                };
            }
            e.push(row);
        }
        Ok(ErrorSeries { coarse: coarse.label.clone(), fine: fine.label.clone(), times: fine.times.clone(), e })
    }

    pub fn values(&self, p: Norm) -> Vec<f64> {
        self.e.iter().filter_map(|row| row[p.index()]).collect()
    }

    /// Mean over the last quarter of the defined values is at most the
    /// mean over the first quarter.
    pub fn settles(&self, p: Norm) -> bool {
        let v = self.values(p);
        let q = v.len() / 4;
        if q == 0 {
            return false;
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        mean(&v[v.len() - q..]) <= mean(&v[..q])
    }
}

/// Run set of a refinement study.
#[derive(Clone, Debug)]
pub struct StudySpec {
    pub base: ModelConfig,
    /// `(N, Δt)` pairs, coarse to fine.
    pub runs: Vec<(usize, f64)>,
    pub t0: f64,
    /// Equally spaced sample times in `(0, T0]`.
    pub samples: usize,
    /// Shell rows and columns per 16 fluid points; the lattice is
    /// `rows·N/16 + 1` by `cols·N/16 + 1`, so every coarser lattice is a
    /// strided subset of every finer one.
    pub rows_per_16: usize,
    pub cols_per_16: usize,
}

impl StudySpec {
    /// The desk-scale study: `N = 16, 32, 64` with `Δt = 4, 2, 1 × 10⁻⁸ s`.
    pub fn scaled(base: ModelConfig) -> Self {
        StudySpec {
            base,
            runs: vec![(16, 4e-8), (32, 2e-8), (64, 1e-8)],
            t0: 4e-6,
            samples: 100,
            rows_per_16: 160,
            cols_per_16: 6,
        }
    }

    pub fn run_config(&self, n: usize, dt: f64) -> ModelConfig {
        let mut cfg = self.base.clone();
        cfg.n = n;
        cfg.dt = dt;
        cfg.t0 = self.t0;
        cfg.n1 = Some(self.rows_per_16 * n / 16 + 1);
        cfg.n2 = Some(self.cols_per_16 * n / 16 + 1);
        cfg.index_origin = IndexOrigin::Zero;
        cfg.output_every = 0;
        cfg
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (1..=self.samples).map(|j| self.t0 * j as f64 / self.samples as f64).collect()
    }

    /// Closed interval `[T0/2, T0]` used for the space-time norms.
    pub fn window(&self) -> (f64, f64) {
        (0.5 * self.t0, self.t0)
    }

    fn validate(&self) -> Result<()> {
        if self.runs.is_empty() || self.samples == 0 {
            return Err(Error::Config("study needs at least one run and one sample".into()));
        }
        for &(n, dt) in &self.runs {
            if n % 16 != 0 {
                return Err(Error::Config(format!("study grid N = {n} is not a multiple of 16")));
            }
            for t in self.sample_times() {
                let k = (t / dt).round();
                if (k * dt - t).abs() > 1e-6 * dt {
                    return Err(Error::Config(format!("sample time {t:e} is not a multiple of dt = {dt:e}")));
                }
            }
        }
        Ok(())
    }

    /// Common-grid dimensions: the coarsest run's lattice.
    pub fn common_dims(&self) -> (usize, usize) {
        let n = self.runs.iter().map(|r| r.0).min().unwrap_or(16);
        (self.rows_per_16 * n / 16 + 1, self.cols_per_16 * n / 16 + 1)
    }
}

/// Runs one member of a study and samples it on the common grid.
pub fn run_study_member(spec: &StudySpec, n: usize, dt: f64) -> Result<StudyRecord> {
    let cfg = spec.run_config(n, dt);
    let dims = spec.common_dims();
    let own = (cfg.n1(), cfg.n2());
    let mut sim = Simulation::<f64>::new(&cfg)?;
    let mut record = StudyRecord::new(n, dt, dims);
    let started = std::time::Instant::now();
    for t in spec.sample_times() {
        let target = (t / dt).round() as usize;
        while sim.shell.step < target {
            sim.step()?;
        }
        record.push(t, restrict_to_common_grid(&sim.shell.displacement, own, dims)?)?;
    }
    log::info!("run {} finished {} steps in {:.1?}", record.label, sim.shell.step, started.elapsed());
    Ok(record)
}

/// Adjacent-pair space-time norms, indexed as [`Norm::ALL`].
#[derive(Clone, Debug, PartialEq)]
pub struct PairNorms {
    pub coarse: String,
    pub fine: String,
    pub values: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub runs: [String; 3],
    /// Indexed as [`Norm::ALL`]; `None` when a norm vanished.
    pub values: [Option<f64>; 3],
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub records: Vec<StudyRecord>,
    pub window: (f64, f64),
    pub pairs: Vec<PairNorms>,
    pub rates: Vec<RateEstimate>,
    pub errors: Vec<ErrorSeries>,
}

impl StudyReport {
    pub fn assemble(records: Vec<StudyRecord>, window: (f64, f64)) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InsufficientRuns { needed: 2, got: records.len() });
        }
        let mut pairs = Vec::new();
        let mut errors = Vec::new();
        for w in records.windows(2) {
            let mut values = [0.0; 3];
            for p in Norm::ALL {
                values[p.index()] = spacetime_norm(&w[1], &w[0], p, window)?;
            }
            pairs.push(PairNorms { coarse: w[0].label.clone(), fine: w[1].label.clone(), values });
            errors.push(ErrorSeries::between(&w[0], &w[1])?);
        }
        let rates = pairs
            .windows(2)
            .zip(records.windows(3))
            .map(|(pp, rr)| RateEstimate {
                runs: [rr[0].label.clone(), rr[1].label.clone(), rr[2].label.clone()],
                values: Norm::ALL.map(|p| rate(pp[0].values[p.index()], pp[1].values[p.index()]).ok()),
            })
            .collect();
        Ok(StudyReport { records, window, pairs, rates, errors })
    }

    pub fn rate(&self, triple: usize, p: Norm) -> Option<f64> {
        self.rates.get(triple).and_then(|r| r.values[p.index()])
    }

    /// Writes `study_norms.csv`, `study_rates.csv` and `study_error.csv`.
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join("study_norms.csv");
        let mut w = csv_writer(&path)?;
        let wrap = |e| Error::Csv { path: path.clone(), source: e };
        w.write_record(["coarse", "fine", "norm", "value"]).map_err(wrap)?;
        for pair in &self.pairs {
            for p in Norm::ALL {
                w.write_record([&pair.coarse, &pair.fine, &p.to_string(), &format!("{:e}", pair.values[p.index()])])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("study_rates.csv");
        let mut w = csv_writer(&path)?;
        let wrap = |e| Error::Csv { path: path.clone(), source: e };
        w.write_record(["coarse", "mid", "fine", "norm", "rate"]).map_err(wrap)?;
        for r in &self.rates {
            for p in Norm::ALL {
                let v = r.values[p.index()].map(|v| format!("{v:.6}")).unwrap_or_default();
                w.write_record([&r.runs[0], &r.runs[1], &r.runs[2], &p.to_string(), &v]).map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("study_error.csv");
        let mut w = csv_writer(&path)?;
        let wrap = |e| Error::Csv { path: path.clone(), source: e };
        w.write_record(["coarse", "fine", "t", "e1", "e2", "einf"]).map_err(wrap)?;
        for s in &self.errors {
            for (t, row) in s.times.iter().zip(&s.e) {
                let cell = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
                w.write_record([s.coarse.clone(), s.fine.clone(), format!("{t:e}"), cell(row[0]), cell(row[1]), cell(row[2])])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })
}

/// Executes every run of `spec` (concurrently) and assembles the report.
pub fn run_convergence_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    let results: Vec<Result<StudyRecord>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            spec.runs.iter().map(|&(n, dt)| s.spawn(move || run_study_member(spec, n, dt))).collect();
        handles.into_iter().map(|h| h.join().expect("study run panicked")).collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    StudyReport::assemble(records, spec.window())
}
