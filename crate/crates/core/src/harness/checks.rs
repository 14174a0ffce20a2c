//! Self-contained pass/fail suites for the kernel, fluid solver, coupling
//! and the flat-plate limit of the shell operator.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};

use crate::coupling::{interpolate_velocity, phi, spread_force};
use crate::error::Result;
use crate::fluid::{linear_residual, FluidParams, FluidSolver};
use crate::geometry::{SurfaceGeometry, SurfaceGrid};
use crate::shell::{compute_coefficients, compute_force, CoefficientOrder, Displacement, MaterialParams, ELASTIC_FORCE_SIGN};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of one suite: a list of named assertions.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub title: String,
    pub lines: Vec<CheckLine>,
    pub elapsed: Duration,
}

impl CheckReport {
    pub fn new(title: impl Into<String>) -> Self {
        CheckReport { title: title.into(), lines: Vec::new(), elapsed: Duration::ZERO }
    }

    pub fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine { name: name.into(), passed, detail: detail.into() });
    }

    /// Records `value <= tol`.
    pub fn within(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.record(name, value <= tol, format!("{value:.3e} (tol {tol:.0e})"));
    }

    pub fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|l| l.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| !l.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({:.2?})", self.title, self.elapsed)?;
        for l in &self.lines {
            writeln!(f, "  {} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail)?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Deliberate defects for exercising the suites themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFault {
    /// A small tail beyond the support radius.
    SupportViolation,
}

const KERNEL_SAMPLES: usize = 10_000;

/// Partition of unity, parity sums, moments and fixed values of `φ`.
pub fn kernel_check(fault: Option<KernelFault>) -> CheckReport {
    let start = Instant::now();
    let kernel = |r: f64| match fault {
        Some(KernelFault::SupportViolation) if (2.0..2.5).contains(&r.abs()) => phi(r) + 1e-3,
        _ => phi(r),
    };
    let mut report = CheckReport::new("kernel");
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed);
    let (mut unity, mut parity, mut moment, mut square) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..KERNEL_SAMPLES {
        let r: f64 = rng.gen_range(-4.0..4.0);
        let (mut all, mut even, mut odd, mut first, mut sq) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in -8i32..=8 {
            let d = r - j as f64;
            let w = kernel(d);
            all += w;
            first += d * w;
            sq += w * w;
            if j.rem_euclid(2) == 0 {
                even += w;
            } else {
                odd += w;
            }
        }
        unity = unity.max((all - 1.0).abs());
        parity = parity.max((even - 0.5).abs()).max((odd - 0.5).abs());
        moment = moment.max(first.abs());
        square = square.max((sq - 0.375).abs());
    }
    report.within("sum_j phi(r-j) = 1", unity, 1e-12);
    report.within("even and odd sums = 1/2", parity, 1e-12);
    report.within("sum_j (r-j) phi(r-j) = 0", moment, 1e-12);
    report.within("sum_j phi(r-j)^2 = 3/8", square, 1e-12);
    report.within("phi(0) = 1/2", (kernel(0.0) - 0.5).abs(), 1e-15);
    report.within("phi(1) = 1/4", (kernel(1.0) - 0.25).abs(), 1e-15);
    let outside = (0..KERNEL_SAMPLES).map(|_| {
        let r: f64 = rng.gen_range(2.0..6.0);
        kernel(if rng.gen_bool(0.5) { r } else { -r })
    });
    report.within("phi(|r| >= 2) = 0", max_abs(outside.chain([kernel(2.0), kernel(-2.0)])), 0.0);
    let elapsed = start.elapsed();
    report.record("runtime < 1 s", elapsed < Duration::from_secs(1), format!("{elapsed:.2?}"));
    report.elapsed = elapsed;
    report
}

/// Residual and divergence of the FFT solve for random right-hand sides.
pub fn fluid_check(n: usize, cases: usize) -> Result<CheckReport> {
    let start = Instant::now();
    let params = FluidParams::<f64> { n, a: 0.1, rho: 1.034, mu_f: 0.0197, dt: 1e-8 };
    let mut solver = FluidSolver::new(params.clone())?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xf1d);
    let (mut res_worst, mut div_worst) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let rhs: [Vec<f64>; 3] = [0, 1, 2].map(|_| (0..params.points()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let (u, p) = solver.solve_linear(&rhs)?;
        let (res, div) = linear_residual(&params, &u, &p, &rhs);
        let rn = max_abs(rhs.iter().flatten().copied());
        let un = max_abs(u.iter().flatten().copied());
        res_worst = res_worst.max(max_abs(res.iter().flatten().copied()) / rn);
        div_worst = div_worst.max(max_abs(div) / un);
    }
    let mut report = CheckReport::new(format!("fluid solver (N = {n}, {cases} right-hand sides)"));
    report.within("momentum residual / |r|", res_worst, 1e-10);
    report.within("max |D0 . u| / |u|", div_worst, 1e-10);
    let elapsed = start.elapsed();
    report.record("runtime < 10 s", elapsed < Duration::from_secs(10), format!("{elapsed:.2?}"));
    report.elapsed = elapsed;
    Ok(report)
}

/// Adjointness of spreading and interpolation, and force conservation.
pub fn coupling_check(n: usize, points: usize, trials: usize) -> Result<CheckReport> {
    let start = Instant::now();
    let params = FluidParams::<f64> { n, a: 0.1, rho: 1.0, mu_f: 1.0, dt: 1.0 };
    let h3 = params.h().powi(3);
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xc0);
    let (mut adjoint, mut conserve) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let mut v3 = |lo: f64, hi: f64| -> Vec<[f64; 3]> {
            (0..points).map(|_| [0, 1, 2].map(|_| rng.gen_range(lo..hi))).collect()
        };
        // positions deliberately stray outside the box to exercise wrapping
        let x = v3(-0.05, 0.15);
        let f = v3(-1.0, 1.0);
        let dq: Vec<f64> = (0..points).map(|_| rng.gen_range(1e-5..1e-4)).collect();
        let u: [Vec<f64>; 3] = [0, 1, 2].map(|_| (0..params.points()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let big_f = spread_force(&f, &x, &dq, &params)?;
        let uq = interpolate_velocity(&u, &x, &params)?;
        let lhs: f64 = (0..3).map(|c| big_f.f[c].iter().zip(&u[c]).map(|(a, b)| a * b).sum::<f64>()).sum::<f64>() * h3;
        let rhs: f64 = (0..points).map(|q| (0..3).map(|c| f[q][c] * uq[q][c]).sum::<f64>() * dq[q]).sum();
        adjoint = adjoint.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        let total = big_f.total(params.h());
        for c in 0..3 {
            let lag: f64 = (0..points).map(|q| f[q][c] * dq[q]).sum();
            let scale: f64 = (0..points).map(|q| (f[q][c] * dq[q]).abs()).sum();
            conserve = conserve.max((total[c] - lag).abs() / scale);
        }
    }
    let mut report = CheckReport::new(format!("coupling (N = {n}, {points} points, {trials} trials)"));
    report.within("(S f, u) = (f, S* u)", adjoint, 1e-12);
    report.within("sum F h^3 = sum f dq", conserve, 1e-12);
    report.elapsed = start.elapsed();
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlateFault {
    /// Breaks the `αβ` symmetry of the bending coefficient tensor.
    LambdaAsymmetry,
}

/// Dense one-dimensional difference matrix, centred inside and one-sided
/// at the ends, matching the surface lattice operator.
fn diff_matrix(n: usize, h: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    m[0][0] = -1.0 / h;
    m[0][1] = 1.0 / h;
    m[n - 1][n - 2] = -1.0 / h;
    m[n - 1][n - 1] = 1.0 / h;
    for (i, row) in m.iter_mut().enumerate().take(n - 1).skip(1) {
        row[i - 1] = -0.5 / h;
        row[i + 1] = 0.5 / h;
    }
    m
}

/// Applies a 1D matrix along `axis` of a node-major `n1 × n2` field.
fn apply(m: &[Vec<f64>], f: &[f64], n1: usize, n2: usize, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 0..n1 {
        for j in 0..n2 {
            out[i * n2 + j] = if axis == 0 {
                m[i].iter().enumerate().map(|(k, v)| v * f[k * n2 + j]).sum()
            } else {
                m[j].iter().enumerate().map(|(k, v)| v * f[i * n2 + k]).sum()
            };
        }
    }
    out
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    max_abs(got.iter().zip(want).map(|(a, b)| a - b)) / max_abs(want.iter().copied())
}

const PLATE_NODES: usize = 65;
const PLATE_DQ: f64 = 1.0 / 64.0;

/// Flat-plate limit of the shell operator on a 65 × 65 chart.
///
/// The normal force must equal `(2/3) h0³ D Δ²ω` and the tangential force
/// for a gradient field must equal `2 h0 D ∇ div W`, where `D` is the plate
/// modulus and `Δ`, `∇` are composed from dense difference matrices.
pub fn plate_check(fault: Option<PlateFault>) -> Result<CheckReport> {
    let start = Instant::now();
    let (n, dq) = (PLATE_NODES, PLATE_DQ);
    let grid = SurfaceGrid::from_fn(n, n, dq, dq, |k1, k2| [k1 as f64 * dq, k2 as f64 * dq, 0.0])?;
    let geom = SurfaceGeometry::build(&grid)?;
    let nodes = geom.nodes();
    let (lambda, mu, h0) = (26_197_503.0, 523_950.0, 0.002);
    let coeffs = |h0: f64| -> Result<_> {
        let mat = MaterialParams::uniform(lambda, mu, h0, nodes);
        let mut c = compute_coefficients(&geom, &mat, CoefficientOrder::Leading)?;
        if fault == Some(PlateFault::LambdaAsymmetry) {
            let scale = c.abar.max_abs();
            for node in 0..nodes {
                let v = c.abar.at(node, &[0, 1, 0, 0]);
                c.abar.set(node, &[0, 1, 0, 0], v + 1e-3 * scale);
            }
        }
        Ok((mat, c))
    };
    let (mat, c) = coeffs(h0)?;
    let plate = mat.plate_modulus();
    let mut report = CheckReport::new("plate limit (65 x 65 flat chart)");

    // coefficient values in the flat limit
    let l0 = c.lambda0.max_abs();
    let mut dev_abar = 0.0f64;
    let mut dev_obbar = 0.0f64;
    for node in 0..nodes {
        for ((a, o), l) in c.abar.node(node).iter().zip(c.obbar.node(node)).zip(c.lambda0.node(node)) {
            dev_abar = dev_abar.max((a - 2.0 / 3.0 * h0.powi(3) * l).abs() / (h0.powi(3) * l0));
            dev_obbar = dev_obbar.max((o - 2.0 * h0 * l).abs() / (h0 * l0));
        }
    }
    report.within("Abar = (2/3) h0^3 Lambda0", dev_abar, 1e-12);
    report.within("Obbar = 2 h0 Lambda0", dev_obbar, 1e-12);
    let rest = [&c.a, &c.abbar, &c.phi, &c.phibar, &c.psi, &c.psibar, &c.omega, &c.omegabar]
        .iter()
        .map(|t| t.max_abs())
        .fold(0.0, f64::max);
    report.within("remaining coefficients vanish", rest / (h0 * l0), 1e-12);

    let d = diff_matrix(n, dq);
    let lap = |f: &[f64]| -> Vec<f64> {
        let a = apply(&d, &apply(&d, f, n, n, 0), n, n, 0);
        let b = apply(&d, &apply(&d, f, n, n, 1), n, n, 1);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x91a7e);
    let omega: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let normal = Displacement::from_parts(&geom, omega.clone(), vec![[0.0; 2]; nodes]);
    let f = compute_force(&normal, &c, &geom)?;
    let variation: Vec<f64> = f.f3.iter().map(|v| v * ELASTIC_FORCE_SIGN).collect();
    let bih = lap(&lap(&omega));
    let want: Vec<f64> = bih.iter().map(|v| 2.0 / 3.0 * h0.powi(3) * plate * v).collect();
    report.within("normal force vs (2/3) h0^3 D biharmonic", rel_err(&variation, &want), 1e-10);
    report.within("normal field has no tangential force", max_abs(f.fmu.iter().flatten().copied()) / max_abs(want.iter().copied()), 1e-12);

    let pot: Vec<f64> = (0..nodes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w1 = apply(&d, &pot, n, n, 0);
    let w2 = apply(&d, &pot, n, n, 1);
    let w: Vec<[f64; 2]> = w1.iter().zip(&w2).map(|(a, b)| [*a, *b]).collect();
    let tangential = Displacement::from_parts(&geom, vec![0.0; nodes], w);
    let ft = compute_force(&tangential, &c, &geom)?;
    let div: Vec<f64> = apply(&d, &w1, n, n, 0).iter().zip(apply(&d, &w2, n, n, 1)).map(|(a, b)| a + b).collect();
    let mut worst = 0.0f64;
    for axis in 0..2 {
        let want: Vec<f64> = apply(&d, &div, n, n, axis).iter().map(|v| -2.0 * h0 * plate * v).collect();
        let got: Vec<f64> = ft.fmu.iter().map(|v| v[axis] * ELASTIC_FORCE_SIGN).collect();
        worst = worst.max(rel_err(&got, &want));
    }
    report.within("tangential force vs 2 h0 D grad div W", worst, 1e-10);

    let (_, c2) = coeffs(2.0 * h0)?;
    let f2 = compute_force(&normal, &c2, &geom)?;
    let scaled: Vec<f64> = f.f3.iter().map(|v| 8.0 * v).collect();
    report.within("doubling h0 scales the normal force by 8", rel_err(&f2.f3, &scaled), 1e-10);

    report.elapsed = start.elapsed();
    Ok(report)
}
