//! Analytic surfaces for checking the discrete geometry.
//!
//! Exact first and second derivatives come from nested dual numbers. The
//! lattice operator `D_2` on the model shell is `(1/w) ∂_s` at fixed `q1`
//! (`s ∈ [0, 1]` across the width), so the reference values are built
//! with the same pair of derivations rather than coordinate derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::time::Instant;

use crate::error::Result;
use crate::geometry::{SurfaceGeometry, SurfaceGrid};
use crate::scalar::{cross3, dot3, norm3, Vec3};
use crate::simulation::{build_model_shell, row_q1, IndexOrigin, ModelConfig};
use crate::tensor::Lattice;

use super::checks::CheckReport;

trait Num: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self> {
    fn c(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Num for f64 {
    fn c(v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Dual<S> {
    re: S,
    eps: S,
}

impl<S: Num> Add for Dual<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<S: Num> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<S: Num> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { re: self.re * o.re, eps: self.re * o.eps + self.eps * o.re }
    }
}

impl<S: Num> Div for Dual<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Dual { re: self.re / o.re, eps: (self.eps * o.re - self.re * o.eps) / (o.re * o.re) }
    }
}

impl<S: Num> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<S: Num> Num for Dual<S> {
    fn c(v: f64) -> Self {
        Dual { re: S::c(v), eps: S::c(0.0) }
    }
    fn sin(self) -> Self {
        Dual { re: self.re.sin(), eps: self.eps * self.re.cos() }
    }
    fn cos(self) -> Self {
        Dual { re: self.re.cos(), eps: -(self.eps * self.re.sin()) }
    }
}

type D2 = Dual<Dual<f64>>;

/// Test surfaces. Parameters are `(q1, s)`; `q2 = c(q1)·s` is the lattice
/// coordinate across the strip.
#[derive(Clone, Debug)]
pub enum AnalyticSurface {
    /// `R (cos(q1/R), sin(q1/R)) + s e_z` on `[0, 0.4] × [0, 0.3]`.
    Cylinder { radius: f64 },
    /// Sphere of radius `R` in polar/azimuth angles on `[0.5, 1.1] × [0, 0.6]`.
    SpherePatch { radius: f64 },
    /// The model strip of `cfg`.
    Helicoid(ModelConfig),
}

impl AnalyticSurface {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyticSurface::Cylinder { .. } => "cylinder",
            AnalyticSurface::SpherePatch { .. } => "sphere patch",
            AnalyticSurface::Helicoid(_) => "helicoid",
        }
    }

    fn position<S: Num>(&self, q1: S, s: S) -> [S; 3] {
        match self {
            AnalyticSurface::Cylinder { radius } => {
                let r = S::c(*radius);
                let a = q1 / r;
                [r * a.cos(), r * a.sin(), s]
            }
            AnalyticSurface::SpherePatch { radius } => {
                let r = S::c(*radius);
                [r * q1.sin() * s.cos(), r * q1.sin() * s.sin(), r * q1.cos()]
            }
            AnalyticSurface::Helicoid(cfg) => {
                let al = S::c(cfg.alpha());
                let w = S::c(cfg.w0) + q1 * S::c((cfg.w1 - cfg.w0) / cfg.l_bm);
                let off = cfg.shell_offset();
                let (sn, cs) = ((al * q1).sin(), (al * q1).cos());
                let across = s * w - S::c(0.5) * w;
                let rad = S::c(cfg.radius);
                [
                    S::c(off[0]) + rad * cs - across * cs,
                    S::c(off[1]) + rad * sn - across * sn,
                    S::c(off[2]) + S::c(cfg.pitch) * al * q1,
                ]
            }
        }
    }

    /// `c(q1)` and `c'(q1)`.
    fn scale(&self, q1: f64) -> (f64, f64) {
        match self {
            AnalyticSurface::Helicoid(cfg) => (cfg.width(q1), (cfg.w1 - cfg.w0) / cfg.l_bm),
            _ => (1.0, 0.0),
        }
    }

    /// Lattice at refinement `level` and the `(q1, s)` of every node.
    pub fn lattice(&self, level: u32) -> Result<(SurfaceGrid<f64>, Vec<(f64, f64)>)> {
        let m = 1usize << level;
        match self {
            AnalyticSurface::Helicoid(cfg) => {
                let mut cfg = cfg.clone();
                cfg.index_origin = IndexOrigin::Zero;
                cfg.n1 = Some(40 * m + 1);
                cfg.n2 = Some(6 * m + 1);
                let grid = build_model_shell::<f64>(&cfg)?;
                let n2 = cfg.n2();
                let params = (0..grid.lattice.nodes())
                    .map(|node| (row_q1(&cfg, node / n2), (node % n2) as f64 / (n2 - 1) as f64))
                    .collect();
                Ok((grid, params))
            }
            _ => {
                let ((a1, b1), (a2, b2)) = match self {
                    AnalyticSurface::Cylinder { .. } => ((0.0, 0.4), (0.0, 0.3)),
                    _ => ((0.5, 1.1), (0.0, 0.6)),
                };
                let (n1, n2) = (16 * m + 1, 12 * m + 1);
                let (dq1, dq2) = ((b1 - a1) / (n1 - 1) as f64, (b2 - a2) / (n2 - 1) as f64);
                let at = |k1: usize, k2: usize| (a1 + k1 as f64 * dq1, a2 + k2 as f64 * dq2);
                let params: Vec<_> = (0..n1 * n2).map(|node| at(node / n2, node % n2)).collect();
                let x0 = params.iter().map(|&(u, v)| self.position(u, v)).collect();
                Ok((SurfaceGrid::new(Lattice::uniform(n1, n2, dq1, dq2), x0)?, params))
            }
        }
    }

    /// `(f, D_a f, D_b f, D_a D_b f)` for directions `a`, `b` in `(q1, s)`.
    fn jet(&self, q1: f64, s: f64, a: [f64; 2], b: [f64; 2]) -> [Vec3<f64>; 4] {
        let var = |x: f64, i: usize| -> D2 {
            Dual { re: Dual { re: x, eps: a[i] }, eps: Dual { re: b[i], eps: 0.0 } }
        };
        let r = self.position(var(q1, 0), var(s, 1));
        [r.map(|v| v.re.re), r.map(|v| v.re.eps), r.map(|v| v.eps.re), r.map(|v| v.eps.eps)]
    }

    /// Analytic `g_{μν}`, `b_{μν}` and `Γ^λ_{μν}` at parameter `(q1, s)`.
    pub fn exact(&self, q1: f64, s: f64) -> ExactGeometry {
        let (e1, e2) = ([1.0, 0.0], [0.0, 1.0]);
        let [_, x1, _, x11] = self.jet(q1, s, e1, e1);
        let [_, _, xs, x1s] = self.jet(q1, s, e1, e2);
        let [_, _, _, xss] = self.jet(q1, s, e2, e2);
        let (c, dc) = self.scale(q1);
        let sc = |v: Vec3<f64>, k: f64| v.map(|x| x * k);
        let add = |u: Vec3<f64>, v: Vec3<f64>| [u[0] + v[0], u[1] + v[1], u[2] + v[2]];
        let t = [x1, sc(xs, 1.0 / c)];
        // dt[α][μ] = ∂̂_α T_μ
        let dt = [[x11, add(sc(x1s, 1.0 / c), sc(xs, -dc / (c * c)))], [sc(x1s, 1.0 / c), sc(xss, 1.0 / (c * c))]];
        let mut g = [[0.0; 2]; 2];
        let mut dg = [[[0.0; 2]; 2]; 2];
        for m in 0..2 {
            for n in 0..2 {
                g[m][n] = dot3(&t[m], &t[n]);
                for a in 0..2 {
                    dg[a][m][n] = dot3(&dt[a][m], &t[n]) + dot3(&t[m], &dt[a][n]);
                }
            }
        }
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let ginv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for l in 0..2 {
            for m in 0..2 {
                for n in 0..2 {
                    gamma[l][m][n] = 0.5
                        * (0..2).map(|s| ginv[s][l] * (dg[n][m][s] + dg[m][s][n] - dg[s][m][n])).sum::<f64>();
                }
            }
        }
        let nvec = cross3(&t[0], &t[1]);
        let len = norm3(&nvec);
        let nrm = sc(nvec, 1.0 / len);
        let dn: Vec<Vec3<f64>> = (0..2)
            .map(|a| {
                let d = add(cross3(&dt[a][0], &t[1]), cross3(&t[0], &dt[a][1]));
                let along = dot3(&nrm, &d);
                sc(add(d, sc(nrm, -along)), 1.0 / len)
            })
            .collect();
        let mut b = [[0.0; 2]; 2];
        for m in 0..2 {
            for n in 0..2 {
                b[m][n] = 0.5 * (dot3(&dn[m], &t[n]) + dot3(&dn[n], &t[m]));
            }
        }
        ExactGeometry { g, b, gamma }
    }
}

/// Reference values at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactGeometry {
    pub g: [[f64; 2]; 2],
    pub b: [[f64; 2]; 2],
    /// `gamma[λ][μ][ν]`
    pub gamma: [[[f64; 2]; 2]; 2],
}

/// Largest interior deviation of `g`, `b`, `Γ` from the analytic values,
/// ignoring nodes within `3·2^level` of an edge (three nodes of the
/// coarsest lattice, so the region is the same at every level).
pub fn geometry_errors(surface: &AnalyticSurface, level: u32) -> Result<[f64; 3]> {
    let (grid, params) = surface.lattice(level)?;
    let geom = SurfaceGeometry::build(&grid)?;
    let margin = 3usize << level;
    let (n1, n2) = (grid.lattice.n1, grid.lattice.n2);
    let mut err = [0.0f64; 3];
    for node in 0..geom.nodes() {
        let (k1, k2) = grid.lattice.coords(node);
        if k1 < margin || k2 < margin || k1 + margin >= n1 || k2 + margin >= n2 {
            continue;
        }
        let (q1, s) = params[node];
        let ex = surface.exact(q1, s);
        for m in 0..2 {
            for n in 0..2 {
                err[0] = err[0].max((geom.metric.at(node, &[m, n]) - ex.g[m][n]).abs());
                err[1] = err[1].max((geom.second_form.at(node, &[m, n]) - ex.b[m][n]).abs());
                for l in 0..2 {
                    err[2] = err[2].max((geom.christoffel.at(node, &[l, m, n]) - ex.gamma[l][m][n]).abs());
                }
            }
        }
    }
    Ok(err)
}

/// Observed orders below this fail the check.
pub const MIN_GEOMETRY_ORDER: f64 = 1.9;

const ROUND_OFF: f64 = 1e-10;

pub fn standard_surfaces() -> Vec<AnalyticSurface> {
    vec![
        AnalyticSurface::Cylinder { radius: 0.5 },
        AnalyticSurface::SpherePatch { radius: 0.5 },
        AnalyticSurface::Helicoid(ModelConfig::default()),
    ]
}

/// Convergence of the discrete geometry on the standard surfaces over
/// `levels` successive halvings of the lattice spacing.
pub fn geometry_check(levels: u32) -> Result<CheckReport> {
    let start = Instant::now();
    let mut report = CheckReport::new(format!("geometry ({} halvings)", levels));
    for surface in standard_surfaces() {
        let errs = (0..=levels).map(|l| geometry_errors(&surface, l)).collect::<Result<Vec<_>>>()?;
        for (q, name) in ["g", "b", "Gamma"].iter().enumerate() {
            let orders: Vec<f64> = errs.windows(2).map(|w| (w[0][q] / w[1][q]).log2()).collect();
            let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
            let detail = format!(
                "errors {} orders {}",
                errs.iter().map(|e| format!("{:.2e}", e[q])).collect::<Vec<_>>().join(" "),
                orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(" ")
            );
            // a quantity the lattice reproduces to round-off has no order
            let exact = errs.iter().all(|e| e[q] < ROUND_OFF);
            let detail = if exact { format!("{detail} (round-off)") } else { detail };
            report.record(
                format!("{} {name} order >= {MIN_GEOMETRY_ORDER}", surface.name()),
                exact || worst >= MIN_GEOMETRY_ORDER,
                detail,
            );
        }
    }
    let elapsed = start.elapsed();
    report.record("runtime < 30 s", elapsed.as_secs_f64() < 30.0, format!("{elapsed:.2?}"));
    report.elapsed = elapsed;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duals_differentiate() {
        let x = Dual { re: Dual { re: 0.3, eps: 1.0 }, eps: Dual { re: 1.0, eps: 0.0 } };
        let y = x.sin() * x;
        // d²/dx² (x sin x) = 2 cos x − x sin x
        assert!((y.eps.eps - (2.0 * 0.3f64.cos() - 0.3 * 0.3f64.sin())).abs() < 1e-15);
        assert!((y.re.eps - (0.3f64.sin() + 0.3 * 0.3f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn cylinder_exact_values() {
        let s = AnalyticSurface::Cylinder { radius: 0.5 };
        let e = s.exact(0.2, 0.1);
        assert!((e.g[0][0] - 1.0).abs() < 1e-14 && e.g[0][1].abs() < 1e-14);
        assert!((e.b[0][0].abs() - 2.0).abs() < 1e-13 && e.b[1][1].abs() < 1e-14);
        assert!(e.gamma.iter().flatten().flatten().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn sphere_christoffel() {
        let s = AnalyticSurface::SpherePatch { radius: 0.5 };
        let th: f64 = 0.8;
        let e = s.exact(th, 0.2);
        // Γ^θ_φφ = −sin θ cos θ, Γ^φ_θφ = cot θ
        assert!((e.gamma[0][1][1] + th.sin() * th.cos()).abs() < 1e-13);
        assert!((e.gamma[1][0][1] - th.cos() / th.sin()).abs() < 1e-13);
        assert!((e.b[0][0].abs() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn helicoid_lattice_matches_formula() {
        let s = AnalyticSurface::Helicoid(ModelConfig::default());
        let (grid, params) = s.lattice(0).unwrap();
        for (x, &(q1, t)) in grid.x0.iter().zip(&params) {
            let y = s.position(q1, t);
            assert!((0..3).all(|c| (x[c] - y[c]).abs() < 1e-15));
        }
    }
}
