//! Periodic incompressible Navier-Stokes on an `N³` lattice.
//!
//! Advection and body force are explicit, viscosity and pressure implicit.
//! The implicit system is diagonal in Fourier space and is solved per
//! wavevector. Arrays are flat with `x` fastest: `i = x + N (y + N z)`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct FluidParams<T> {
    /// Lattice points per side (power of two).
    pub n: usize,
    /// Box side (cm).
    pub a: T,
    /// Density (g cm⁻³).
    pub rho: T,
    /// Dynamic viscosity (g cm⁻¹ s⁻¹).
    pub mu_f: T,
    /// Time step (s).
    pub dt: T,
}

impl<T: Real> FluidParams<T> {
    pub fn h(&self) -> T {
        self.a / T::of_usize(self.n)
    }

    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::InvalidFluid(format!("N = {} must be a power of two >= 4", self.n)));
        }
        for (name, v) in [("a", self.a), ("rho", self.rho), ("mu_f", self.mu_f), ("dt", self.dt)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidFluid(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

pub type VectorField<T> = [Vec<T>; 3];

fn zero_vector<T: Real>(points: usize) -> VectorField<T> {
    [vec![T::zero(); points], vec![T::zero(); points], vec![T::zero(); points]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluidState<T> {
    pub n: usize,
    pub u: VectorField<T>,
    pub p: Vec<T>,
}

impl<T: Real> FluidState<T> {
    pub fn at_rest(n: usize) -> Self {
        let pts = n * n * n;
        FluidState { n, u: zero_vector(pts), p: vec![T::zero(); pts] }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().flatten().chain(&self.p).all(|v| v.is_finite())
    }

    pub fn max_speed(&self) -> T {
        (0..self.p.len())
            .map(|i| (self.u[0][i].powi(2) + self.u[1][i].powi(2) + self.u[2][i].powi(2)).sqrt())
            .fold(T::zero(), T::max)
    }
}

/// Eulerian body-force density (g cm⁻² s⁻²).
#[derive(Clone, Debug, PartialEq)]
pub struct BodyForce<T> {
    pub n: usize,
    pub f: VectorField<T>,
}

impl<T: Real> BodyForce<T> {
    pub fn zeros(n: usize) -> Self {
        BodyForce { n, f: zero_vector(n * n * n) }
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().flatten().all(|v| *v == T::zero())
    }

    pub fn add(&mut self, other: &BodyForce<T>) -> Result<()> {
        if other.n != self.n {
            return Err(Error::ShapeMismatch(format!("force lattice {} vs {}", other.n, self.n)));
        }
        for c in 0..3 {
            self.f[c].iter_mut().zip(&other.f[c]).for_each(|(a, b)| *a += *b);
        }
        Ok(())
    }

    /// `Σ F h³` per component.
    pub fn total(&self, h: T) -> [T; 3] {
        let h3 = h * h * h;
        [0, 1, 2].map(|c| self.f[c].iter().copied().sum::<T>() * h3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffKind {
    /// `(φ(x+h) - φ(x)) / h`
    Forward,
    /// `(φ(x) - φ(x-h)) / h`
    Backward,
    /// `(φ(x+h) - φ(x-h)) / 2h`
    Centered,
}

#[inline]
fn stride(n: usize, axis: usize) -> usize {
    [1, n, n * n][axis]
}

/// Flat indices of the periodic neighbours `(i - e_axis, i + e_axis)`.
#[inline]
fn neighbours(i: usize, n: usize, axis: usize) -> (usize, usize) {
    let s = stride(n, axis);
    let k = (i / s) % n;
    let minus = if k == 0 { i + (n - 1) * s } else { i - s };
    let plus = if k == n - 1 { i - (n - 1) * s } else { i + s };
    (minus, plus)
}

pub fn periodic_diff<T: Real>(field: &[T], n: usize, h: T, kind: DiffKind, axis: usize) -> Vec<T> {
    let inv = T::one() / h;
    let half = T::lit(0.5) * inv;
    (0..field.len())
        .map(|i| {
            let (m, p) = neighbours(i, n, axis);
            match kind {
                DiffKind::Forward => (field[p] - field[i]) * inv,
                DiffKind::Backward => (field[i] - field[m]) * inv,
                DiffKind::Centered => (field[p] - field[m]) * half,
            }
        })
        .collect()
}

/// `Σ_k u_k D_k^± u` with the backward difference where `u_k >= 0`.
pub fn upwind_advection<T: Real>(u: &VectorField<T>, n: usize, h: T) -> VectorField<T> {
    let pts = u[0].len();
    let inv = T::one() / h;
    let mut out = zero_vector(pts);
    for axis in 0..3 {
        let vel = &u[axis];
        for i in 0..pts {
            let (m, p) = neighbours(i, n, axis);
            let c = vel[i];
            for comp in 0..3 {
                let f = &u[comp];
                let d = if c < T::zero() { f[p] - f[i] } else { f[i] - f[m] };
                out[comp][i] += c * d * inv;
            }
        }
    }
    out
}

/// `D⁰ · u`
pub fn divergence<T: Real>(u: &VectorField<T>, n: usize, h: T) -> Vec<T> {
    let mut div = vec![T::zero(); u[0].len()];
    for (axis, comp) in u.iter().enumerate() {
        for (d, v) in div.iter_mut().zip(periodic_diff(comp, n, h, DiffKind::Centered, axis)) {
            *d += v;
        }
    }
    div
}

/// Standard seven-point periodic Laplacian.
pub fn laplacian<T: Real>(field: &[T], n: usize, h: T) -> Vec<T> {
    let inv = T::one() / (h * h);
    (0..field.len())
        .map(|i| {
            let mut s = -T::lit(6.0) * field[i];
            for axis in 0..3 {
                let (m, p) = neighbours(i, n, axis);
                s += field[m] + field[p];
            }
            s * inv
        })
        .collect()
}

/// Physical-space residual of the implicit system,
/// `ρ u/Δt − μ_f Δ u + D⁰ p − r`, and the divergence `D⁰·u`.
pub fn linear_residual<T: Real>(
    params: &FluidParams<T>,
    u: &VectorField<T>,
    p: &[T],
    rhs: &VectorField<T>,
) -> (VectorField<T>, Vec<T>) {
    let (n, h) = (params.n, params.h());
    let mut res = zero_vector(p.len());
    for c in 0..3 {
        let lap = laplacian(&u[c], n, h);
        let gp = periodic_diff(p, n, h, DiffKind::Centered, c);
        for i in 0..p.len() {
            res[c][i] = params.rho / params.dt * u[c][i] - params.mu_f * lap[i] + gp[i] - rhs[c][i];
        }
    }
    (res, divergence(u, n, h))
}

/// 3D complex FFT on the flat lattice layout.
struct Fft3<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    line: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Fft3<T> {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Fft3 { n, forward, inverse, line: vec![Complex::default(); n], scratch: vec![Complex::default(); len] }
    }

    fn transform(&mut self, data: &mut [Complex<T>], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        // x lines are contiguous
        for chunk in data.chunks_exact_mut(n) {
            plan.process_with_scratch(chunk, &mut self.scratch);
        }
        for axis in 1..3 {
            let s = stride(n, axis);
            for base in 0..data.len() {
                if !(base / s).is_multiple_of(n) {
                    continue;
                }
                for k in 0..n {
                    self.line[k] = data[base + k * s];
                }
                plan.process_with_scratch(&mut self.line, &mut self.scratch);
                for k in 0..n {
                    data[base + k * s] = self.line[k];
                }
            }
        }
        if inverse {
            let scale = T::one() / T::of_usize(data.len());
            data.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Reusable solver holding FFT plans and the per-axis symbol tables.
pub struct FluidSolver<T: Real> {
    params: FluidParams<T>,
    fft: Fft3<T>,
    /// `sin²(π k / N)` per wavenumber index.
    sin2_half: Vec<T>,
    /// `sin(2π k / N)` per wavenumber index.
    sin_full: Vec<T>,
    bufs: [Vec<Complex<T>>; 3],
    pbuf: Vec<Complex<T>>,
}

impl<T: Real> FluidSolver<T> {
    pub fn new(params: FluidParams<T>) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let pts = params.points();
        let angle = |k: usize, m: f64| T::lit(m * std::f64::consts::PI * k as f64 / n as f64);
        let sin2_half = (0..n).map(|k| angle(k, 1.0).sin().powi(2)).collect();
        let sin_full = (0..n)
            .map(|k| {
                // exact zeros at k = 0 and k = N/2
                if k == 0 || 2 * k == n {
                    T::zero()
                } else {
                    angle(k, 2.0).sin()
                }
            })
            .collect();
        Ok(FluidSolver {
            fft: Fft3::new(n),
            params,
            sin2_half,
            sin_full,
            bufs: [0, 1, 2].map(|_| vec![Complex::default(); pts]),
            pbuf: vec![Complex::default(); pts],
        })
    }

    pub fn params(&self) -> &FluidParams<T> {
        &self.params
    }

    /// Solves `ρ u/Δt − μ_f Δ u + D⁰ p = r`, `D⁰·u = 0` for given `r`.
    pub fn solve_linear(&mut self, rhs: &VectorField<T>) -> Result<(VectorField<T>, Vec<T>)> {
        let pts = self.params.points();
        if rhs.iter().any(|c| c.len() != pts) {
            return Err(Error::ShapeMismatch(format!("right-hand side must have {pts} points")));
        }
        if rhs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fluid right-hand side"));
        }
        for c in 0..3 {
            for (b, r) in self.bufs[c].iter_mut().zip(&rhs[c]) {
                *b = Complex::new(*r, T::zero());
            }
            self.fft.transform(&mut self.bufs[c], false);
        }
        let n = self.params.n;
        let h = self.params.h();
        let a0 = self.params.rho / self.params.dt;
        let visc = T::lit(4.0) * self.params.mu_f / (h * h);
        for idx in 0..pts {
            let k = [idx % n, (idx / n) % n, idx / (n * n)];
            let a = a0 + visc * (self.sin2_half[k[0]] + self.sin2_half[k[1]] + self.sin2_half[k[2]]);
            let s = k.map(|ki| self.sin_full[ki]);
            let s2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
            let r = [self.bufs[0][idx], self.bufs[1][idx], self.bufs[2][idx]];
            if s2 == T::zero() {
                self.pbuf[idx] = Complex::default();
                for c in 0..3 {
                    self.bufs[c][idx] = r[c] / a;
                }
                continue;
            }
            // ĝ = i s / h, p̂ = ĝ*·r̂ / |ĝ|² = -i h (s·r̂) / |s|²
            let sr = r[0] * s[0] + r[1] * s[1] + r[2] * s[2];
            let p = Complex::new(sr.im, -sr.re) * (h / s2);
            self.pbuf[idx] = p;
            // ĝ p̂ = (i s_c / h) p̂
            for c in 0..3 {
                let gp = Complex::new(-p.im, p.re) * (s[c] / h);
                self.bufs[c][idx] = (r[c] - gp) / a;
            }
        }
        let mut u = zero_vector(pts);
        for c in 0..3 {
            self.fft.transform(&mut self.bufs[c], true);
            u[c] = self.bufs[c].iter().map(|z| z.re).collect();
        }
        self.fft.transform(&mut self.pbuf, true);
        let p = self.pbuf.iter().map(|z| z.re).collect();
        Ok((u, p))
    }

    /// Explicit right-hand side `ρ u/Δt − ρ (u·D±)u + F`.
    pub fn right_hand_side(&self, state: &FluidState<T>, force: &BodyForce<T>) -> VectorField<T> {
        let (n, h, rho) = (self.params.n, self.params.h(), self.params.rho);
        let adv = upwind_advection(&state.u, n, h);
        let a0 = rho / self.params.dt;
        let mut r = zero_vector(self.params.points());
        for c in 0..3 {
            for i in 0..r[c].len() {
                r[c][i] = a0 * state.u[c][i] - rho * adv[c][i] + force.f[c][i];
            }
        }
        r
    }

    /// One time step. Does not modify `state`.
    pub fn step(&mut self, state: &FluidState<T>, force: &BodyForce<T>) -> Result<FluidState<T>> {
        let n = self.params.n;
        if state.n != n || force.n != n {
            return Err(Error::ShapeMismatch(format!(
                "state lattice {} / force lattice {} vs solver {n}",
                state.n, force.n
            )));
        }
        if !state.is_finite() {
            return Err(Error::NonFinite("fluid state"));
        }
        let h = self.params.h();
        let div = divergence(&state.u, n, h).iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let scale = state.max_speed() / h;
        if scale > T::zero() && div > T::lit(1e-8) * scale {
            log::warn!("fluid step entered with relative divergence {:e}", div / scale);
        }
        let rhs = self.right_hand_side(state, force);
        let (u, p) = self.solve_linear(&rhs)?;
        Ok(FluidState { n, u, p })
    }
}

/// Convenience wrapper that plans a fresh solver for a single step.
pub fn fluid_step<T: Real>(state: &FluidState<T>, force: &BodyForce<T>, params: &FluidParams<T>) -> Result<FluidState<T>> {
    FluidSolver::new(params.clone())?.step(state, force)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> FluidParams<f64> {
        FluidParams { n, a: 0.1, rho: 1.034, mu_f: 0.0197, dt: 1e-6 }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params(12);
        assert!(p.validate().is_err());
        p.n = 16;
        p.mu_f = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn neighbours_wrap() {
        let n = 4;
        let i = 3 + 4 * 8;
        assert_eq!(neighbours(i, n, 0), (2 + 4 * 8, 4 * 8));
        let (m, _) = neighbours(i, n, 1);
        assert_eq!(m, 3 + 4 * (3 + 4 * 2));
    }

    #[test]
    fn constant_field_has_zero_differences() {
        let f = vec![2.5; 64];
        for kind in [DiffKind::Forward, DiffKind::Backward, DiffKind::Centered] {
            for axis in 0..3 {
                assert!(periodic_diff(&f, 4, 0.1, kind, axis).iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn nyquist_mode_is_invisible_to_centered_difference() {
        let n = 8;
        let f: Vec<f64> = (0..n * n * n).map(|i| if (i % n) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(periodic_diff(&f, n, 0.1, DiffKind::Centered, 0).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn fft_roundtrip() {
        let n = 8;
        let mut f = Fft3::<f64>::new(n);
        let orig: Vec<Complex<f64>> = (0..n * n * n).map(|i| Complex::new((i as f64 * 0.37).sin(), 0.0)).collect();
        let mut data = orig.clone();
        f.transform(&mut data, false);
        f.transform(&mut data, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let p = params(8);
        let s = FluidState::at_rest(8);
        let out = fluid_step(&s, &BodyForce::zeros(8), &p).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn uniform_force_accelerates_uniformly() {
        let p = params(8);
        let mut f = BodyForce::zeros(8);
        f.f[2].iter_mut().for_each(|v| *v = 3.0);
        let out = fluid_step(&FluidState::at_rest(8), &f, &p).unwrap();
        let expected = 3.0 * p.dt / p.rho;
        for i in 0..512 {
            assert!((out.u[2][i] - expected).abs() < 1e-14 * expected.max(1.0));
            assert!(out.u[0][i].abs() < 1e-20 && out.p[i].abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut s = FluidState::<f64>::at_rest(4);
        s.u[0][3] = f64::NAN;
        assert!(matches!(
            fluid_step(&s, &BodyForce::zeros(4), &params(4)),
            Err(Error::NonFinite(_))
        ));
    }
}
