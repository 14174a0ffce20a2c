//! Lagrangian/Eulerian interaction through the four-point smoothed delta
//! function: force spreading and velocity interpolation.

use crate::error::{Error, Result};
use crate::fluid::{BodyForce, FluidParams, VectorField};
use crate::scalar::{Real, Vec3};

/// One-dimensional kernel `φ(r)`, with `r` in mesh widths.
pub fn phi<T: Real>(r: T) -> T {
    let r = r.abs();
    let one = T::one();
    let two = T::lit(2.0);
    if r <= one {
        (T::lit(3.0) - two * r + (one + T::lit(4.0) * r - T::lit(4.0) * r * r).sqrt()) / T::lit(8.0)
    } else if r < two {
        T::lit(0.5) - phi(two - r)
    } else {
        T::zero()
    }
}

/// Support radius of `φ` in mesh widths.
pub const SUPPORT: usize = 2;

/// Tensor-product kernel `δ_h(x) = φ(x/h) φ(y/h) φ(z/h) / h³` on a periodic
/// lattice.
#[derive(Clone, Debug)]
pub struct DeltaKernel<T> {
    pub n: usize,
    pub h: T,
}

/// Lattice stencil of one Lagrangian point: first index and four weights per
/// axis. Indices are already wrapped into `0..n`.
#[derive(Clone, Copy, Debug)]
pub struct Stencil<T> {
    pub index: [[usize; 4]; 3],
    pub weight: [[T; 4]; 3],
}

impl<T: Real> DeltaKernel<T> {
    pub fn new(params: &FluidParams<T>) -> Self {
        DeltaKernel { n: params.n, h: params.h() }
    }

    pub fn stencil(&self, x: &Vec3<T>) -> Result<Stencil<T>> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Lagrangian position"));
        }
        let n = self.n as i64;
        let box_len = self.h * T::of_usize(self.n);
        let mut index = [[0usize; 4]; 3];
        let mut weight = [[T::zero(); 4]; 3];
        for c in 0..3 {
            let wrapped = x[c] - box_len * (x[c] / box_len).floor();
            let s = wrapped / self.h;
            let base = s.floor().as_f64() as i64 - 1;
            for k in 0..4 {
                let j = base + k as i64;
                index[c][k] = j.rem_euclid(n) as usize;
                weight[c][k] = phi(s - T::lit(j as f64));
            }
        }
        Ok(Stencil { index, weight })
    }
}

#[inline]
fn flat(n: usize, i: usize, j: usize, k: usize) -> usize {
    i + n * (j + n * k)
}

/// `F(x) = Σ_q f(q) δ_h(x − X(q)) Δq`.
pub fn spread_force<T: Real>(
    f: &[Vec3<T>],
    x: &[Vec3<T>],
    area: &[T],
    params: &FluidParams<T>,
) -> Result<BodyForce<T>> {
    if f.len() != x.len() || area.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} forces, {} positions, {} area weights",
            f.len(),
            x.len(),
            area.len()
        )));
    }
    let kernel = DeltaKernel::new(params);
    let n = params.n;
    let h = params.h();
    let inv_h3 = T::one() / (h * h * h);
    let mut out = BodyForce::zeros(n);
    for ((fq, xq), dq) in f.iter().zip(x).zip(area) {
        if fq.iter().all(|v| *v == T::zero()) {
            continue;
        }
        let st = kernel.stencil(xq)?;
        let scale = *dq * inv_h3;
        for c in 0..4 {
            for b in 0..4 {
                let wbc = st.weight[1][b] * st.weight[2][c] * scale;
                for a in 0..4 {
                    let w = st.weight[0][a] * wbc;
                    let i = flat(n, st.index[0][a], st.index[1][b], st.index[2][c]);
                    for comp in 0..3 {
                        out.f[comp][i] += fq[comp] * w;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `U(q) = Σ_x u(x) δ_h(x − X(q)) h³`.
pub fn interpolate_velocity<T: Real>(u: &VectorField<T>, x: &[Vec3<T>], params: &FluidParams<T>) -> Result<Vec<Vec3<T>>> {
    let n = params.n;
    if u.iter().any(|c| c.len() != n * n * n) {
        return Err(Error::ShapeMismatch("velocity field does not match the lattice".into()));
    }
    let kernel = DeltaKernel::new(params);
    x.iter()
        .map(|xq| {
            let st = kernel.stencil(xq)?;
            let mut v = [T::zero(); 3];
            for c in 0..4 {
                for b in 0..4 {
                    let wbc = st.weight[1][b] * st.weight[2][c];
                    for a in 0..4 {
                        let w = st.weight[0][a] * wbc;
                        let i = flat(n, st.index[0][a], st.index[1][b], st.index[2][c]);
                        for comp in 0..3 {
                            v[comp] += u[comp][i] * w;
                        }
                    }
                }
            }
            Ok(v)
        })
        .collect()
}
