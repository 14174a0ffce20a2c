use crate::error::{Error, Result};
use crate::fluid::BodyForce;
use crate::geometry::SurfaceGrid;
use crate::scalar::{Real, Vec3};
use crate::tensor::Lattice;

use super::config::{IndexOrigin, ModelConfig, ThicknessLaw};

/// Half-thickness of the shell at arc parameter `q1`.
pub fn thickness_law(q1: f64, law: ThicknessLaw, length: f64) -> Result<f64> {
    if !(0.0..=length).contains(&q1) {
        return Err(Error::OutOfRange { q1, length });
    }
    Ok(match law {
        ThicknessLaw::Exact => 0.001 * (1.0 + 2.0 / 3.0 * q1).powf(5.0 / 3.0) * 10f64.powf(-2.0 / 9.0 * q1),
        ThicknessLaw::Table => 0.001 * (1.0 + 5.0 * q1),
    })
}

/// Arc parameter of lattice row `i1` (0-based storage index).
pub fn row_q1(cfg: &ModelConfig, i1: usize) -> f64 {
    let k1 = match cfg.index_origin {
        IndexOrigin::One => i1 + 1,
        IndexOrigin::Zero => i1,
    };
    k1 as f64 * cfg.length / (cfg.n1() - 1) as f64
}

fn origin(cfg: &ModelConfig) -> usize {
    match cfg.index_origin {
        IndexOrigin::One => 1,
        IndexOrigin::Zero => 0,
    }
}

/// Helix centreline `γ(t)` and inward radial unit vector `N(t)`.
pub fn helix(cfg: &ModelConfig, t: f64) -> (Vec3<f64>, Vec3<f64>) {
    let al = cfg.alpha();
    let (s, c) = (al * t).sin_cos();
    ([cfg.radius * c, cfg.radius * s, cfg.pitch * al * t], [-c, -s, 0.0])
}

/// Reference positions of the helicoidal strip.
pub fn build_model_shell<T: Real>(cfg: &ModelConfig) -> Result<SurfaceGrid<T>> {
    cfg.validate()?;
    let (n1, n2) = (cfg.n1(), cfg.n2());
    let dq1 = cfg.length / (n1 - 1) as f64;
    let off = cfg.shell_offset();
    let o = origin(cfg);
    let mut dq2 = Vec::with_capacity(n1);
    let mut x0 = Vec::with_capacity(n1 * n2);
    for i1 in 0..n1 {
        let q1 = row_q1(cfg, i1);
        let w = cfg.width(q1);
        let d2 = w / (n2 - 1) as f64;
        dq2.push(T::lit(d2));
        let (g, nrm) = helix(cfg, q1);
        for i2 in 0..n2 {
            let s = (i2 + o) as f64 * d2 - 0.5 * w;
            x0.push([0, 1, 2].map(|c| T::lit(off[c] + g[c] + s * nrm[c])));
        }
    }
    let lattice = Lattice { n1, n2, dq1: T::lit(dq1), dq2 };
    SurfaceGrid::new(lattice, x0)
}

/// Half-thickness at every node. Rows past the end of the strip (possible
/// with the 1-based origin) take the end value.
pub fn node_thickness<T: Real>(cfg: &ModelConfig) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(cfg.n1() * cfg.n2());
    for i1 in 0..cfg.n1() {
        let h0 = thickness_law(row_q1(cfg, i1).min(cfg.length), cfg.thickness_law, cfg.length)?;
        out.extend(std::iter::repeat_n(T::lit(h0), cfg.n2()));
    }
    Ok(out)
}

/// Mask of nodes held by edge springs.
pub fn clamp_mask(n1: usize, n2: usize, rows: usize) -> Vec<bool> {
    let mut mask = vec![false; n1 * n2];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            mask[i1 * n2 + i2] = i1 < rows || i1 + rows >= n1 || i2 < rows || i2 + rows >= n2;
        }
    }
    mask
}

/// Spring force density `-k (X - X0) / Δq` on clamped nodes, zero elsewhere.
pub fn clamp_force<T: Real>(disp: &[Vec3<T>], lattice: &Lattice<T>, k_clamp: T, rows: usize) -> Vec<Vec3<T>> {
    let mask = clamp_mask(lattice.n1, lattice.n2, rows);
    disp.iter()
        .enumerate()
        .map(|(node, d)| {
            if mask[node] {
                let s = -k_clamp / lattice.area(node);
                d.map(|c| c * s)
            } else {
                [T::zero(); 3]
            }
        })
        .collect()
}

/// Lattice plane index nearest to height `z` on a periodic axis.
pub fn impulse_plane(cfg: &ModelConfig) -> usize {
    let k = (cfg.z_imp / cfg.h()).round() as i64;
    k.rem_euclid(cfg.n as i64) as usize
}

/// Downward impulse on one horizontal lattice plane at step 0. The volume
/// density is `f_imp / h` scaled by `τ / Δt`, so the delivered impulse
/// per unit area is `f_imp·τ` whatever the time step.
pub fn impulse_force<T: Real>(step: usize, cfg: &ModelConfig) -> BodyForce<T> {
    let n = cfg.n;
    let mut f = BodyForce::zeros(n);
    if step != 0 || !cfg.impulse {
        return f;
    }
    let k = impulse_plane(cfg);
    let value = T::lit(-cfg.f_imp / cfg.h() * cfg.impulse_duration / cfg.dt);
    for j in 0..n {
        for i in 0..n {
            f.f[2][i + n * (j + n * k)] = value;
        }
    }
    f
}
