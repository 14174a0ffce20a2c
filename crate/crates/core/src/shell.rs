//! Linear Kirchhoff-Love shell force operator.
//!
//! The elastic response is written in terms of eleven coefficient tensor
//! fields that depend only on the reference geometry, the Lamé constants and
//! the half-thickness. They are integrated across the thickness once, at
//! construction, and the per-step force evaluation only applies discrete
//! covariant derivatives and contractions to the displacement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative, covariant_divergence, SurfaceGeometry, SurfaceGrid};
use crate::scalar::{dot3, sub3, Real, Vec3};
use crate::tensor::{Slot, TensorField};

use Slot::{Lower, Upper};

/// Global sign turning the energy variation into the force the shell applies
/// to the fluid (`-δE`).
pub const ELASTIC_FORCE_SIGN: f64 = -1.0;

/// Above this value of `h0 |b|` a warning is logged; at 1 construction fails.
pub const THIN_SHELL_WARN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialParams<T> {
    /// First Lamé coefficient (g cm⁻¹ s⁻²).
    pub lambda: T,
    /// Second Lamé coefficient (g cm⁻¹ s⁻²).
    pub mu: T,
    /// Half-thickness at every node (cm).
    pub h0: Vec<T>,
}

impl<T: Real> MaterialParams<T> {
    pub fn uniform(lambda: T, mu: T, h0: T, nodes: usize) -> Self {
        MaterialParams { lambda, mu, h0: vec![h0; nodes] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > T::zero()) {
            return Err(Error::InvalidMaterial(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.lambda + T::lit(2.0) * self.mu > T::zero()) {
            return Err(Error::InvalidMaterial("lambda + 2 mu must be positive".into()));
        }
        if let Some(h) = self.h0.iter().find(|h| !(**h > T::zero()) || !h.is_finite()) {
            return Err(Error::InvalidMaterial(format!("thickness {h} must be positive")));
        }
        Ok(())
    }

    /// Plate-stiffness modulus `2μ(λ+μ)/(λ+2μ)`.
    pub fn plate_modulus(&self) -> T {
        T::lit(2.0) * self.mu * (self.lambda + self.mu) / (self.lambda + T::lit(2.0) * self.mu)
    }

    /// Coefficient `λμ/(λ+2μ)` of the trace term of the plane-stress energy.
    pub fn trace_modulus(&self) -> T {
        self.lambda * self.mu / (self.lambda + T::lit(2.0) * self.mu)
    }
}

/// How the thickness integrals are closed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientOrder {
    /// Integrands frozen at the middle surface; only the moments
    /// `∫dt = 2h0`, `∫t dt = 0`, `∫t² dt = 2h0³/3` survive.
    #[default]
    Leading,
    /// Simpson's rule across the thickness, which keeps the `O(h0³)`
    /// curvature corrections of every coefficient.
    Quadratic,
}

/// Coefficient tensors of the force operator. All slots are contravariant.
#[derive(Clone, Debug)]
pub struct ShellCoefficients<T> {
    pub a: TensorField<T>,
    pub abar: TensorField<T>,
    pub abbar: TensorField<T>,
    pub phi: TensorField<T>,
    pub phibar: TensorField<T>,
    pub psi: TensorField<T>,
    pub psibar: TensorField<T>,
    pub omega: TensorField<T>,
    pub omegabar: TensorField<T>,
    pub obbar: TensorField<T>,
    /// The elasticity tensor `Λ^{αβγδ}` on the middle surface.
    pub lambda0: TensorField<T>,
    pub order: CoefficientOrder,
}

impl<T: Real> ShellCoefficients<T> {
    pub fn nodes(&self) -> usize {
        self.a.nodes()
    }

    /// `(name, field)` pairs, in declaration order.
    pub fn named(&self) -> [(&'static str, &TensorField<T>); 11] {
        [
            ("A", &self.a),
            ("Abar", &self.abar),
            ("Abbar", &self.abbar),
            ("Phi", &self.phi),
            ("Phibar", &self.phibar),
            ("Psi", &self.psi),
            ("Psibar", &self.psibar),
            ("Omega", &self.omega),
            ("Omegabar", &self.omegabar),
            ("Obbar", &self.obbar),
            ("Lambda0", &self.lambda0),
        ]
    }
}

type M2<T> = [[T; 2]; 2];
type T4<T> = [T; 16];

#[inline]
fn i4(a: usize, b: usize, c: usize, d: usize) -> usize {
    (a << 3) | (b << 2) | (c << 1) | d
}

fn identity<T: Real>() -> M2<T> {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

fn matmul<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    let mut out = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn det2<T: Real>(a: &M2<T>) -> T {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn inv2<T: Real>(a: &M2<T>) -> M2<T> {
    let d = det2(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

/// `X^{abcd} = Σ L^{αβγδ} m0_α^a m1_β^b m2_γ^c m3_δ^d`.
fn transform4<T: Real>(l: &T4<T>, m: [&M2<T>; 4]) -> T4<T> {
    let mut cur = *l;
    for (slot, mat) in m.iter().enumerate() {
        let shift = 3 - slot;
        let mut next = [T::zero(); 16];
        for (flat, v) in next.iter_mut().enumerate() {
            let target = (flat >> shift) & 1;
            let base = flat & !(1 << shift);
            *v = cur[base] * mat[0][target] + cur[base | (1 << shift)] * mat[1][target];
        }
        cur = next;
    }
    cur
}

/// Plane-stress elasticity tensor for a given inverse metric, symmetrized in
/// each index pair.
fn elasticity<T: Real>(ginv: &M2<T>, trace_mod: T, mu: T, scale: T) -> T4<T> {
    let half = T::lit(0.5);
    let mut l = [T::zero(); 16];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    l[i4(a, b, c, d)] = (trace_mod * ginv[a][b] * ginv[c][d]
                        + mu * half * (ginv[a][c] * ginv[b][d] + ginv[a][d] * ginv[b][c]))
                        * scale;
                }
            }
        }
    }
    l
}

/// Per-node geometric input of the coefficient integrands.
struct NodeGeometry<T> {
    g: M2<T>,
    ginv: M2<T>,
    b: M2<T>,
    /// `b_α^σ`
    bm: M2<T>,
    /// `∇̃_τ b_ρ^μ` flattened `[τ][ρ][μ]`.
    db: [T; 8],
}

/// Integrands (without their explicit powers of t) at thickness coordinate `t`.
struct Integrands<T> {
    a: T,
    abar: T4<T>,
    abbar: [T; 4],
    phi: [T; 2],
    phibar: [T; 4],
    psi: [T; 8],
    psibar: T4<T>,
    omega: [T; 4],
    omegabar: [T; 8],
    obbar: T4<T>,
    lambda: T4<T>,
}

fn integrands<T: Real>(ng: &NodeGeometry<T>, t: T, trace_mod: T, mu: T) -> Integrands<T> {
    let id = identity::<T>();
    let mut theta = id; // θ_α^σ
    let mut theta_low = ng.g; // θ_{αβ}
    for i in 0..2 {
        for j in 0..2 {
            theta[i][j] += t * ng.bm[i][j];
            theta_low[i][j] += t * ng.b[i][j];
        }
    }
    let gt = matmul(&theta, &theta_low); // bundle metric g_{αβ}(t)
    let gt_inv = inv2(&gt);
    let gt_mixed = matmul(&gt, &ng.ginv); // g_β^τ
    let bt = matmul(&theta, &ng.b); // B_{αβ}
    let theta2 = matmul(&theta, &theta); // θ_δ^τ θ_τ^ν
    let lambda = elasticity(&gt_inv, trace_mod, mu, det2(&theta));

    let abar = transform4(&lambda, [&theta, &theta, &theta, &theta]);
    let psibar = transform4(&lambda, [&theta, &gt_mixed, &theta, &theta]);
    let obbar = transform4(&lambda, [&theta, &gt_mixed, &theta, &gt_mixed]);
    let l_iitt = transform4(&lambda, [&id, &id, &theta, &theta]);
    let l_iitq = transform4(&lambda, [&id, &id, &theta, &theta2]);

    let db = |s: usize, t: usize, r: usize| ng.db[(s << 2) | (t << 1) | r];

    let mut a = T::zero();
    for x in 0..16 {
        a += bt[x >> 3][(x >> 2) & 1] * lambda[x] * bt[(x >> 1) & 1][x & 1];
    }
    let mut abbar = [T::zero(); 4];
    let mut phibar = [T::zero(); 4];
    for m in 0..2 {
        for n in 0..2 {
            let mut s1 = T::zero();
            let mut s2 = T::zero();
            for al in 0..2 {
                for be in 0..2 {
                    s1 += bt[al][be] * l_iitt[i4(al, be, m, n)];
                    s2 += bt[al][be] * l_iitq[i4(al, be, m, n)];
                }
            }
            abbar[2 * m + n] = s1;
            phibar[2 * m + n] = s2;
        }
    }
    let mut phi = [T::zero(); 2];
    for (m, p) in phi.iter_mut().enumerate() {
        for t_ in 0..2 {
            for r in 0..2 {
                *p += abbar[2 * t_ + r] * db(t_, r, m);
            }
        }
    }
    let mut psi = [T::zero(); 8];
    let mut omegabar = [T::zero(); 8];
    for r in 0..2 {
        for m in 0..2 {
            for n in 0..2 {
                let mut s1 = T::zero();
                let mut s2 = T::zero();
                for s in 0..2 {
                    for t_ in 0..2 {
                        s1 += abar[i4(s, t_, m, n)] * db(s, t_, r);
                        s2 += psibar[i4(r, m, s, t_)] * db(s, t_, n);
                    }
                }
                psi[(r << 2) | (m << 1) | n] = s1;
                omegabar[(r << 2) | (m << 1) | n] = s2;
            }
        }
    }
    let mut omega = [T::zero(); 4];
    for m in 0..2 {
        for n in 0..2 {
            let mut s = T::zero();
            for x in 0..16 {
                let (s_, t_, l_, r_) = (x >> 3, (x >> 2) & 1, (x >> 1) & 1, x & 1);
                s += abar[x] * db(s_, t_, m) * db(l_, r_, n);
            }
            omega[2 * m + n] = s;
        }
    }
    Integrands { a, abar, abbar, phi, phibar, psi, psibar, omega, omegabar, obbar, lambda }
}

/// Quadrature points `(t, [weight of t⁰, t¹, t²-integrands])`.
fn quadrature<T: Real>(order: CoefficientOrder, h0: T) -> Vec<(T, [T; 3])> {
    let two = T::lit(2.0);
    match order {
        CoefficientOrder::Leading => {
            vec![(T::zero(), [two * h0, T::zero(), two / T::lit(3.0) * h0 * h0 * h0])]
        }
        CoefficientOrder::Quadratic => {
            let third = h0 / T::lit(3.0);
            [(-h0, third), (T::zero(), T::lit(4.0) * third), (h0, third)]
                .into_iter()
                .map(|(t, w)| (t, [w, w * t, w * t * t]))
                .collect()
        }
    }
}

pub fn compute_coefficients<T: Real>(
    geom: &SurfaceGeometry<T>,
    mat: &MaterialParams<T>,
    order: CoefficientOrder,
) -> Result<ShellCoefficients<T>> {
    mat.validate()?;
    let nodes = geom.nodes();
    if mat.h0.len() != nodes {
        return Err(Error::InvalidMaterial(format!(
            "{} thickness values for {nodes} nodes",
            mat.h0.len()
        )));
    }
    let mut worst = (0usize, 0.0f64);
    for node in 0..nodes {
        let v = (mat.h0[node] * geom.max_curvature(node)).as_f64();
        if v >= 1.0 || !v.is_finite() {
            return Err(Error::ThinShellViolation { node, value: v });
        }
        if v > worst.1 {
            worst = (node, v);
        }
    }
    if worst.1 >= THIN_SHELL_WARN {
        log::warn!("thin-shell ratio h0*|b| = {:.3} at node {}", worst.1, worst.0);
    }

    let up = |r: usize| vec![Upper; r];
    let mut c = ShellCoefficients {
        a: TensorField::zeros(&[], nodes)?,
        abar: TensorField::zeros(&up(4), nodes)?,
        abbar: TensorField::zeros(&up(2), nodes)?,
        phi: TensorField::zeros(&up(1), nodes)?,
        phibar: TensorField::zeros(&up(2), nodes)?,
        psi: TensorField::zeros(&up(3), nodes)?,
        psibar: TensorField::zeros(&up(4), nodes)?,
        omega: TensorField::zeros(&up(2), nodes)?,
        omegabar: TensorField::zeros(&up(3), nodes)?,
        obbar: TensorField::zeros(&up(4), nodes)?,
        lambda0: TensorField::zeros(&up(4), nodes)?,
        order,
    };
    let trace_mod = mat.trace_modulus();
    let mu = mat.mu;
    let m2 = |f: &TensorField<T>, node: usize| {
        let s = f.node(node);
        [[s[0], s[1]], [s[2], s[3]]]
    };
    for node in 0..nodes {
        let mut db = [T::zero(); 8];
        db.copy_from_slice(geom.grad_second_form.node(node));
        let ng = NodeGeometry {
            g: m2(&geom.metric, node),
            ginv: m2(&geom.inverse_metric, node),
            b: m2(&geom.second_form, node),
            bm: m2(&geom.shape_operator, node),
            db,
        };
        c.lambda0.node_mut(node).copy_from_slice(&integrands(&ng, T::zero(), trace_mod, mu).lambda);
        for (t, w) in quadrature(order, mat.h0[node]) {
            let it = integrands(&ng, t, trace_mod, mu);
            // powers of t: explicit factor plus one per derivative of θ
            accumulate(c.a.node_mut(node), &[it.a], w[0]);
            accumulate(c.abar.node_mut(node), &it.abar, w[2]);
            accumulate(c.abbar.node_mut(node), &it.abbar, w[1]);
            accumulate(c.phi.node_mut(node), &it.phi, w[1]);
            accumulate(c.phibar.node_mut(node), &it.phibar, w[0]);
            accumulate(c.psi.node_mut(node), &it.psi, w[2]);
            accumulate(c.psibar.node_mut(node), &it.psibar, w[1]);
            accumulate(c.omega.node_mut(node), &it.omega, w[2]);
            accumulate(c.omegabar.node_mut(node), &it.omegabar, w[1]);
            accumulate(c.obbar.node_mut(node), &it.obbar, w[0]);
        }
    }
    Ok(c)
}

fn accumulate<T: Real>(dst: &mut [T], src: &[T], w: T) {
    if w == T::zero() {
        return;
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d += w * *s;
    }
}

/// Displacement `X - X0 = ω N + W` split into normal and tangential parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Displacement<T> {
    /// Normal component `ω`.
    pub omega: Vec<T>,
    /// Covariant tangential components `W_α = (X - X0)·T_α`.
    pub w_lower: Vec<[T; 2]>,
    /// Contravariant components `W^μ = g^{μα} W_α`.
    pub w_upper: Vec<[T; 2]>,
}

impl<T: Real> Displacement<T> {
    pub fn zeros(nodes: usize) -> Self {
        Displacement {
            omega: vec![T::zero(); nodes],
            w_lower: vec![[T::zero(); 2]; nodes],
            w_upper: vec![[T::zero(); 2]; nodes],
        }
    }

    /// Builds a displacement from `ω` and covariant `W_α`.
    pub fn from_parts(geom: &SurfaceGeometry<T>, omega: Vec<T>, w_lower: Vec<[T; 2]>) -> Self {
        let w_upper = raise(geom, &w_lower);
        Displacement { omega, w_lower, w_upper }
    }

    pub fn nodes(&self) -> usize {
        self.omega.len()
    }
}

fn raise<T: Real>(geom: &SurfaceGeometry<T>, w: &[[T; 2]]) -> Vec<[T; 2]> {
    w.iter()
        .enumerate()
        .map(|(n, wl)| {
            let gi = geom.inverse_metric.node(n);
            [gi[0] * wl[0] + gi[1] * wl[1], gi[2] * wl[0] + gi[3] * wl[1]]
        })
        .collect()
}

/// Decomposes current positions `x` against the reference configuration.
pub fn decompose_displacement<T: Real>(
    x: &[Vec3<T>],
    grid: &SurfaceGrid<T>,
    geom: &SurfaceGeometry<T>,
) -> Result<Displacement<T>> {
    if x.len() != grid.x0.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} positions for {} reference nodes",
            x.len(),
            grid.x0.len()
        )));
    }
    let offsets: Vec<Vec3<T>> = x.iter().zip(&grid.x0).map(|(a, b)| sub3(a, b)).collect();
    decompose_offset(&offsets, geom)
}

/// Same as [`decompose_displacement`] but takes `X - X0` directly.
pub fn decompose_offset<T: Real>(offset: &[Vec3<T>], geom: &SurfaceGeometry<T>) -> Result<Displacement<T>> {
    if offset.len() != geom.nodes() {
        return Err(Error::ShapeMismatch(format!(
            "{} displacements for {} nodes",
            offset.len(),
            geom.nodes()
        )));
    }
    let f = &geom.frame;
    let omega = offset.iter().zip(&f.normal).map(|(d, n)| dot3(d, n)).collect();
    let w_lower: Vec<[T; 2]> = offset
        .iter()
        .enumerate()
        .map(|(i, d)| [dot3(d, &f.tangents[0][i]), dot3(d, &f.tangents[1][i])])
        .collect();
    Ok(Displacement::from_parts(geom, omega, w_lower))
}

/// Shell force density per unit parameter area.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellForceDensity<T> {
    /// Normal component `f³`.
    pub f3: Vec<T>,
    /// Contravariant tangential components `f^μ`.
    pub fmu: Vec<[T; 2]>,
    /// `f³ N + f^μ T_μ`.
    pub cartesian: Vec<Vec3<T>>,
}

pub fn force_to_cartesian<T: Real>(f3: &[T], fmu: &[[T; 2]], geom: &SurfaceGeometry<T>) -> Vec<Vec3<T>> {
    let f = &geom.frame;
    (0..f3.len())
        .map(|n| {
            let (nn, t1, t2) = (&f.normal[n], &f.tangents[0][n], &f.tangents[1][n]);
            let mut v = [T::zero(); 3];
            for c in 0..3 {
                v[c] = f3[n] * nn[c] + fmu[n][0] * t1[c] + fmu[n][1] * t2[c];
            }
            v
        })
        .collect()
}

fn times_scalar<T: Real>(field: &TensorField<T>, s: &[T]) -> TensorField<T> {
    let mut out = field.clone();
    let c = out.comps();
    for (n, v) in s.iter().enumerate() {
        out.node_mut(n).iter_mut().take(c).for_each(|x| *x *= *v);
    }
    out
}

/// Energy-variation components `(f³, f^μ)` before the force sign is applied.
pub fn energy_variation<T: Real>(
    disp: &Displacement<T>,
    coeff: &ShellCoefficients<T>,
    geom: &SurfaceGeometry<T>,
) -> Result<(Vec<T>, Vec<[T; 2]>)> {
    let nodes = geom.nodes();
    if coeff.nodes() != nodes {
        return Err(Error::MissingCoefficients);
    }
    if disp.nodes() != nodes {
        return Err(Error::ShapeMismatch(format!("displacement over {} nodes", disp.nodes())));
    }
    let lat = &geom.lattice;
    let gam = &geom.christoffel;
    let cov = |f: &TensorField<T>| covariant_derivative(f, gam, lat);
    let div = |f: &TensorField<T>, slot: usize| covariant_divergence(f, slot, gam, lat);
    // ∇̃_σ ∇̃_τ M^{στ}: the inner derivative contracts the second slot
    let divdiv = |m: &TensorField<T>| -> Result<TensorField<T>> { div(&div(m, 1)?, 0) };

    let omega = TensorField::scalar(disp.omega.clone());
    let w = TensorField::from_data(&[Lower], nodes, disp.w_lower.iter().flatten().copied().collect())?;
    let hess = cov(&cov(&omega)?)?; // ∇̃_μ D_ν ω
    let dw = cov(&w)?; // ∇̃_σ W_τ

    let mut f3 = TensorField::scalar(vec![T::zero(); nodes]);
    let mut fm = TensorField::zeros(&[Upper], nodes)?;
    let one = T::one();

    if !coeff.a.is_zero() {
        f3.axpy(one, &times_scalar(&coeff.a, &disp.omega))?;
    }
    if !coeff.abar.is_zero() {
        f3.axpy(one, &divdiv(&coeff.abar.contract(&hess, &[(2, 0), (3, 1)])?)?)?;
    }
    if !coeff.abbar.is_zero() {
        f3.axpy(-one, &divdiv(&times_scalar(&coeff.abbar, &disp.omega))?)?;
        f3.axpy(-one, &coeff.abbar.contract(&hess, &[(0, 0), (1, 1)])?)?;
    }
    if !coeff.phi.is_zero() {
        f3.axpy(one, &coeff.phi.contract(&w, &[(0, 0)])?)?;
        fm.axpy(one, &times_scalar(&coeff.phi, &disp.omega))?;
    }
    if !coeff.phibar.is_zero() {
        f3.axpy(one, &coeff.phibar.contract(&dw, &[(0, 0), (1, 1)])?)?;
        fm.axpy(-one, &div(&times_scalar(&coeff.phibar, &disp.omega), 0)?)?;
    }
    if !coeff.psi.is_zero() {
        f3.axpy(-one, &divdiv(&coeff.psi.contract(&w, &[(0, 0)])?)?)?;
        fm.axpy(-one, &coeff.psi.contract(&hess, &[(1, 0), (2, 1)])?)?;
    }
    if !coeff.psibar.is_zero() {
        // ∇̃_μ ∇̃_ν (Ψ̄^{στμν} ∇̃_σ W_τ)
        f3.axpy(-one, &divdiv(&coeff.psibar.contract(&dw, &[(0, 0), (1, 1)])?)?)?;
        // ∇̃_ν (Ψ̄^{νμστ} ∇̃_σ D_τ ω)
        fm.axpy(one, &div(&coeff.psibar.contract(&hess, &[(2, 0), (3, 1)])?, 0)?)?;
    }
    if !coeff.omega.is_zero() {
        fm.axpy(one, &coeff.omega.contract(&w, &[(1, 0)])?)?;
    }
    if !coeff.omegabar.is_zero() {
        fm.axpy(one, &coeff.omegabar.contract(&dw, &[(0, 0), (1, 1)])?)?;
        fm.axpy(-one, &div(&coeff.omegabar.contract(&w, &[(2, 0)])?, 0)?)?;
    }
    if !coeff.obbar.is_zero() {
        // ∇̃_ν (Ω̿^{στνμ} ∇̃_σ W_τ)
        fm.axpy(-one, &div(&coeff.obbar.contract(&dw, &[(0, 0), (1, 1)])?, 0)?)?;
    }
    let fmu = fm.data().chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    Ok((f3.data().to_vec(), fmu))
}

/// Force density the shell applies to the fluid for a given displacement.
pub fn compute_force<T: Real>(
    disp: &Displacement<T>,
    coeff: &ShellCoefficients<T>,
    geom: &SurfaceGeometry<T>,
) -> Result<ShellForceDensity<T>> {
    let (mut f3, mut fmu) = energy_variation(disp, coeff, geom)?;
    let sign = T::lit(ELASTIC_FORCE_SIGN);
    f3.iter_mut().for_each(|v| *v *= sign);
    fmu.iter_mut().flatten().for_each(|v| *v *= sign);
    let cartesian = force_to_cartesian(&f3, &fmu, geom);
    Ok(ShellForceDensity { f3, fmu, cartesian })
}
