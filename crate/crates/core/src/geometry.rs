//! Intrinsic and extrinsic geometry of the reference middle surface.
//!
//! All quantities are computed once from the reference positions with the
//! lattice difference operator [`surface_diff`] and are immutable afterwards.

use crate::error::{Error, Result};
use crate::scalar::{cross3, dot3, norm3, Real, Vec3};
use crate::tensor::{flatten, surface_diff_into, unflatten, Lattice, Slot, TensorField};

use Slot::{Lower, Upper};

const FRAME_EPS: f64 = 1e-14;
const METRIC_EPS: f64 = 1e-14;

/// Reference middle surface sampled on a rectangular parameter lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid<T> {
    pub lattice: Lattice<T>,
    /// Reference positions `X0`, one per node.
    pub x0: Vec<Vec3<T>>,
}

impl<T: Real> SurfaceGrid<T> {
    pub fn new(lattice: Lattice<T>, x0: Vec<Vec3<T>>) -> Result<Self> {
        let grid = SurfaceGrid { lattice, x0 };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if self.x0.len() != self.lattice.nodes() {
            return Err(Error::InvalidGrid(format!(
                "{} positions for {} nodes",
                self.x0.len(),
                self.lattice.nodes()
            )));
        }
        if self.x0.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reference positions"));
        }
        Ok(())
    }

    /// Samples `f(k1, k2)` on a uniform lattice.
    pub fn from_fn(n1: usize, n2: usize, dq1: T, dq2: T, f: impl Fn(usize, usize) -> Vec3<T>) -> Result<Self> {
        let lattice = Lattice::uniform(n1, n2, dq1, dq2);
        let x0 = (0..n1 * n2).map(|n| f(n / n2, n % n2)).collect();
        Self::new(lattice, x0)
    }
}

/// Tangent vectors `T_1, T_2` and unit normal `N` at every node.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T> {
    pub tangents: [Vec<Vec3<T>>; 2],
    pub normal: Vec<Vec3<T>>,
}

/// Differentiates each Cartesian component of a vector field along `axis`.
pub fn surface_diff_vec3<T: Real>(lattice: &Lattice<T>, field: &[Vec3<T>], axis: usize) -> Result<Vec<Vec3<T>>> {
    let n = field.len();
    let mut out = vec![[T::zero(); 3]; n];
    let mut comp = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    for c in 0..3 {
        for (dst, v) in comp.iter_mut().zip(field) {
            *dst = v[c];
        }
        surface_diff_into(lattice, &comp, axis, &mut d)?;
        for (o, v) in out.iter_mut().zip(&d) {
            o[c] = *v;
        }
    }
    Ok(out)
}

pub fn build_frame<T: Real>(grid: &SurfaceGrid<T>) -> Result<Frame<T>> {
    grid.validate()?;
    let lat = &grid.lattice;
    let t1 = surface_diff_vec3(lat, &grid.x0, 0)?;
    let t2 = surface_diff_vec3(lat, &grid.x0, 1)?;
    let mut normal = Vec::with_capacity(t1.len());
    for (node, (a, b)) in t1.iter().zip(&t2).enumerate() {
        let c = cross3(a, b);
        let len = norm3(&c);
        if !(len.as_f64() >= FRAME_EPS) {
            let (k1, k2) = lat.coords(node);
            return Err(Error::DegenerateFrame { k1, k2, value: len.as_f64() });
        }
        normal.push([c[0] / len, c[1] / len, c[2] / len]);
    }
    Ok(Frame { tangents: [t1, t2], normal })
}

/// Metric `g_{μν} = T_μ · T_ν` and its pointwise inverse.
pub fn build_metric<T: Real>(lattice: &Lattice<T>, frame: &Frame<T>) -> Result<(TensorField<T>, TensorField<T>)> {
    let nodes = frame.normal.len();
    let mut g = TensorField::zeros(&[Lower, Lower], nodes)?;
    let mut ginv = TensorField::zeros(&[Upper, Upper], nodes)?;
    for node in 0..nodes {
        let t = [&frame.tangents[0][node], &frame.tangents[1][node]];
        let g11 = dot3(t[0], t[0]);
        let g12 = dot3(t[0], t[1]);
        let g22 = dot3(t[1], t[1]);
        let det = g11 * g22 - g12 * g12;
        if !(det.as_f64() >= METRIC_EPS) {
            let (k1, k2) = lattice.coords(node);
            return Err(Error::SingularMetric { k1, k2, value: det.as_f64() });
        }
        g.node_mut(node).copy_from_slice(&[g11, g12, g12, g22]);
        ginv.node_mut(node).copy_from_slice(&[g22 / det, -g12 / det, -g12 / det, g11 / det]);
    }
    Ok((g, ginv))
}

/// Second fundamental form `b_{μν} = D_μ N · T_ν`, symmetrized.
pub fn build_second_form<T: Real>(lattice: &Lattice<T>, frame: &Frame<T>) -> Result<TensorField<T>> {
    let dn = [
        surface_diff_vec3(lattice, &frame.normal, 0)?,
        surface_diff_vec3(lattice, &frame.normal, 1)?,
    ];
    let nodes = frame.normal.len();
    let half = T::lit(0.5);
    TensorField::from_fn(&[Lower, Lower], nodes, |node, i| {
        let (m, n) = (i[0], i[1]);
        let a = dot3(&dn[m][node], &frame.tangents[n][node]);
        let b = dot3(&dn[n][node], &frame.tangents[m][node]);
        half * (a + b)
    })
}

/// Christoffel symbols `Γ^λ_{μν}` (slots: upper λ, lower μ, lower ν).
pub fn build_christoffel<T: Real>(
    lattice: &Lattice<T>,
    metric: &TensorField<T>,
    inverse_metric: &TensorField<T>,
) -> Result<TensorField<T>> {
    let dg = [metric.diff(lattice, 0)?, metric.diff(lattice, 1)?];
    let half = T::lit(0.5);
    TensorField::from_fn(&[Upper, Lower, Lower], metric.nodes(), |node, i| {
        let (l, m, n) = (i[0], i[1], i[2]);
        let mut acc = T::zero();
        for s in 0..2 {
            let bracket = dg[n].at(node, &[m, s]) + dg[m].at(node, &[s, n]) - dg[s].at(node, &[m, n]);
            acc += inverse_metric.at(node, &[s, l]) * bracket;
        }
        half * acc
    })
}

/// Discrete covariant derivative `∇̃_α A`: the new lower slot is prepended.
///
/// Upper slots pick up `+Γ^ν_{ασ} A^{..σ..}` and lower slots
/// `-Γ^σ_{αμ} A_{..σ..}`.
pub fn covariant_derivative<T: Real>(
    field: &TensorField<T>,
    christoffel: &TensorField<T>,
    lattice: &Lattice<T>,
) -> Result<TensorField<T>> {
    let rank = field.rank();
    if rank > 4 {
        return Err(Error::UnsupportedValence(rank));
    }
    if christoffel.slots() != [Upper, Lower, Lower] || christoffel.nodes() != field.nodes() {
        return Err(Error::IndexMismatch("christoffel field has wrong shape".into()));
    }
    let mut slots = vec![Lower];
    slots.extend_from_slice(field.slots());
    let mut out = TensorField::zeros(&slots, field.nodes())?;
    let partial = [field.diff(lattice, 0)?, field.diff(lattice, 1)?];
    let comps = field.comps();
    let mut idx = vec![0usize; rank];
    for node in 0..field.nodes() {
        let a = field.node(node);
        let gam = christoffel.node(node);
        let gamma = |l: usize, m: usize, n: usize| gam[l * 4 + m * 2 + n];
        for alpha in 0..2 {
            let d = partial[alpha].node(node);
            for flat in 0..comps {
                unflatten(flat, &mut idx);
                let mut v = d[flat];
                for k in 0..rank {
                    let orig = idx[k];
                    for s in 0..2 {
                        idx[k] = s;
                        let src = a[flatten(&idx)];
                        match field.slots()[k] {
                            Upper => v += gamma(orig, alpha, s) * src,
                            Lower => v -= gamma(s, alpha, orig) * src,
                        }
                    }
                    idx[k] = orig;
                }
                out.node_mut(node)[alpha * comps + flat] = v;
            }
        }
    }
    Ok(out)
}

/// Covariant divergence over `slot`: `∇̃_α A^{..α..}`.
pub fn covariant_divergence<T: Real>(
    field: &TensorField<T>,
    slot: usize,
    christoffel: &TensorField<T>,
    lattice: &Lattice<T>,
) -> Result<TensorField<T>> {
    if field.slots().get(slot) != Some(&Upper) {
        return Err(Error::IndexMismatch(format!("divergence over non-upper slot {slot}")));
    }
    covariant_derivative(field, christoffel, lattice)?.trace(0, slot + 1)
}

/// Reference-surface geometry shared by the shell force operator.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry<T> {
    pub lattice: Lattice<T>,
    pub frame: Frame<T>,
    /// `g_{μν}`
    pub metric: TensorField<T>,
    /// `g^{μν}`
    pub inverse_metric: TensorField<T>,
    /// `b_{μν}`
    pub second_form: TensorField<T>,
    /// `b_μ^ν = b_{μσ} g^{σν}`
    pub shape_operator: TensorField<T>,
    /// `Γ^λ_{μν}`
    pub christoffel: TensorField<T>,
    /// `∇̃_α b_β^γ`
    pub grad_second_form: TensorField<T>,
}

impl<T: Real> SurfaceGeometry<T> {
    pub fn build(grid: &SurfaceGrid<T>) -> Result<Self> {
        let lattice = grid.lattice.clone();
        let frame = build_frame(grid)?;
        let (metric, inverse_metric) = build_metric(&lattice, &frame)?;
        let second_form = build_second_form(&lattice, &frame)?;
        let christoffel = build_christoffel(&lattice, &metric, &inverse_metric)?;
        let shape_operator = second_form.contract(&inverse_metric, &[(1, 0)])?;
        let grad_second_form = covariant_derivative(&shape_operator, &christoffel, &lattice)?;
        Ok(SurfaceGeometry {
            lattice,
            frame,
            metric,
            inverse_metric,
            second_form,
            shape_operator,
            christoffel,
            grad_second_form,
        })
    }

    pub fn nodes(&self) -> usize {
        self.lattice.nodes()
    }

    /// Largest absolute principal curvature at `node`.
    pub fn max_curvature(&self, node: usize) -> T {
        let s = self.shape_operator.node(node);
        let (a, b, c, d) = (s[0], s[1], s[2], s[3]);
        let half = T::lit(0.5);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr * half * half - det).max(T::zero()).sqrt();
        (tr * half + disc).abs().max((tr * half - disc).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n1: usize, n2: usize) -> SurfaceGrid<f64> {
        SurfaceGrid::from_fn(n1, n2, 0.1, 0.2, |k1, k2| [k1 as f64 * 0.1, k2 as f64 * 0.2, 0.0]).unwrap()
    }

    #[test]
    fn flat_sheet_frame_and_forms() {
        let g = SurfaceGeometry::build(&flat(6, 7)).unwrap();
        for n in 0..g.nodes() {
            assert!((g.frame.tangents[0][n][0] - 1.0).abs() < 1e-14 && g.frame.tangents[0][n][1] == 0.0);
            assert!((g.frame.tangents[1][n][1] - 1.0).abs() < 1e-14);
            assert!((g.frame.normal[n][2] - 1.0).abs() < 1e-14);
            let m = g.metric.node(n);
            assert!((m[0] - 1.0).abs() < 1e-14 && m[1].abs() < 1e-14 && (m[3] - 1.0).abs() < 1e-14);
        }
        assert!(g.second_form.max_abs() < 1e-14);
        assert!(g.christoffel.max_abs() < 1e-12);
    }

    #[test]
    fn collapsed_parameterization_is_degenerate() {
        let grid = SurfaceGrid::from_fn(5, 5, 0.1, 0.1, |k1, _| [k1 as f64, 0.0, 0.0]).unwrap();
        assert!(matches!(build_frame(&grid), Err(Error::DegenerateFrame { .. })));
    }

    #[test]
    fn rejects_small_lattices() {
        let lat = Lattice::uniform(4, 6, 0.1, 0.1);
        let r = SurfaceGrid::new(lat, vec![[0.0; 3]; 24]);
        assert!(matches!(r, Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn scalar_covariant_derivative_is_plain_difference() {
        let grid = SurfaceGrid::from_fn(7, 6, 0.1, 0.1, |k1, k2| {
            let (u, v) = (k1 as f64 * 0.1, k2 as f64 * 0.1);
            [u, v, 0.3 * u * u + 0.2 * v * u]
        })
        .unwrap();
        let g = SurfaceGeometry::build(&grid).unwrap();
        let phi: Vec<f64> = (0..g.nodes()).map(|n| (n as f64 * 0.37).sin()).collect();
        let d = covariant_derivative(&TensorField::scalar(phi.clone()), &g.christoffel, &g.lattice).unwrap();
        for axis in 0..2 {
            let plain = crate::tensor::surface_diff(&g.lattice, &phi, axis).unwrap();
            for n in 0..g.nodes() {
                assert_eq!(d.at(n, &[axis]), plain[n]);
            }
        }
    }

    #[test]
    fn symmetric_forms() {
        let grid = SurfaceGrid::from_fn(9, 8, 0.1, 0.1, |k1, k2| {
            let (u, v) = (k1 as f64 * 0.1, k2 as f64 * 0.1);
            [u.cos() * (1.0 + v), u.sin() * (1.0 + v), 0.2 * v * v + 0.1 * u]
        })
        .unwrap();
        let g = SurfaceGeometry::build(&grid).unwrap();
        for n in 0..g.nodes() {
            assert_eq!(g.second_form.at(n, &[0, 1]), g.second_form.at(n, &[1, 0]));
            for l in 0..2 {
                assert_eq!(g.christoffel.at(n, &[l, 0, 1]), g.christoffel.at(n, &[l, 1, 0]));
            }
            let nn = g.frame.normal[n];
            assert!((dot3(&nn, &nn) - 1.0).abs() < 1e-12);
            // ginv * g = I
            for i in 0..2 {
                for j in 0..2 {
                    let s: f64 = (0..2).map(|k| g.inverse_metric.at(n, &[i, k]) * g.metric.at(n, &[k, j])).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((s - e).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn unsupported_valence() {
        let f = TensorField::<f64>::zeros(&[Lower; 5], 25).unwrap();
        let gam = TensorField::<f64>::zeros(&[Upper, Lower, Lower], 25).unwrap();
        let lat = Lattice::uniform(5, 5, 1.0, 1.0);
        assert!(matches!(covariant_derivative(&f, &gam, &lat), Err(Error::UnsupportedValence(5))));
    }
}
