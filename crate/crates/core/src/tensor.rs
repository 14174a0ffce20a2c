//! Surface lattice and tensor fields stored over it.
//!
//! Every tensor index ranges over the two surface directions, so a field with
//! `r` slots stores `2^r` components per node. Component multi-indices are
//! flattened with slot 0 as the most significant bit.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rectangular parameter lattice of the middle surface.
///
/// Node `(k1, k2)` is stored at `k1 * n2 + k2`. The mesh width along the
/// second axis may differ from row to row.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    pub n1: usize,
    pub n2: usize,
    pub dq1: T,
    /// Mesh width along axis 2 for each q1-row (`n1` entries).
    pub dq2: Vec<T>,
}

impl<T: Real> Lattice<T> {
    pub fn uniform(n1: usize, n2: usize, dq1: T, dq2: T) -> Self {
        Lattice { n1, n2, dq1, dq2: vec![dq2; n1] }
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn node(&self, k1: usize, k2: usize) -> usize {
        k1 * self.n2 + k2
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node / self.n2, node % self.n2)
    }

    /// Area weight `dq1 * dq2(row)` of a node.
    #[inline]
    pub fn area(&self, node: usize) -> T {
        self.dq1 * self.dq2[node / self.n2]
    }

    pub fn areas(&self) -> Vec<T> {
        (0..self.nodes()).map(|n| self.area(n)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 5 {
            return Err(Error::DimensionTooSmall { axis: 1, dim: self.n1, min: 5 });
        }
        if self.n2 < 5 {
            return Err(Error::DimensionTooSmall { axis: 2, dim: self.n2, min: 5 });
        }
        if self.dq2.len() != self.n1 {
            return Err(Error::InvalidGrid(format!(
                "{} row widths for {} rows",
                self.dq2.len(),
                self.n1
            )));
        }
        if !(self.dq1 > T::zero()) || !self.dq1.is_finite() {
            return Err(Error::InvalidGrid(format!("dq1 = {} must be positive", self.dq1)));
        }
        if let Some(bad) = self.dq2.iter().find(|d| !(**d > T::zero()) || !d.is_finite()) {
            return Err(Error::InvalidGrid(format!("dq2 = {bad} must be positive")));
        }
        Ok(())
    }
}

/// Difference operator `D_axis` on the surface lattice: centered in the
/// interior, forward on the first node and backward on the last.
///
/// `axis` is 0 for q1 and 1 for q2; axis 1 uses the row's own mesh width.
pub fn surface_diff<T: Real>(lattice: &Lattice<T>, values: &[T], axis: usize) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); values.len()];
    surface_diff_into(lattice, values, axis, &mut out)?;
    Ok(out)
}

pub(crate) fn surface_diff_into<T: Real>(
    lattice: &Lattice<T>,
    values: &[T],
    axis: usize,
    out: &mut [T],
) -> Result<()> {
    let (n1, n2) = (lattice.n1, lattice.n2);
    if values.len() != n1 * n2 || out.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "field of {} values on a {n1}x{n2} lattice",
            values.len()
        )));
    }
    let half = T::lit(0.5);
    match axis {
        0 => {
            if n1 < 2 {
                return Err(Error::DimensionTooSmall { axis: 1, dim: n1, min: 2 });
            }
            let inv = T::one() / lattice.dq1;
            for k1 in 0..n1 {
                for k2 in 0..n2 {
                    let v = |k: usize| values[k * n2 + k2];
                    out[k1 * n2 + k2] = if k1 == 0 {
                        (v(1) - v(0)) * inv
                    } else if k1 == n1 - 1 {
                        (v(k1) - v(k1 - 1)) * inv
                    } else {
                        (v(k1 + 1) - v(k1 - 1)) * inv * half
                    };
                }
            }
        }
        1 => {
            if n2 < 2 {
                return Err(Error::DimensionTooSmall { axis: 2, dim: n2, min: 2 });
            }
            for k1 in 0..n1 {
                let inv = T::one() / lattice.dq2[k1];
                let row = &values[k1 * n2..(k1 + 1) * n2];
                let dst = &mut out[k1 * n2..(k1 + 1) * n2];
                for k2 in 0..n2 {
                    dst[k2] = if k2 == 0 {
                        (row[1] - row[0]) * inv
                    } else if k2 == n2 - 1 {
                        (row[k2] - row[k2 - 1]) * inv
                    } else {
                        (row[k2 + 1] - row[k2 - 1]) * inv * half
                    };
                }
            }
        }
        _ => return Err(Error::IndexMismatch(format!("surface axis {axis}"))),
    }
    Ok(())
}

/// Variance of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    /// Covariant (subscript) index.
    Lower,
    /// Contravariant (superscript) index.
    Upper,
}

const MAX_RANK: usize = 6;

/// A `(p, q)` tensor field over the surface lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField<T> {
    slots: Vec<Slot>,
    nodes: usize,
    data: Vec<T>,
}

impl<T: Real> TensorField<T> {
    pub fn zeros(slots: &[Slot], nodes: usize) -> Result<Self> {
        if slots.len() > MAX_RANK {
            return Err(Error::UnsupportedValence(slots.len()));
        }
        Ok(TensorField {
            slots: slots.to_vec(),
            nodes,
            data: vec![T::zero(); nodes << slots.len()],
        })
    }

    pub fn scalar(values: Vec<T>) -> Self {
        TensorField { slots: Vec::new(), nodes: values.len(), data: values }
    }

    /// Builds a field from node-major component data.
    pub fn from_data(slots: &[Slot], nodes: usize, data: Vec<T>) -> Result<Self> {
        if slots.len() > MAX_RANK {
            return Err(Error::UnsupportedValence(slots.len()));
        }
        if data.len() != nodes << slots.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {nodes} nodes of rank {}",
                data.len(),
                slots.len()
            )));
        }
        Ok(TensorField { slots: slots.to_vec(), nodes, data })
    }

    /// Builds a field by evaluating `f(node, multi_index)`.
    pub fn from_fn(slots: &[Slot], nodes: usize, mut f: impl FnMut(usize, &[usize]) -> T) -> Result<Self> {
        let mut out = Self::zeros(slots, nodes)?;
        let rank = slots.len();
        let comps = out.comps();
        let mut idx = vec![0usize; rank];
        for node in 0..nodes {
            for flat in 0..comps {
                unflatten(flat, &mut idx);
                out.data[node * comps + flat] = f(node, &idx);
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    /// `(covariant, contravariant)` index counts.
    pub fn valence(&self) -> (usize, usize) {
        let lower = self.slots.iter().filter(|s| **s == Slot::Lower).count();
        (lower, self.rank() - lower)
    }

    #[inline]
    pub fn comps(&self) -> usize {
        1 << self.slots.len()
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn node(&self, node: usize) -> &[T] {
        let c = self.comps();
        &self.data[node * c..(node + 1) * c]
    }

    #[inline]
    pub fn node_mut(&mut self, node: usize) -> &mut [T] {
        let c = self.comps();
        &mut self.data[node * c..(node + 1) * c]
    }

    #[inline]
    pub fn at(&self, node: usize, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.rank());
        self.data[node * self.comps() + flatten(idx)]
    }

    #[inline]
    pub fn set(&mut self, node: usize, idx: &[usize], value: T) {
        let c = self.comps();
        self.data[node * c + flatten(idx)] = value;
    }

    /// Values of one flattened component at every node.
    pub fn component(&self, flat: usize) -> Vec<T> {
        let c = self.comps();
        (0..self.nodes).map(|n| self.data[n * c + flat]).collect()
    }

    fn set_component(&mut self, flat: usize, values: &[T]) {
        let c = self.comps();
        for (n, v) in values.iter().enumerate() {
            self.data[n * c + flat] = *v;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        if self.slots != other.slots || self.nodes != other.nodes {
            return Err(Error::IndexMismatch(format!(
                "cannot add {:?} and {:?}",
                self.slots, other.slots
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
        Ok(())
    }

    /// Componentwise `D_axis` of every component.
    pub fn diff(&self, lattice: &Lattice<T>, axis: usize) -> Result<Self> {
        let mut out = self.clone();
        let mut buf = vec![T::zero(); self.nodes];
        for flat in 0..self.comps() {
            let comp = self.component(flat);
            surface_diff_into(lattice, &comp, axis, &mut buf)?;
            out.set_component(flat, &buf);
        }
        Ok(out)
    }

    /// Tensor product of `self` and `other` contracted over `pairs`
    /// (`(slot in self, slot in other)`). Free slots of `self` come first.
    /// Each pair must join a lower with an upper slot.
    pub fn contract(&self, other: &Self, pairs: &[(usize, usize)]) -> Result<Self> {
        if self.nodes != other.nodes {
            return Err(Error::ShapeMismatch(format!(
                "contracting fields over {} and {} nodes",
                self.nodes, other.nodes
            )));
        }
        for &(i, j) in pairs {
            if i >= self.rank() || j >= other.rank() {
                return Err(Error::IndexMismatch(format!("contraction pair ({i}, {j}) out of range")));
            }
            if self.slots[i] == other.slots[j] {
                return Err(Error::IndexMismatch(format!(
                    "contraction pair ({i}, {j}) joins two {:?} slots",
                    self.slots[i]
                )));
            }
        }
        let free_a: Vec<usize> = (0..self.rank()).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
        let free_b: Vec<usize> = (0..other.rank()).filter(|j| !pairs.iter().any(|p| p.1 == *j)).collect();
        let mut slots: Vec<Slot> = free_a.iter().map(|&i| self.slots[i]).collect();
        slots.extend(free_b.iter().map(|&j| other.slots[j]));
        let mut out = Self::zeros(&slots, self.nodes)?;

        // Precompute (result, summed) -> (flat_a, flat_b).
        let k = pairs.len();
        let (ra, rb, rr) = (self.rank(), other.rank(), slots.len());
        let mut table = Vec::with_capacity(1 << (rr + k));
        let mut ridx = vec![0usize; rr];
        let mut sidx = vec![0usize; k];
        let mut ia = vec![0usize; ra];
        let mut ib = vec![0usize; rb];
        for r in 0..(1usize << rr) {
            unflatten(r, &mut ridx);
            for s in 0..(1usize << k) {
                unflatten(s, &mut sidx);
                for (pos, &i) in free_a.iter().enumerate() {
                    ia[i] = ridx[pos];
                }
                for (pos, &j) in free_b.iter().enumerate() {
                    ib[j] = ridx[free_a.len() + pos];
                }
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    ia[i] = sidx[p];
                    ib[j] = sidx[p];
                }
                table.push((flatten(&ia), flatten(&ib)));
            }
        }
        let (ca, cb, cr) = (self.comps(), other.comps(), out.comps());
        let per = 1usize << k;
        for node in 0..self.nodes {
            let a = &self.data[node * ca..(node + 1) * ca];
            let b = &other.data[node * cb..(node + 1) * cb];
            let dst = &mut out.data[node * cr..(node + 1) * cr];
            for (r, d) in dst.iter_mut().enumerate() {
                let mut acc = T::zero();
                for &(fa, fb) in &table[r * per..(r + 1) * per] {
                    acc += a[fa] * b[fb];
                }
                *d = acc;
            }
        }
        Ok(out)
    }

    /// Contraction of slots `i` and `j` of the same field.
    pub fn trace(&self, i: usize, j: usize) -> Result<Self> {
        if i == j || i >= self.rank() || j >= self.rank() {
            return Err(Error::IndexMismatch(format!("trace over slots ({i}, {j})")));
        }
        if self.slots[i] == self.slots[j] {
            return Err(Error::IndexMismatch(format!("trace joins two {:?} slots", self.slots[i])));
        }
        let free: Vec<usize> = (0..self.rank()).filter(|s| *s != i && *s != j).collect();
        let slots: Vec<Slot> = free.iter().map(|&s| self.slots[s]).collect();
        let mut out = Self::zeros(&slots, self.nodes)?;
        let mut ridx = vec![0usize; slots.len()];
        let mut full = vec![0usize; self.rank()];
        let mut table = Vec::new();
        for r in 0..out.comps() {
            unflatten(r, &mut ridx);
            for (pos, &s) in free.iter().enumerate() {
                full[s] = ridx[pos];
            }
            for m in 0..2 {
                full[i] = m;
                full[j] = m;
                table.push(flatten(&full));
            }
        }
        let (c, cr) = (self.comps(), out.comps());
        for node in 0..self.nodes {
            let src = &self.data[node * c..(node + 1) * c];
            for r in 0..cr {
                out.data[node * cr + r] = src[table[2 * r]] + src[table[2 * r + 1]];
            }
        }
        Ok(out)
    }
}

#[inline]
pub(crate) fn flatten(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| (acc << 1) | i)
}

#[inline]
pub(crate) fn unflatten(mut flat: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat & 1;
        flat >>= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Lattice<f64> {
        Lattice::uniform(7, 6, 0.1, 0.2)
    }

    #[test]
    fn diff_of_constant_is_zero() {
        let l = lat();
        let d = surface_diff(&l, &vec![3.5; l.nodes()], 0).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
        let d = surface_diff(&l, &vec![3.5; l.nodes()], 1).unwrap();
        assert!(d.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn diff_of_linear_is_exact() {
        let l = lat();
        let c = 2.5;
        let f: Vec<f64> = (0..l.nodes()).map(|n| c * l.coords(n).0 as f64 * l.dq1).collect();
        for v in surface_diff(&l, &f, 0).unwrap() {
            assert!((v - c).abs() < 1e-12);
        }
    }

    #[test]
    fn diff_of_square_has_first_order_boundary_bias() {
        let l = lat();
        let q = |k1: usize| k1 as f64 * l.dq1;
        let f: Vec<f64> = (0..l.nodes()).map(|n| q(l.coords(n).0).powi(2)).collect();
        let d = surface_diff(&l, &f, 0).unwrap();
        for n in 0..l.nodes() {
            let (k1, _) = l.coords(n);
            let expected = if k1 == 0 {
                2.0 * q(k1) + l.dq1
            } else if k1 == l.n1 - 1 {
                2.0 * q(k1) - l.dq1
            } else {
                2.0 * q(k1)
            };
            assert!((d[n] - expected).abs() < 1e-12, "k1={k1}: {} vs {expected}", d[n]);
        }
    }

    #[test]
    fn diff_uses_row_spacing() {
        let mut l = lat();
        l.dq2 = (0..l.n1).map(|k| 0.1 + 0.05 * k as f64).collect();
        let f: Vec<f64> = (0..l.nodes())
            .map(|n| {
                let (k1, k2) = l.coords(n);
                3.0 * k2 as f64 * l.dq2[k1]
            })
            .collect();
        for v in surface_diff(&l, &f, 1).unwrap() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diff_rejects_single_node_axis() {
        let l = Lattice::uniform(1, 4, 1.0, 1.0);
        assert!(matches!(
            surface_diff(&l, &[0.0; 4], 0),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn contraction_matches_dense_loops() {
        use Slot::*;
        let n = 3;
        let a = TensorField::from_fn(&[Upper, Upper, Upper], n, |node, i| {
            (node + 1) as f64 * (1.0 + i[0] as f64 + 2.0 * i[1] as f64 - 0.5 * i[2] as f64)
        })
        .unwrap();
        let b = TensorField::from_fn(&[Lower, Lower], n, |node, i| {
            0.3 * node as f64 + i[0] as f64 - 1.7 * i[1] as f64
        })
        .unwrap();
        // c^{x} = a^{x m n} b_{m n}
        let c = a.contract(&b, &[(1, 0), (2, 1)]).unwrap();
        assert_eq!(c.slots(), &[Upper]);
        for node in 0..n {
            for x in 0..2 {
                let mut s = 0.0;
                for m in 0..2 {
                    for k in 0..2 {
                        s += a.at(node, &[x, m, k]) * b.at(node, &[m, k]);
                    }
                }
                assert!((c.at(node, &[x]) - s).abs() < 1e-14);
            }
        }
        let t = a.contract(&b, &[(0, 1)]).unwrap().trace(0, 2).unwrap();
        // free slots after the first contraction are (a1, a2, b0); trace a1 with b0
        for node in 0..n {
            for x in 0..2 {
                let mut e = 0.0;
                for m in 0..2 {
                    for k in 0..2 {
                        e += a.at(node, &[k, m, x]) * b.at(node, &[m, k]);
                    }
                }
                assert!((t.at(node, &[x]) - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn contraction_rejects_same_variance() {
        use Slot::*;
        let a = TensorField::<f64>::zeros(&[Lower], 2).unwrap();
        assert!(a.contract(&a, &[(0, 0)]).is_err());
    }

    #[test]
    fn flatten_roundtrip() {
        let mut idx = [0usize; 4];
        for f in 0..16 {
            unflatten(f, &mut idx);
            assert_eq!(flatten(&idx), f);
        }
    }
}
