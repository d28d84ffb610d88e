//! Orthant cone orders on discretized states.
//!
//! A [`ConeOrder`] fixes one sign per species; `x <= y` holds when every
//! sign-adjusted coordinate of `y - x` is nonnegative, across all grid nodes.
//! The strong relation `<<` asks for a fixed positive margin instead of exact
//! interior membership, which floating point cannot certify.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{CoreError, Result};

/// Shape of a flat state vector: `species * nodes` coordinates, stored
/// species-major (all nodal values of species 0, then species 1, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub species: usize,
    pub nodes: usize,
}

impl Layout {
    pub fn new(species: usize, nodes: usize) -> Self {
        Layout { species, nodes }
    }

    pub fn len(&self) -> usize {
        self.species * self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Species owning flat coordinate `i`.
    pub fn species_of(&self, i: usize) -> usize {
        i / self.nodes
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} species x {} nodes)", self.species, self.nodes)
    }
}

/// A point of the discretized state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVec {
    data: Vec<f64>,
    layout: Layout,
}

impl StateVec {
    /// Builds a state, checking that every entry is finite and that the
    /// layout matches the data length.
    pub fn new(data: Vec<f64>, layout: Layout) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(CoreError::InvalidParameter {
                name: "layout",
                detail: format!("layout {} expects {} entries, got {}", layout, layout.len(), data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NonFinite { context: "StateVec::new" });
        }
        Ok(StateVec { data, layout })
    }

    /// Internal constructor for integrator output, which may carry a
    /// non-finite final state when a run blows up.
    pub(crate) fn from_raw(data: Vec<f64>, layout: Layout) -> Self {
        debug_assert_eq!(data.len(), layout.len());
        StateVec { data, layout }
    }

    pub fn zeros(layout: Layout) -> Self {
        StateVec { data: vec![0.0; layout.len()], layout }
    }

    pub fn constant(value: f64, layout: Layout) -> Self {
        StateVec { data: vec![value; layout.len()], layout }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Nodal values of one species (contiguous in the species-major layout).
    pub fn species_slice(&self, s: usize) -> &[f64] {
        let m = self.layout.nodes;
        &self.data[s * m..(s + 1) * m]
    }

    pub fn get(&self, species: usize, node: usize) -> f64 {
        self.data[species * self.layout.nodes + node]
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_dist(&self, other: &StateVec) -> f64 {
        debug_assert_eq!(self.layout, other.layout);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self + t * dir`, layouts must agree.
    pub fn add_scaled(&self, t: f64, dir: &StateVec) -> Result<StateVec> {
        check_layout(self, dir)?;
        let data = self
            .data
            .iter()
            .zip(&dir.data)
            .map(|(a, b)| a + t * b)
            .collect();
        Ok(StateVec { data, layout: self.layout })
    }

    /// Max−min of one species' nodal values; zero for single-node layouts.
    pub fn spatial_variation(&self, species: usize) -> f64 {
        let s = self.species_slice(species);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }
}

pub(crate) fn check_layout(x: &StateVec, y: &StateVec) -> Result<()> {
    if x.layout != y.layout {
        return Err(CoreError::LayoutMismatch { left: x.layout, right: y.layout });
    }
    Ok(())
}

/// Orthant order specification: one sign per species plus the margin used by
/// the strong relation `<<`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeOrder {
    signs: Vec<f64>,
    eta: f64,
}

pub const DEFAULT_STRICT_MARGIN: f64 = 1e-9;

impl ConeOrder {
    pub fn new(signs: &[i8], eta: f64) -> Result<Self> {
        if signs.is_empty() {
            return Err(CoreError::EmptyInput { what: "cone signs" });
        }
        if !signs.iter().all(|&s| s == 1 || s == -1) {
            return Err(CoreError::InvalidParameter {
                name: "signs",
                detail: "every entry must be +1 or -1".to_string(),
            });
        }
        if !(eta > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "eta",
                detail: format!("strict margin must be > 0, got {eta}"),
            });
        }
        Ok(ConeOrder { signs: signs.iter().map(|&s| f64::from(s)).collect(), eta })
    }

    /// Standard positive orthant on `n` species with the default margin.
    pub fn positive(n: usize) -> Self {
        ConeOrder { signs: vec![1.0; n], eta: DEFAULT_STRICT_MARGIN }
    }

    pub fn species(&self) -> usize {
        self.signs.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn sign(&self, species: usize) -> f64 {
        self.signs[species]
    }

    fn check_species(&self, layout: Layout) -> Result<()> {
        if self.signs.len() != layout.species {
            return Err(CoreError::SpeciesMismatch { signs: self.signs.len(), species: layout.species });
        }
        Ok(())
    }

    /// Minimum over coordinates of the sign-adjusted difference `y - x`.
    /// Nonnegative iff `x <= y`.
    pub fn adjusted_min_diff(&self, x: &StateVec, y: &StateVec) -> Result<f64> {
        check_layout(x, y)?;
        self.check_species(x.layout())?;
        let m = x.layout().nodes;
        let mut min = f64::INFINITY;
        for (i, (a, b)) in x.as_slice().iter().zip(y.as_slice()).enumerate() {
            let d = self.signs[i / m] * (b - a);
            if d < min {
                min = d;
            }
        }
        Ok(min)
    }

    /// `x <= y` in the cone order.
    pub fn leq(&self, x: &StateVec, y: &StateVec) -> Result<bool> {
        Ok(self.adjusted_min_diff(x, y)? >= 0.0)
    }

    /// `x < y`: `x <= y` and the states are not bitwise equal.
    pub fn lt(&self, x: &StateVec, y: &StateVec) -> Result<bool> {
        Ok(self.leq(x, y)? && x.as_slice() != y.as_slice())
    }

    /// `x << y`: every sign-adjusted coordinate of `y - x` is at least `eta`.
    pub fn ll(&self, x: &StateVec, y: &StateVec) -> Result<bool> {
        Ok(self.adjusted_min_diff(x, y)? >= self.eta)
    }

    /// Coordinatewise infimum in the cone order (sign-adjusted min).
    pub fn pointwise_inf(&self, states: &[StateVec]) -> Result<StateVec> {
        self.pointwise_extremum(states, true)
    }

    /// Coordinatewise supremum in the cone order (sign-adjusted max).
    pub fn pointwise_sup(&self, states: &[StateVec]) -> Result<StateVec> {
        self.pointwise_extremum(states, false)
    }

    fn pointwise_extremum(&self, states: &[StateVec], inf: bool) -> Result<StateVec> {
        let first = states.first().ok_or(CoreError::EmptyInput { what: "pointwise extremum input" })?;
        self.check_species(first.layout())?;
        let m = first.layout().nodes;
        let mut out = first.as_slice().to_vec();
        for s in &states[1..] {
            check_layout(first, s)?;
            for (i, v) in s.as_slice().iter().enumerate() {
                let sign = self.signs[i / m];
                let cur = sign * out[i];
                let cand = sign * v;
                let keep = if inf { cand < cur } else { cand > cur };
                if keep {
                    out[i] = *v;
                }
            }
        }
        Ok(StateVec::from_raw(out, first.layout()))
    }
}

/// A closed segment `{x0 + t v : 0 <= t <= 1}` with cone-positive direction.
#[derive(Clone, Debug)]
pub struct Segment {
    base: StateVec,
    direction: StateVec,
}

impl Segment {
    /// Requires `v > 0` in the given order: nonnegative after sign adjustment
    /// with at least one strictly positive coordinate.
    pub fn new(base: StateVec, direction: StateVec, order: &ConeOrder) -> Result<Self> {
        check_layout(&base, &direction)?;
        let zero = StateVec::zeros(direction.layout());
        if !order.lt(&zero, &direction)? {
            return Err(CoreError::InvalidParameter {
                name: "direction",
                detail: "segment direction must be positive in the cone order".to_string(),
            });
        }
        Ok(Segment { base, direction })
    }

    pub fn base(&self) -> &StateVec {
        &self.base
    }

    pub fn direction(&self) -> &StateVec {
        &self.direction
    }

    pub fn at(&self, t: f64) -> StateVec {
        self.base
            .add_scaled(t, &self.direction)
            .expect("segment endpoints share a layout")
    }

    /// The `N+1` equispaced points `x0 + (k/N) v`, `k = 0..=N`, in order.
    pub fn points(&self, n: usize) -> Result<Vec<StateVec>> {
        if n < 1 {
            return Err(CoreError::InvalidParameter {
                name: "N",
                detail: "segment resolution must be >= 1".to_string(),
            });
        }
        Ok((0..=n).map(|k| self.at(k as f64 / n as f64)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> StateVec {
        StateVec::new(v.to_vec(), Layout::new(v.len(), 1)).unwrap()
    }

    #[test]
    fn leq_lt_ll_on_positive_orthant() {
        let k = ConeOrder::positive(2);
        let x = sv(&[0.0, 0.0]);
        let y = sv(&[1.0, 2.0]);
        assert!(k.leq(&x, &y).unwrap());
        assert!(k.lt(&x, &y).unwrap());
        assert!(k.ll(&x, &y).unwrap());
        assert!(!k.leq(&y, &x).unwrap());
    }

    #[test]
    fn incomparable_pair() {
        let k = ConeOrder::positive(2);
        let x = sv(&[1.0, 0.0]);
        let y = sv(&[0.0, 1.0]);
        assert!(!k.leq(&x, &y).unwrap());
        assert!(!k.leq(&y, &x).unwrap());
    }

    #[test]
    fn reoriented_orthant() {
        let k = ConeOrder::new(&[1, -1], 1e-9).unwrap();
        let x = sv(&[0.0, 0.0]);
        let y = sv(&[1.0, -2.0]);
        assert!(k.leq(&x, &y).unwrap());
        assert!(!k.leq(&y, &x).unwrap());
    }

    #[test]
    fn lt_requires_some_difference() {
        let k = ConeOrder::positive(2);
        let x = sv(&[0.5, -1.0]);
        assert!(k.leq(&x, &x).unwrap());
        assert!(!k.lt(&x, &x).unwrap());
    }

    #[test]
    fn layout_mismatch_is_contract_error() {
        let k = ConeOrder::positive(2);
        let x = sv(&[0.0, 0.0]);
        let y = StateVec::new(vec![0.0; 4], Layout::new(2, 2)).unwrap();
        assert!(matches!(k.leq(&x, &y), Err(CoreError::LayoutMismatch { .. })));
    }

    #[test]
    fn signs_apply_per_species_across_nodes() {
        // 2 species x 2 nodes, species-major: [s0n0, s0n1, s1n0, s1n1].
        let layout = Layout::new(2, 2);
        let k = ConeOrder::new(&[1, -1], 1e-9).unwrap();
        let x = StateVec::new(vec![0.0, 0.0, 0.0, 0.0], layout).unwrap();
        let y = StateVec::new(vec![1.0, 2.0, -1.0, -3.0], layout).unwrap();
        assert!(k.leq(&x, &y).unwrap());
    }

    #[test]
    fn segment_points_examples() {
        let k = ConeOrder::positive(2);
        let seg = Segment::new(sv(&[0.0, 0.0]), sv(&[1.0, 1.0]), &k).unwrap();
        let pts = seg.points(2).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[1].as_slice(), &[0.5, 0.5]);
        assert_eq!(pts[2].as_slice(), &[1.0, 1.0]);

        let seg = Segment::new(sv(&[-3.0, -3.0]), sv(&[6.0, 6.0]), &k).unwrap();
        let pts = seg.points(3).unwrap();
        assert_eq!(pts[1].as_slice(), &[-1.0, -1.0]);
        assert_eq!(pts[2].as_slice(), &[1.0, 1.0]);
        assert_eq!(pts[3].as_slice(), &[3.0, 3.0]);

        let single = seg.points(1).unwrap();
        assert_eq!(single.len(), 2);
        assert_eq!(single[0].as_slice(), seg.base().as_slice());
    }

    #[test]
    fn segment_rejects_nonpositive_direction() {
        let k = ConeOrder::positive(2);
        assert!(Segment::new(sv(&[0.0, 0.0]), sv(&[0.0, 0.0]), &k).is_err());
        assert!(Segment::new(sv(&[0.0, 0.0]), sv(&[1.0, -0.1]), &k).is_err());
        // One strictly positive entry with the rest zero is allowed.
        assert!(Segment::new(sv(&[0.0, 0.0]), sv(&[1.0, 0.0]), &k).is_ok());
    }

    #[test]
    fn pointwise_inf_sup_examples() {
        let k = ConeOrder::positive(2);
        let inf = k.pointwise_inf(&[sv(&[1.0, 0.0]), sv(&[0.0, 1.0])]).unwrap();
        assert_eq!(inf.as_slice(), &[0.0, 0.0]);
        let sup = k.pointwise_sup(&[sv(&[1.0, 0.0]), sv(&[0.0, 1.0])]).unwrap();
        assert_eq!(sup.as_slice(), &[1.0, 1.0]);

        let e = sv(&[0.3, -0.7]);
        assert_eq!(k.pointwise_inf(std::slice::from_ref(&e)).unwrap().as_slice(), e.as_slice());
        assert_eq!(k.pointwise_sup(std::slice::from_ref(&e)).unwrap().as_slice(), e.as_slice());

        let inf3 = k
            .pointwise_inf(&[sv(&[1.0, 2.0]), sv(&[3.0, 0.0]), sv(&[2.0, 2.0])])
            .unwrap();
        assert_eq!(inf3.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn pointwise_inf_respects_reoriented_signs() {
        let k = ConeOrder::new(&[-1], 1e-9).unwrap();
        let states = [sv(&[1.0]), sv(&[3.0])];
        // With a negative sign the order is reversed, so the infimum is the
        // larger raw value.
        assert_eq!(k.pointwise_inf(&states).unwrap().as_slice(), &[3.0]);
        assert_eq!(k.pointwise_sup(&states).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn empty_inf_is_contract_error() {
        let k = ConeOrder::positive(1);
        assert!(matches!(k.pointwise_inf(&[]), Err(CoreError::EmptyInput { .. })));
    }

    #[test]
    fn invalid_cone_parameters() {
        assert!(ConeOrder::new(&[], 1e-9).is_err());
        assert!(ConeOrder::new(&[2], 1e-9).is_err());
        assert!(ConeOrder::new(&[1], 0.0).is_err());
    }

    #[test]
    fn state_vec_rejects_non_finite() {
        assert!(StateVec::new(vec![f64::NAN], Layout::new(1, 1)).is_err());
        assert!(StateVec::new(vec![1.0, 2.0], Layout::new(1, 1)).is_err());
    }
}
