//! Problem representation, objective and gradient evaluation, and geometric
//! predicates.
//!
//! An [`Instance`] is a set of anchor points in R^n with positive weights.
//! The objective is `phi(x) = sum_i w_i * ||x - a_i||`, which is convex, and
//! strictly convex exactly when the anchors are not collinear. All functions
//! here are pure; nothing holds shared mutable state.

use crate::error::{Error, Result};

/// Relative vertex-snap tolerance: `x` counts as sitting on anchor `a` when
/// `||x - a|| <= VERTEX_SNAP_TOL * (1 + ||a||)`. The objective is not
/// differentiable at anchors, so a relative band is needed to route such
/// points to the subdifferential tests.
pub const VERTEX_SNAP_TOL: f64 = 1e-12;

/// A coordinate vector in R^n, n >= 1, with all coordinates finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, rejecting empty coordinate lists and non-finite
    /// entries (NaN or infinity).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "a point needs at least one coordinate".into(),
            ));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coordinate {bad}"
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Euclidean norm of the coordinate vector.
    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &Point) -> f64 {
        distance(&self.coords, &other.coords)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A weighted anchor set: the problem definition.
///
/// Anchors all share one dimension and every weight is positive. Duplicate
/// anchors (within the vertex-snap band) are merged at construction, summing
/// their weights, so downstream formulas never see repeated points.
#[derive(Debug, Clone)]
pub struct Instance {
    anchors: Vec<Point>,
    weights: Vec<f64>,
}

impl Instance {
    /// Unweighted instance: every anchor gets weight 1.
    pub fn new(anchors: Vec<Point>) -> Result<Self> {
        let weights = vec![1.0; anchors.len()];
        Self::with_weights(anchors, weights)
    }

    /// Weighted instance. Requires at least one anchor, matching lengths,
    /// a common dimension, and strictly positive finite weights.
    pub fn with_weights(anchors: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidArgument("need at least one anchor".into()));
        }
        if anchors.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} anchors but {} weights",
                anchors.len(),
                weights.len()
            )));
        }
        let dim = anchors[0].dim();
        for a in &anchors {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.dim(),
                });
            }
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be positive and finite, got {bad}"
            )));
        }

        // Merge duplicate anchors (weights summed) so the iteration map and
        // the resultant criterion stay well-defined.
        let mut merged: Vec<Point> = Vec::with_capacity(anchors.len());
        let mut merged_w: Vec<f64> = Vec::with_capacity(weights.len());
        for (a, w) in anchors.into_iter().zip(weights) {
            match merged
                .iter()
                .position(|m| m.distance(&a) <= VERTEX_SNAP_TOL * (1.0 + m.norm()))
            {
                Some(i) => merged_w[i] += w,
                None => {
                    merged.push(a);
                    merged_w.push(w);
                }
            }
        }
        Ok(Self {
            anchors: merged,
            weights: merged_w,
        })
    }

    /// Number of (merged) anchors.
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one anchor
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].dim()
    }

    pub fn anchors(&self) -> &[Point] {
        &self.anchors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn anchor(&self, k: usize) -> &Point {
        &self.anchors[k]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when all weights agree to within a relative 1e-12 band.
    pub fn is_unweighted(&self) -> bool {
        let w0 = self.weights[0];
        self.weights
            .iter()
            .all(|w| (w - w0).abs() <= 1e-12 * w0.abs())
    }

    /// Largest pairwise anchor distance, approximated through the
    /// axis-extreme anchors (exact enough for scaling decisions).
    pub fn spread(&self) -> f64 {
        let (i, j) = self.farthest_axis_extremes();
        self.anchors[i].distance(&self.anchors[j])
    }

    pub(crate) fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Picks the farthest pair among the axis-extreme anchors (the anchors
    /// attaining the min/max coordinate along each axis). This approximates
    /// the true farthest pair well enough for a scale reference without the
    /// full O(m^2) sweep.
    fn farthest_axis_extremes(&self) -> (usize, usize) {
        let n = self.dim();
        let mut candidates: Vec<usize> = Vec::with_capacity(2 * n);
        for axis in 0..n {
            let mut lo = 0;
            let mut hi = 0;
            for (i, a) in self.anchors.iter().enumerate() {
                if a.coords()[axis] < self.anchors[lo].coords()[axis] {
                    lo = i;
                }
                if a.coords()[axis] > self.anchors[hi].coords()[axis] {
                    hi = i;
                }
            }
            candidates.push(lo);
            candidates.push(hi);
        }
        candidates.sort_unstable();
        candidates.dedup();
        let mut best = (candidates[0], candidates[0]);
        let mut best_d = -1.0;
        for (s, &i) in candidates.iter().enumerate() {
            for &j in &candidates[s + 1..] {
                let d = self.anchors[i].distance(&self.anchors[j]);
                if d > best_d {
                    best_d = d;
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// The objective value `phi(x) = sum_i w_i * ||x - a_i||`; nonnegative, and
/// zero exactly when every anchor coincides with the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ObjectiveValue(f64);

impl ObjectiveValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub(crate) fn from_raw(v: f64) -> Self {
        ObjectiveValue(v)
    }
}

impl From<ObjectiveValue> for f64 {
    fn from(v: ObjectiveValue) -> f64 {
        v.0
    }
}

/// Evaluates the weighted sum of distances at `x`.
///
/// Terms are accumulated in anchor index order in double precision, so the
/// result is reproducible across runs.
pub fn objective(inst: &Instance, x: &Point) -> Result<ObjectiveValue> {
    inst.check_dim(x)?;
    Ok(ObjectiveValue(objective_raw(inst, x.coords())))
}

pub(crate) fn objective_raw(inst: &Instance, x: &[f64]) -> f64 {
    inst.anchors
        .iter()
        .zip(&inst.weights)
        .map(|(a, w)| w * distance(x, a.coords()))
        .sum()
}

/// Index of the first anchor whose snap band contains `x`, if any.
pub fn snapped_anchor(inst: &Instance, x: &Point) -> Option<usize> {
    inst.anchors
        .iter()
        .position(|a| a.distance(x) <= VERTEX_SNAP_TOL * (1.0 + a.norm()))
}

/// The gradient `sum_i w_i (x - a_i) / ||x - a_i||`, defined away from the
/// anchors. Returns [`Error::AtVertex`] when `x` snaps to an anchor; the
/// subdifferential tests in [`crate::subdiff`] handle that case.
pub fn gradient(inst: &Instance, x: &Point) -> Result<Point> {
    inst.check_dim(x)?;
    if let Some(index) = snapped_anchor(inst, x) {
        return Err(Error::AtVertex { index });
    }
    let mut g = vec![0.0; inst.dim()];
    for (a, w) in inst.anchors.iter().zip(&inst.weights) {
        let d = x.distance(a);
        for (gj, (xj, aj)) in g.iter_mut().zip(x.coords().iter().zip(a.coords())) {
            *gj += w * (xj - aj) / d;
        }
    }
    Point::new(g)
}

/// Tests whether all anchors lie within `tol * spread` of a single line.
///
/// The direction is fitted through the farthest pair of axis-extreme anchors
/// and the maximum perpendicular residual is compared against the relative
/// tolerance, which makes the test scale-invariant. Instances with fewer than
/// three anchors are collinear by definition.
pub fn collinear(inst: &Instance, tol: f64) -> bool {
    let tol = tol.max(0.0);
    if inst.len() <= 2 {
        return true;
    }
    let (i, j) = inst.farthest_axis_extremes();
    let a = inst.anchors[i].coords();
    let b = inst.anchors[j].coords();
    let spread = distance(a, b);
    if spread == 0.0 {
        return true; // all anchors coincide (cannot happen after merging)
    }
    let dir: Vec<f64> = a.iter().zip(b).map(|(p, q)| (q - p) / spread).collect();
    let mut max_residual: f64 = 0.0;
    for p in &inst.anchors {
        let rel: Vec<f64> = p.coords().iter().zip(a).map(|(c, o)| c - o).collect();
        let t = dot(&rel, &dir);
        let residual = rel
            .iter()
            .zip(&dir)
            .map(|(r, u)| (r - t * u) * (r - t * u))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(residual);
    }
    max_residual <= tol * spread
}

/// Forms the convex combination `sum_i coeffs_i * a_i` of the anchors.
///
/// Coefficients must be nonnegative, match the (merged) anchor count, and
/// sum to 1 within 1e-12.
pub fn in_hull_combination(inst: &Instance, coeffs: &[f64]) -> Result<Point> {
    if coeffs.len() != inst.len() {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} anchors",
            coeffs.len(),
            inst.len()
        )));
    }
    if let Some(bad) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coefficients must be nonnegative, got {bad}"
        )));
    }
    let total: f64 = coeffs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "coefficients sum to {total}, expected 1"
        )));
    }
    let mut out = vec![0.0; inst.dim()];
    for (a, c) in inst.anchors.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(a.coords()) {
            *o += c * v;
        }
    }
    Point::new(out)
}
