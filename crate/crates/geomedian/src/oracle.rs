//! Independent desk-scale verification: a multiresolution grid minimizer and
//! a finite-difference gradient checker.
//!
//! Nothing here reuses the solver paths it is meant to check; even the
//! objective is re-evaluated locally. The minimizer brackets the optimum
//! because it lies in the convex hull of the anchors, hence inside their
//! bounding box, and convexity keeps the refinement from being trapped more
//! than a coarse cell away from it.

use crate::core::{Instance, Point};
use crate::error::{Error, Result};

/// Result of the multiresolution grid search.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub best_point: Point,
    pub best_value: f64,
    /// Final cell side length (largest across axes); together with the
    /// objective's Lipschitz constant (the total weight) this bounds the gap
    /// to the true optimum by `total_weight * resolution * sqrt(n)`.
    pub resolution: f64,
    pub cells_evaluated: usize,
}

impl GridResult {
    /// Upper bound on `best_value - true optimum` from the coverage of the
    /// final grid.
    pub fn coverage_bound(&self, inst: &Instance) -> f64 {
        inst.total_weight() * self.resolution * (inst.dim() as f64).sqrt()
    }
}

/// Local objective evaluation, deliberately separate from the solver path.
fn eval(inst: &Instance, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (a, w) in inst.anchors().iter().zip(inst.weights()) {
        let mut sq = 0.0;
        for (xj, aj) in x.iter().zip(a.coords()) {
            sq += (xj - aj) * (xj - aj);
        }
        total += w * sq.sqrt();
    }
    total
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

struct Box {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Box {
    fn cell_sides(&self, divisions: usize) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) / divisions as f64)
            .collect()
    }
}

/// Brute-force multiresolution minimization of the objective over the
/// anchors' bounding box.
///
/// Each level lays a uniform grid of `initial_divisions` cells per axis over
/// the current window, evaluates the objective at every node in
/// deterministic order (ties broken toward the lexicographically smaller
/// point, so the incumbent does not depend on evaluation order), then
/// shrinks the window to the three-cell neighborhood of the incumbent.
/// When the incumbent lands on the window's edge the window first slides
/// (recentered at the same scale, clamped to the original box) instead of
/// shrinking, so a flat valley cannot carry the optimum out of the refined
/// region. Supports n <= 3; the cost is exponential in the dimension.
pub fn grid_minimize(
    inst: &Instance,
    levels: usize,
    initial_divisions: usize,
) -> Result<GridResult> {
    let n = inst.dim();
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "grid oracle supports up to 3 dimensions, got {n}"
        )));
    }
    if levels == 0 || initial_divisions == 0 {
        return Err(Error::InvalidArgument(
            "levels and initial_divisions must be at least 1".into(),
        ));
    }

    // bounding box of the anchors; the optimum cannot leave their hull
    let mut outer = Box {
        lo: inst.anchor(0).coords().to_vec(),
        hi: inst.anchor(0).coords().to_vec(),
    };
    for a in inst.anchors() {
        for (j, c) in a.coords().iter().enumerate() {
            outer.lo[j] = outer.lo[j].min(*c);
            outer.hi[j] = outer.hi[j].max(*c);
        }
    }

    let mut window = Box {
        lo: outer.lo.clone(),
        hi: outer.hi.clone(),
    };
    let mut best_point: Vec<f64> = Vec::new();
    let mut best_value = f64::INFINITY;
    let mut cells_evaluated = 0usize;
    let mut resolution = 0.0;

    for _ in 0..levels {
        let sides = window.cell_sides(initial_divisions);
        resolution = sides.iter().cloned().fold(0.0, f64::max);

        // scan, sliding sideways while the incumbent keeps reaching an edge
        // of the window that is not an edge of the original box
        for _slide in 0..16 {
            sweep_window(
                inst,
                &window,
                &sides,
                initial_divisions,
                &mut best_point,
                &mut best_value,
                &mut cells_evaluated,
            );
            let mut pinned = false;
            for j in 0..n {
                if sides[j] == 0.0 {
                    continue;
                }
                let near_lo = best_point[j] - window.lo[j] <= 0.5 * sides[j];
                let near_hi = window.hi[j] - best_point[j] <= 0.5 * sides[j];
                if (near_lo && window.lo[j] > outer.lo[j])
                    || (near_hi && window.hi[j] < outer.hi[j])
                {
                    pinned = true;
                }
            }
            if !pinned {
                break;
            }
            let extent: Vec<f64> = window
                .lo
                .iter()
                .zip(&window.hi)
                .map(|(l, h)| h - l)
                .collect();
            for j in 0..n {
                window.lo[j] = (best_point[j] - 0.5 * extent[j]).max(outer.lo[j]);
                window.hi[j] = (window.lo[j] + extent[j]).min(outer.hi[j]);
            }
        }

        // refine: three-cell neighborhood of the incumbent
        for j in 0..n {
            let half = 1.5 * sides[j];
            window.lo[j] = (best_point[j] - half).max(outer.lo[j]);
            window.hi[j] = (best_point[j] + half).min(outer.hi[j]);
        }
    }

    Ok(GridResult {
        best_point: Point::new(best_point)?,
        best_value,
        resolution,
        cells_evaluated,
    })
}

/// Evaluates every node of the window grid, folding improvements (by value,
/// then lexicographic point) into the incumbent.
fn sweep_window(
    inst: &Instance,
    window: &Box,
    sides: &[f64],
    divisions: usize,
    best_point: &mut Vec<f64>,
    best_value: &mut f64,
    cells_evaluated: &mut usize,
) {
    let n = window.lo.len();
    // per-axis node coordinates; a collapsed axis contributes one node
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            if sides[j] == 0.0 {
                vec![window.lo[j]]
            } else {
                (0..=divisions)
                    .map(|i| window.lo[j] + sides[j] * i as f64)
                    .collect()
            }
        })
        .collect();

    let mut index = vec![0usize; n];
    loop {
        let x: Vec<f64> = index.iter().enumerate().map(|(j, &i)| axes[j][i]).collect();
        let value = eval(inst, &x);
        *cells_evaluated += 1;
        if value < *best_value || (value == *best_value && lexicographic_less(&x, best_point)) {
            *best_value = value;
            *best_point = x;
        }
        // odometer increment over the grid indices
        let mut axis = 0;
        loop {
            if axis == n {
                break;
            }
            index[axis] += 1;
            if index[axis] < axes[axis].len() {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
        if axis == n {
            break;
        }
    }
}

/// Central-difference gradient `(phi(x + h e_j) - phi(x - h e_j)) / (2h)`.
///
/// Requires `x` to keep a distance of at least `10 h` from every anchor so
/// the probes stay in the smooth region.
pub fn fd_gradient(inst: &Instance, x: &Point, h: f64) -> Result<Point> {
    inst.check_dim(x)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step h must be positive and finite, got {h}"
        )));
    }
    for (index, a) in inst.anchors().iter().enumerate() {
        if x.distance(a) <= 10.0 * h {
            return Err(Error::AtVertex { index });
        }
    }
    let mut g = vec![0.0; inst.dim()];
    let mut probe = x.coords().to_vec();
    for (j, gj) in g.iter_mut().enumerate() {
        let orig = probe[j];
        probe[j] = orig + h;
        let plus = eval(inst, &probe);
        probe[j] = orig - h;
        let minus = eval(inst, &probe);
        probe[j] = orig;
        *gj = (plus - minus) / (2.0 * h);
    }
    Point::new(g)
}
