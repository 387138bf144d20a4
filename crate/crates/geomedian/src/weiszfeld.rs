//! The distance-weighted-mean fixed-point iteration and its solve loop.
//!
//! The algorithm map is
//!
//! ```text
//! F(x) = (sum_i w_i a_i / ||x - a_i||) / (sum_i w_i / ||x - a_i||),    F(a_k) = a_k,
//! ```
//!
//! whose fixed points away from the anchors are exactly the stationary points
//! of the objective. Each application strictly decreases the objective unless
//! already at a fixed point, and every image is a convex combination of the
//! anchors. The solve loop adds what the bare map lacks: stopping rules tied
//! to an optimality certificate, an exact reduction for collinear instances
//! (where strict convexity fails and the map may stall), and recovery when an
//! iterate lands on a non-optimal anchor, which freezes the bare map.

use crate::core::{
    self, distance, norm, objective_raw, snapped_anchor, Instance, ObjectiveValue, Point,
};
use crate::error::{Error, Result};
use crate::subdiff::{self, Certificate, CertificateKind};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Instances whose anchors fit a line to within this relative residual are
/// routed to the exact 1-D weighted-median reduction instead of the
/// fixed-point iteration.
pub const COLLINEAR_GATE_TOL: f64 = 1e-12;

/// What to do when an iterate lands on a non-optimal anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapePolicy {
    /// Report the vertex certificate and stop without converging.
    CertifyAndStop,
    /// Step off the anchor along the resultant direction (the steepest
    /// descent direction there) and keep iterating.
    Nudge,
}

/// Solve-loop configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative step-size stop: the step must shrink to
    /// `step_tol * (1 + ||x||)` before the solver may declare convergence.
    pub step_tol: f64,
    /// Certificate stop: the optimality residual at the returned point must
    /// not exceed this for status `Converged`.
    pub cert_tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
    /// Recovery policy for vertex capture.
    pub escape_policy: EscapePolicy,
    /// Nudge length as a fraction of the anchor spread; halved on each
    /// repeated capture.
    pub nudge_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_tol: 1e-10,
            cert_tol: 1e-8,
            max_iter: 100_000,
            escape_policy: EscapePolicy::Nudge,
            nudge_scale: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_tol > 0.0) || !(self.cert_tol > 0.0) || !(self.nudge_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "step_tol, cert_tol and nudge_scale must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One record of the iteration history.
#[derive(Debug, Clone)]
pub struct TraceStep {
    /// Iteration index; step 0 is the starting point.
    pub k: usize,
    /// The iterate after this step.
    pub x: Point,
    /// Objective value at `x`.
    pub phi: ObjectiveValue,
    /// Distance moved from the previous iterate (0 for step 0).
    pub step_norm: f64,
    /// `Some(j)` when this step is a vertex event at anchor `j`: the iterate
    /// coincides with the anchor, or was produced by the escape nudge away
    /// from it. Such steps are restarts, not applications of the map.
    pub vertex_hit: Option<usize>,
}

/// Full iteration history of one solve.
#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub steps: Vec<TraceStep>,
}

impl IterationTrace {
    /// Checks strict objective decrease across consecutive map applications:
    /// every non-event step moving farther than `step_threshold` must lower
    /// the objective. Vertex events are restarts and are skipped.
    pub fn monotone_descent_ok(&self, step_threshold: f64) -> bool {
        self.steps.windows(2).all(|w| {
            w[1].vertex_hit.is_some()
                || w[1].step_norm <= step_threshold
                || w[1].phi.value() < w[0].phi.value()
        })
    }

    pub fn last(&self) -> &TraceStep {
        self.steps.last().expect("trace always holds the start")
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The certificate residual at the returned point is within `cert_tol`.
    Converged,
    /// Stopped without a certificate: iteration budget exhausted, or a
    /// capture under [`EscapePolicy::CertifyAndStop`].
    MaxIter,
    /// Collinear anchors: solved exactly by the weighted-median reduction;
    /// the minimizer may be non-unique.
    CollinearDegenerate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max-iter",
            Status::CollinearDegenerate => "collinear-degenerate",
        }
    }
}

/// Result of a solve: the point, its objective value, the optimality
/// certificate at that point, and loop diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub point: Point,
    pub value: ObjectiveValue,
    pub certificate: Certificate,
    pub iterations: usize,
    pub status: Status,
    /// Human-readable diagnostics (non-uniqueness warnings and the like).
    pub notes: Vec<String>,
}

/// One pass over the anchors at a non-anchor point: everything the iteration
/// needs comes out of the same distance computations.
struct StepEval {
    fx: Vec<f64>,
    grad_norm: f64,
    min_dist: f64,
    min_index: usize,
}

fn step_eval(inst: &Instance, x: &[f64]) -> StepEval {
    let n = inst.dim();
    let mut num = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut inv_sum = 0.0;
    let mut min_dist = f64::INFINITY;
    let mut min_index = 0;
    for (i, (a, w)) in inst.anchors().iter().zip(inst.weights()).enumerate() {
        let d = distance(x, a.coords());
        let wd = w / d;
        inv_sum += wd;
        for (j, aj) in a.coords().iter().enumerate() {
            num[j] += wd * aj;
            grad[j] += wd * (x[j] - aj);
        }
        if d < min_dist {
            min_dist = d;
            min_index = i;
        }
    }
    for v in &mut num {
        *v /= inv_sum;
    }
    StepEval {
        fx: num,
        grad_norm: norm(&grad),
        min_dist,
        min_index,
    }
}

/// One application of the algorithm map.
///
/// Points inside an anchor's snap band map to that anchor exactly; everywhere
/// else the result is the distance-weighted mean of the anchors, a convex
/// combination of them.
pub fn f_step(inst: &Instance, x: &Point) -> Result<Point> {
    inst.check_dim(x)?;
    if let Some(j) = snapped_anchor(inst, x) {
        return Ok(inst.anchor(j).clone());
    }
    Point::new(step_eval(inst, x.coords()).fx)
}

/// The convex-combination coefficients behind `F(x)`:
/// `theta_i = (w_i / ||x - a_i||) / sum_j (w_j / ||x - a_j||)`.
///
/// Errors with [`Error::AtVertex`] when `x` snaps to an anchor.
pub fn hull_coefficients(inst: &Instance, x: &Point) -> Result<Vec<f64>> {
    inst.check_dim(x)?;
    if let Some(index) = snapped_anchor(inst, x) {
        return Err(Error::AtVertex { index });
    }
    let inv: Vec<f64> = inst
        .anchors()
        .iter()
        .zip(inst.weights())
        .map(|(a, w)| w / x.distance(a))
        .collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|v| v / total).collect())
}

/// The quadratic surrogate minimized by the map at `x`:
/// `g(z) = sum_i w_i ||z - a_i||^2 / ||x - a_i||`. Satisfies `g(x) = phi(x)`
/// and is minimized over `z` exactly at `F(x)`.
pub fn g_surrogate(inst: &Instance, x: &Point, z: &Point) -> Result<f64> {
    inst.check_dim(x)?;
    inst.check_dim(z)?;
    if let Some(index) = snapped_anchor(inst, x) {
        return Err(Error::AtVertex { index });
    }
    Ok(inst
        .anchors()
        .iter()
        .zip(inst.weights())
        .map(|(a, w)| {
            let dz = z.distance(a);
            w * dz * dz / x.distance(a)
        })
        .sum())
}

/// Outcome of a single descent probe at `x`.
#[derive(Debug, Clone)]
pub struct DescentReport {
    pub fx: Point,
    /// Whether the objective strictly decreased from `x` to `F(x)`.
    pub decreased: bool,
    /// `phi(x) - phi(F(x))`.
    pub delta: f64,
    pub step_norm: f64,
}

/// Applies the map once and compares objective values. `decreased` is
/// meaningful whenever `step_norm` is above the snap scale; at a fixed point
/// both `delta` and `step_norm` are (numerically) zero.
pub fn descent_check(inst: &Instance, x: &Point) -> Result<DescentReport> {
    let fx = f_step(inst, x)?;
    let phi_x = objective_raw(inst, x.coords());
    let phi_fx = objective_raw(inst, fx.coords());
    let step_norm = fx.distance(x);
    Ok(DescentReport {
        decreased: phi_fx < phi_x,
        delta: phi_x - phi_fx,
        step_norm,
        fx,
    })
}

/// Measured expansion of the map around a non-optimal anchor.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    /// Minimum of `||F(x) - a_k|| / ||x - a_k||` over the sphere samples.
    pub min_ratio: f64,
    /// `||R_k||`, the limit of the ratio as the radius shrinks (for unit
    /// anchor weight).
    pub resultant_norm: f64,
}

const EXPANSION_SAMPLE_SEED: u64 = 0x6d65_6469_616e_5f65;

/// Samples the ratio `||F(x) - a_k|| / ||x - a_k||` on the sphere of the
/// given radius around anchor `k`.
///
/// Requires a non-optimal anchor (the ratio limit exceeds 1 only there) and a
/// radius small enough that no other anchor sits inside the sampling ball.
/// Sampling is deterministic (fixed-seed generator).
pub fn expansion_ratio(
    inst: &Instance,
    k: usize,
    radius: f64,
    samples: usize,
) -> Result<ExpansionReport> {
    let report = subdiff::resultant(inst, k)?;
    if report.optimal {
        return Err(Error::InvalidArgument(format!(
            "anchor {k} is optimal (resultant norm {:.6} <= weight); the expansion \
             ratio is defined at non-optimal anchors only",
            report.resultant_norm
        )));
    }
    let ak = inst.anchor(k);
    if !(radius > core::VERTEX_SNAP_TOL * (1.0 + ak.norm())) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} must exceed the vertex-snap band"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    for (i, a) in inst.anchors().iter().enumerate() {
        if i != k && a.distance(ak) <= radius {
            return Err(Error::InvalidArgument(format!(
                "anchor {i} lies inside the sampling ball of radius {radius}"
            )));
        }
    }

    let n = inst.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(EXPANSION_SAMPLE_SEED);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let mut dir: Vec<f64>;
        loop {
            dir = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = norm(&dir);
            if len > 1e-12 {
                for d in &mut dir {
                    *d /= len;
                }
                break;
            }
        }
        let x: Vec<f64> = ak
            .coords()
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + radius * d)
            .collect();
        let fx = step_eval(inst, &x).fx;
        let ratio = distance(&fx, ak.coords()) / distance(&x, ak.coords());
        min_ratio = min_ratio.min(ratio);
    }
    Ok(ExpansionReport {
        min_ratio,
        resultant_norm: report.resultant_norm,
    })
}

fn weighted_centroid(inst: &Instance) -> Vec<f64> {
    let mut c = vec![0.0; inst.dim()];
    let total = inst.total_weight();
    for (a, w) in inst.anchors().iter().zip(inst.weights()) {
        for (cj, aj) in c.iter_mut().zip(a.coords()) {
            *cj += w * aj;
        }
    }
    for cj in &mut c {
        *cj /= total;
    }
    c
}

fn vertex_certificate(inst: &Instance, k: usize) -> Result<(Certificate, f64)> {
    let report = subdiff::resultant(inst, k)?;
    let residual = (report.resultant_norm - inst.weights()[k]).max(0.0);
    Ok((
        Certificate {
            kind: CertificateKind::Vertex { index: k },
            residual,
            location: inst.anchor(k).clone(),
        },
        report.resultant_norm,
    ))
}

struct TraceBuilder {
    steps: Vec<TraceStep>,
}

impl TraceBuilder {
    fn start(inst: &Instance, x: &Point) -> Self {
        let steps = vec![TraceStep {
            k: 0,
            x: x.clone(),
            phi: ObjectiveValue::from_raw(objective_raw(inst, x.coords())),
            step_norm: 0.0,
            vertex_hit: snapped_anchor(inst, x),
        }];
        Self { steps }
    }

    fn push(&mut self, inst: &Instance, k: usize, x: Point, vertex_hit: Option<usize>) {
        let step_norm = x.distance(&self.steps.last().expect("non-empty").x);
        self.steps.push(TraceStep {
            k,
            phi: ObjectiveValue::from_raw(objective_raw(inst, x.coords())),
            x,
            step_norm,
            vertex_hit,
        });
    }

    fn finish(self) -> IterationTrace {
        IterationTrace { steps: self.steps }
    }
}

fn finish(
    inst: &Instance,
    point: Point,
    certificate: Certificate,
    iterations: usize,
    status: Status,
    notes: Vec<String>,
    trace: TraceBuilder,
) -> (Solution, IterationTrace) {
    let value = ObjectiveValue::from_raw(objective_raw(inst, point.coords()));
    (
        Solution {
            point,
            value,
            certificate,
            iterations,
            status,
            notes,
        },
        trace.finish(),
    )
}

/// Exact solution of a collinear instance: project the anchors on the fitted
/// line, take the weighted 1-D median, return that anchor verbatim.
fn solve_collinear(inst: &Instance) -> usize {
    let (i, j) = {
        // direction through the farthest anchor pair
        let mut best = (0, 0);
        let mut best_d = -1.0;
        for (p, a) in inst.anchors().iter().enumerate() {
            for (q, b) in inst.anchors().iter().enumerate().skip(p + 1) {
                let d = a.distance(b);
                if d > best_d {
                    best_d = d;
                    best = (p, q);
                }
            }
        }
        best
    };
    let origin = inst.anchor(i).coords();
    let far = inst.anchor(j).coords();
    let span = distance(origin, far);
    let dir: Vec<f64> = origin
        .iter()
        .zip(far)
        .map(|(o, f)| (f - o) / span)
        .collect();
    let mut order: Vec<(f64, usize)> = inst
        .anchors()
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let rel: Vec<f64> = a.coords().iter().zip(origin).map(|(c, o)| c - o).collect();
            (core::dot(&rel, &dir), idx)
        })
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite projections"));
    let half = inst.total_weight() / 2.0;
    let mut cum = 0.0;
    for (_, idx) in &order {
        cum += inst.weights()[*idx];
        if cum >= half - 1e-12 * inst.total_weight() {
            return *idx;
        }
    }
    order.last().expect("at least one anchor").1
}

/// Minimizes the weighted sum of distances.
///
/// Dispatch:
/// * one anchor — returned immediately;
/// * two anchors — the heavier anchor, or the midpoint under equal weights
///   (the whole segment is then optimal and a canonical point is returned);
/// * collinear anchors — exact weighted-median reduction, status
///   [`Status::CollinearDegenerate`];
/// * otherwise — iterate `x <- F(x)` from `x0` (default: the weighted
///   centroid) until the certificate residual is within `cfg.cert_tol` *and*
///   the relative step is within `cfg.step_tol`, or `cfg.max_iter` is spent.
///
/// An iterate approaching an anchor triggers the resultant test there: an
/// optimal anchor ends the solve with an exact vertex certificate, a
/// non-optimal one invokes the escape policy.
pub fn solve(
    inst: &Instance,
    x0: Option<&Point>,
    cfg: &SolverConfig,
) -> Result<(Solution, IterationTrace)> {
    cfg.validate()?;
    if let Some(x) = x0 {
        inst.check_dim(x)?;
    }

    // Single anchor: it is the optimum, with an empty resultant.
    if inst.len() == 1 {
        let point = inst.anchor(0).clone();
        let (cert, _) = vertex_certificate(inst, 0)?;
        let trace = TraceBuilder::start(inst, &point);
        return Ok(finish(
            inst,
            point,
            cert,
            0,
            Status::Converged,
            vec![],
            trace,
        ));
    }

    // Two anchors: every point of the segment is optimal under equal
    // weights; otherwise the heavier anchor is the unique optimum.
    if inst.len() == 2 {
        let (w0, w1) = (inst.weights()[0], inst.weights()[1]);
        if (w0 - w1).abs() <= 1e-12 * w0.max(w1) {
            let mid = Point::new(
                inst.anchor(0)
                    .coords()
                    .iter()
                    .zip(inst.anchor(1).coords())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )?;
            let cert = subdiff::certify(inst, &mid, cfg.cert_tol)?;
            let trace = TraceBuilder::start(inst, &mid);
            return Ok(finish(
                inst,
                mid,
                cert,
                0,
                Status::CollinearDegenerate,
                vec!["two equally weighted anchors: every segment point is optimal; \
                      returning the midpoint"
                    .into()],
                trace,
            ));
        }
        let k = if w0 > w1 { 0 } else { 1 };
        let point = inst.anchor(k).clone();
        let (cert, _) = vertex_certificate(inst, k)?;
        let trace = TraceBuilder::start(inst, &point);
        return Ok(finish(
            inst,
            point,
            cert,
            0,
            Status::Converged,
            vec![],
            trace,
        ));
    }

    // Collinear anchors: strict convexity fails and the fixed-point map can
    // stall, but the 1-D reduction is exact.
    if core::collinear(inst, COLLINEAR_GATE_TOL) {
        let k = solve_collinear(inst);
        let point = inst.anchor(k).clone();
        let (cert, _) = vertex_certificate(inst, k)?;
        let trace = TraceBuilder::start(inst, &point);
        return Ok(finish(
            inst,
            point,
            cert,
            0,
            Status::CollinearDegenerate,
            vec!["collinear anchors: weighted-median reduction applied".into()],
            trace,
        ));
    }

    let start = match x0 {
        Some(p) => p.clone(),
        None => Point::new(weighted_centroid(inst))?,
    };
    let spread = inst.spread();
    // Band for the early resultant test at a nearby anchor. Approach to an
    // optimal anchor can be sublinear, so waiting for the snap band is not an
    // option; the resultant criterion is exact at any distance.
    let near_band = 1e-3 * spread;

    let mut trace = TraceBuilder::start(inst, &start);
    let mut x = start.into_coords();
    let mut captures: u32 = 0;
    let mut anchor_verdict: Vec<Option<bool>> = vec![None; inst.len()];

    for iter in 1..=cfg.max_iter {
        // Vertex capture: the iterate sits (numerically) on an anchor.
        if let Some(j) = {
            let p = Point::new(x.clone())?;
            snapped_anchor(inst, &p)
        } {
            let (cert, _) = vertex_certificate(inst, j)?;
            if cert.residual <= cfg.cert_tol {
                let point = inst.anchor(j).clone();
                trace.push(inst, iter, point.clone(), Some(j));
                return Ok(finish(
                    inst,
                    point,
                    cert,
                    iter - 1,
                    Status::Converged,
                    vec![],
                    trace,
                ));
            }
            match cfg.escape_policy {
                EscapePolicy::CertifyAndStop => {
                    let point = inst.anchor(j).clone();
                    trace.push(inst, iter, point.clone(), Some(j));
                    return Ok(finish(
                        inst,
                        point,
                        cert,
                        iter - 1,
                        Status::MaxIter,
                        vec![format!(
                            "captured by non-optimal anchor {j}; stopped per escape policy"
                        )],
                        trace,
                    ));
                }
                EscapePolicy::Nudge => {
                    captures += 1;
                    let len = cfg.nudge_scale * spread * 0.5_f64.powi(captures as i32 - 1);
                    let report = subdiff::resultant(inst, j)?;
                    let rnorm = report.resultant_norm;
                    x = inst
                        .anchor(j)
                        .coords()
                        .iter()
                        .zip(report.resultant.coords())
                        .map(|(a, r)| a + len * r / rnorm)
                        .collect();
                    trace.push(inst, iter, Point::new(x.clone())?, Some(j));
                    continue;
                }
            }
        }

        let ev = step_eval(inst, &x);

        // Early vertex test: when the iterate drifts close to an anchor,
        // decide its optimality from the resultant once and either finish
        // there or keep going without being dragged into the snap band.
        if ev.min_dist <= near_band {
            let j = ev.min_index;
            let optimal = match anchor_verdict[j] {
                Some(v) => v,
                None => {
                    let (cert, _) = vertex_certificate(inst, j)?;
                    let v = cert.residual <= cfg.cert_tol;
                    anchor_verdict[j] = Some(v);
                    v
                }
            };
            if optimal {
                let point = inst.anchor(j).clone();
                let (cert, _) = vertex_certificate(inst, j)?;
                trace.push(inst, iter, point.clone(), Some(j));
                return Ok(finish(
                    inst,
                    point,
                    cert,
                    iter - 1,
                    Status::Converged,
                    vec![],
                    trace,
                ));
            }
        }

        let step_norm = distance(&ev.fx, &x);
        let rel_step_ok = step_norm <= cfg.step_tol * (1.0 + norm(&ev.fx));
        if ev.grad_norm <= cfg.cert_tol && rel_step_ok {
            let point = Point::new(x)?;
            let cert = Certificate {
                kind: CertificateKind::Interior,
                residual: ev.grad_norm,
                location: point.clone(),
            };
            return Ok(finish(
                inst,
                point,
                cert,
                iter - 1,
                Status::Converged,
                vec![],
                trace,
            ));
        }
        if step_norm <= f64::EPSILON * (1.0 + norm(&ev.fx)) {
            // Numeric fixed point without a certificate: no further progress
            // is possible in double precision.
            let point = Point::new(x)?;
            let cert = Certificate {
                kind: CertificateKind::Interior,
                residual: ev.grad_norm,
                location: point.clone(),
            };
            let status = if ev.grad_norm <= cfg.cert_tol {
                Status::Converged
            } else {
                Status::MaxIter
            };
            return Ok(finish(
                inst,
                point,
                cert,
                iter - 1,
                status,
                vec!["iteration reached a numeric fixed point".into()],
                trace,
            ));
        }

        x = ev.fx;
        trace.push(inst, iter, Point::new(x.clone())?, None);
    }

    let point = Point::new(x)?;
    let cert = subdiff::certify(inst, &point, cfg.cert_tol)?;
    Ok(finish(
        inst,
        point,
        cert,
        cfg.max_iter,
        Status::MaxIter,
        vec![],
        trace,
    ))
}
