//! Subdifferential optimality tests and machine-checkable certificates.
//!
//! A point minimizes the convex objective exactly when zero lies in its
//! subdifferential. Away from the anchors that reduces to a vanishing
//! gradient; at an anchor `a_k` the subdifferential is the resultant of the
//! unit pulls toward the remaining anchors plus the ball `w_k * B`, so `a_k`
//! is optimal exactly when the resultant norm does not exceed `w_k`. Both
//! tests are exposed here as residuals that vanish (within tolerance) at an
//! optimum.

use crate::core::{self, norm, Instance, Point};
use crate::error::{Error, Result};

/// Default certificate tolerance: residuals at or below this certify
/// optimality. Sits comfortably above gradient evaluation noise near an
/// optimum in double precision.
pub const DEFAULT_CERT_TOL: f64 = 1e-8;

/// Default tolerance for the three-point angle conditions, applied on the
/// cosine scale.
pub const DEFAULT_ANGLE_TOL: f64 = 1e-7;

/// The resultant test at one anchor.
#[derive(Debug, Clone)]
pub struct VertexReport {
    /// Index of the anchor under test.
    pub index: usize,
    /// The resultant `R_k = sum_{i != k} w_i (a_i - a_k) / ||a_i - a_k||`.
    pub resultant: Point,
    /// `||R_k||`.
    pub resultant_norm: f64,
    /// Whether the anchor is an optimal solution: `||R_k|| <= w_k` up to the
    /// certificate tolerance. The boundary case counts as optimal (the
    /// subdifferential ball is closed).
    pub optimal: bool,
}

/// Which optimality test produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// Gradient test away from the anchors.
    Interior,
    /// Resultant test at the anchor with this index.
    Vertex { index: usize },
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::Interior => "interior",
            CertificateKind::Vertex { .. } => "vertex",
        }
    }
}

/// Machine-checkable optimality evidence at a point.
///
/// `residual` is the gradient norm for interior points and
/// `max(0, ||R_k|| - w_k)` at anchor `k`; a residual at or below the
/// certificate tolerance proves optimality.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub residual: f64,
    pub location: Point,
}

impl Certificate {
    pub fn certifies(&self, cert_tol: f64) -> bool {
        self.residual <= cert_tol
    }
}

/// Unit direction vectors `v_i = (x - a_i) / ||x - a_i||` for a three-point
/// instance, the geometry behind the 120-degree conditions.
#[derive(Debug, Clone)]
pub struct UnitDirections {
    v: Vec<Point>,
}

impl UnitDirections {
    /// Computes the three unit directions from the anchors toward `x`, which
    /// must not sit on any anchor.
    pub fn compute(inst: &Instance, x: &Point) -> Result<Self> {
        inst.check_dim(x)?;
        if inst.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "three-point directions need exactly 3 anchors, got {}",
                inst.len()
            )));
        }
        if let Some(index) = core::snapped_anchor(inst, x) {
            return Err(Error::AtVertex { index });
        }
        let v = inst
            .anchors()
            .iter()
            .map(|a| {
                let d = x.distance(a);
                Point::new(
                    x.coords()
                        .iter()
                        .zip(a.coords())
                        .map(|(xj, aj)| (xj - aj) / d)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { v })
    }

    pub fn directions(&self) -> &[Point] {
        &self.v
    }

    /// `||v_1 + v_2 + v_3||`; zero exactly at an interior optimum.
    pub fn sum_norm(&self) -> f64 {
        let n = self.v[0].dim();
        let mut s = vec![0.0; n];
        for v in &self.v {
            for (sj, vj) in s.iter_mut().zip(v.coords()) {
                *sj += vj;
            }
        }
        norm(&s)
    }
}

fn cosine(u: &Point, v: &Point) -> f64 {
    core::dot(u.coords(), v.coords()) / (u.norm() * v.norm())
}

/// Computes the resultant `R_k` at anchor `k` and flags whether the anchor
/// is optimal (`||R_k|| <= w_k + DEFAULT_CERT_TOL`).
pub fn resultant(inst: &Instance, k: usize) -> Result<VertexReport> {
    if k >= inst.len() {
        return Err(Error::InvalidArgument(format!(
            "anchor index {k} out of range for {} anchors",
            inst.len()
        )));
    }
    let ak = inst.anchor(k);
    let mut r = vec![0.0; inst.dim()];
    for (i, (a, w)) in inst.anchors().iter().zip(inst.weights()).enumerate() {
        if i == k {
            continue;
        }
        let d = a.distance(ak);
        for (rj, (aj, kj)) in r.iter_mut().zip(a.coords().iter().zip(ak.coords())) {
            *rj += w * (aj - kj) / d;
        }
    }
    let resultant_norm = norm(&r);
    Ok(VertexReport {
        index: k,
        resultant: Point::new(r).expect("resultant coordinates are finite"),
        resultant_norm,
        optimal: resultant_norm <= inst.weights()[k] + DEFAULT_CERT_TOL,
    })
}

/// Produces the optimality certificate for `x`: the vertex residual when `x`
/// snaps to an anchor, the gradient norm otherwise.
pub fn certify(inst: &Instance, x: &Point, cert_tol: f64) -> Result<Certificate> {
    inst.check_dim(x)?;
    if !(cert_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cert_tol must be positive, got {cert_tol}"
        )));
    }
    match core::snapped_anchor(inst, x) {
        Some(index) => {
            let report = resultant(inst, index)?;
            let residual = (report.resultant_norm - inst.weights()[index]).max(0.0);
            Ok(Certificate {
                kind: CertificateKind::Vertex { index },
                residual,
                location: inst.anchor(index).clone(),
            })
        }
        None => {
            let g = core::gradient(inst, x)?;
            Ok(Certificate {
                kind: CertificateKind::Interior,
                residual: g.norm(),
                location: x.clone(),
            })
        }
    }
}

/// Which branch of the three-point conditions applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreePointCase {
    Interior,
    Vertex { index: usize },
}

/// Outcome of the three-point angle conditions at a candidate point.
#[derive(Debug, Clone)]
pub struct ThreePointReport {
    pub case: ThreePointCase,
    pub satisfied: bool,
    /// Interior case: the three pairwise cosines `cos(v_1,v_2)`,
    /// `cos(v_2,v_3)`, `cos(v_3,v_1)`. Vertex case: the single cosine between
    /// the directions from the two remaining anchors.
    pub cosines: Vec<f64>,
}

/// Checks the 120-degree optimality conditions of the unweighted three-point
/// problem at `x`.
///
/// Away from the anchors, `x` is optimal exactly when all three pairwise
/// cosines of the unit directions equal -1/2; at an anchor, exactly when the
/// cosine between the two remaining directions is at most -1/2. Tolerance is
/// [`DEFAULT_ANGLE_TOL`] on the cosine scale.
pub fn three_point_conditions(inst: &Instance, x: &Point) -> Result<ThreePointReport> {
    inst.check_dim(x)?;
    if inst.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "three-point conditions need exactly 3 anchors, got {}",
            inst.len()
        )));
    }
    if !inst.is_unweighted() {
        return Err(Error::Unsupported(
            "three-point angle conditions are stated for equal weights only".into(),
        ));
    }
    match core::snapped_anchor(inst, x) {
        Some(k) => {
            let ak = inst.anchor(k);
            let others: Vec<Point> = (0..3)
                .filter(|&i| i != k)
                .map(|i| {
                    let a = inst.anchor(i);
                    let d = ak.distance(a);
                    Point::new(
                        ak.coords()
                            .iter()
                            .zip(a.coords())
                            .map(|(kj, aj)| (kj - aj) / d)
                            .collect(),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let c = cosine(&others[0], &others[1]);
            Ok(ThreePointReport {
                case: ThreePointCase::Vertex { index: k },
                satisfied: c <= -0.5 + DEFAULT_ANGLE_TOL,
                cosines: vec![c],
            })
        }
        None => {
            let dirs = UnitDirections::compute(inst, x)?;
            let v = dirs.directions();
            let cosines = vec![
                cosine(&v[0], &v[1]),
                cosine(&v[1], &v[2]),
                cosine(&v[2], &v[0]),
            ];
            let satisfied = cosines
                .iter()
                .all(|c| (c + 0.5).abs() <= DEFAULT_ANGLE_TOL);
            Ok(ThreePointReport {
                case: ThreePointCase::Interior,
                satisfied,
                cosines,
            })
        }
    }
}
