//! Closed-form solver for the unweighted three-point problem in the plane.
//!
//! A triangle with an angle of 120 degrees or more is minimized at that
//! vertex; otherwise the minimizer is the interior point from which every
//! side subtends 120 degrees. That point is constructed by erecting an
//! equilateral apex on two of the sides (away from the opposite vertex) and
//! intersecting the two lines joining each apex to the far vertex.

use crate::core::{self, Instance, Point};
use crate::error::{Error, Result};
use crate::subdiff::DEFAULT_ANGLE_TOL;

/// Collinearity gate for triangle classification, applied as a relative
/// residual against the triangle's extent.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// How a three-point instance resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleKind {
    /// Some angle is at least 120 degrees; the minimizer is that vertex.
    Vertex,
    /// All angles are below 120 degrees; the minimizer is interior.
    Interior,
    /// Degenerate triangle; the minimizer is the middle anchor.
    Collinear,
}

/// The solved three-point case: which branch applied and the minimizer.
#[derive(Debug, Clone)]
pub struct TriangleCase {
    pub kind: TriangleKind,
    /// Index (0, 1 or 2) of the minimizing vertex when `kind` is `Vertex`,
    /// or the middle anchor when `Collinear`.
    pub vertex_index: Option<usize>,
    pub point: Point,
}

fn check_plane(points: [&Point; 3]) -> Result<()> {
    for p in points {
        if p.dim() != 2 {
            return Err(Error::Unsupported(format!(
                "the three-point construction works in the plane; got dimension {}",
                p.dim()
            )));
        }
    }
    Ok(())
}

fn sub(a: &Point, b: &Point) -> [f64; 2] {
    [a.coords()[0] - b.coords()[0], a.coords()[1] - b.coords()[1]]
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

fn len(u: [f64; 2]) -> f64 {
    u[0].hypot(u[1])
}

/// Cosine of the angle at `at`, spanned toward `p` and `q`.
fn corner_cosine(at: &Point, p: &Point, q: &Point) -> f64 {
    let u = sub(p, at);
    let v = sub(q, at);
    dot(u, v) / (len(u) * len(v))
}

/// Index of the middle point among three collinear points.
fn middle_of_collinear(pts: [&Point; 3]) -> usize {
    // the endpoints are the farthest pair; the remaining index is the middle
    let d01 = pts[0].distance(pts[1]);
    let d02 = pts[0].distance(pts[2]);
    let d12 = pts[1].distance(pts[2]);
    if d01 >= d02 && d01 >= d12 {
        2
    } else if d02 >= d01 && d02 >= d12 {
        1
    } else {
        0
    }
}

/// Classifies a planar triangle: collinear, obtuse at 120 degrees or more at
/// some vertex, or interior. Angles within [`DEFAULT_ANGLE_TOL`] (on the
/// cosine scale) of exactly 120 degrees route to the vertex case, where the
/// answer is exact.
pub fn classify(a1: &Point, a2: &Point, a3: &Point) -> Result<TriangleKind> {
    check_plane([a1, a2, a3])?;
    let inst = Instance::new(vec![a1.clone(), a2.clone(), a3.clone()])?;
    if inst.len() < 3 || core::collinear(&inst, COLLINEAR_TOL) {
        return Ok(TriangleKind::Collinear);
    }
    let cosines = [
        corner_cosine(a1, a2, a3),
        corner_cosine(a2, a3, a1),
        corner_cosine(a3, a1, a2),
    ];
    if cosines.iter().any(|c| *c <= -0.5 + DEFAULT_ANGLE_TOL) {
        return Ok(TriangleKind::Vertex);
    }
    Ok(TriangleKind::Interior)
}

/// Equilateral apex over the segment `p`-`q`, placed on the opposite side of
/// the line through `p` and `q` from `w`.
fn equilateral_apex(p: &Point, q: &Point, w: &Point) -> [f64; 2] {
    let u = sub(q, p);
    let side = cross(u, sub(w, p)).signum();
    let h = 3.0_f64.sqrt() / 2.0;
    let mid = [
        0.5 * (p.coords()[0] + q.coords()[0]),
        0.5 * (p.coords()[1] + q.coords()[1]),
    ];
    // left normal of u is (-u_y, u_x); step against the side w lies on
    [mid[0] - side * h * (-u[1]), mid[1] - side * h * u[0]]
}

/// Constructs the interior minimizer of a triangle with all angles below
/// 120 degrees.
///
/// Erects equilateral apexes `D` over `a1`-`a2` (away from `a3`) and `E` over
/// `a1`-`a3` (away from `a2`), then intersects the lines `D`-`a3` and
/// `E`-`a2`. Fails with a degeneracy error when the intersection is too
/// ill-conditioned, which the interior precondition rules out in practice.
pub fn torricelli_point(a1: &Point, a2: &Point, a3: &Point) -> Result<Point> {
    check_plane([a1, a2, a3])?;
    if classify(a1, a2, a3)? != TriangleKind::Interior {
        return Err(Error::InvalidArgument(
            "the apex construction needs a triangle with all angles below 120 degrees".into(),
        ));
    }
    let d = equilateral_apex(a1, a2, a3);
    let e = equilateral_apex(a1, a3, a2);
    // lines D + alpha (a3 - D) and E + beta (a2 - E)
    let r = [a3.coords()[0] - d[0], a3.coords()[1] - d[1]];
    let q = [a2.coords()[0] - e[0], a2.coords()[1] - e[1]];
    let det = cross(r, q);
    let scale = a1.distance(a2).max(a1.distance(a3)).max(a2.distance(a3));
    if det.abs() < 1e-14 * scale * scale {
        return Err(Error::NumericDegeneracy(format!(
            "construction lines are nearly parallel (det {det:.3e})"
        )));
    }
    let rhs = [e[0] - d[0], e[1] - d[1]];
    let alpha = cross(rhs, q) / det;
    Point::new(vec![d[0] + alpha * r[0], d[1] + alpha * r[1]])
}

/// Solves the unweighted three-point problem in the plane exactly.
pub fn solve_exact3(a1: &Point, a2: &Point, a3: &Point) -> Result<TriangleCase> {
    let pts = [a1, a2, a3];
    match classify(a1, a2, a3)? {
        TriangleKind::Collinear => {
            let mid = middle_of_collinear(pts);
            Ok(TriangleCase {
                kind: TriangleKind::Collinear,
                vertex_index: Some(mid),
                point: pts[mid].clone(),
            })
        }
        TriangleKind::Vertex => {
            let cosines = [
                corner_cosine(a1, a2, a3),
                corner_cosine(a2, a3, a1),
                corner_cosine(a3, a1, a2),
            ];
            let k = cosines
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite cosines"))
                .map(|(i, _)| i)
                .expect("three cosines");
            Ok(TriangleCase {
                kind: TriangleKind::Vertex,
                vertex_index: Some(k),
                point: pts[k].clone(),
            })
        }
        TriangleKind::Interior => Ok(TriangleCase {
            kind: TriangleKind::Interior,
            vertex_index: None,
            point: torricelli_point(a1, a2, a3)?,
        }),
    }
}
