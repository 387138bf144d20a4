//! Solver library for the weighted geometric-median problem: find a point in
//! R^n minimizing the weighted sum of Euclidean distances to a set of anchor
//! points.
//!
//! The crate is organized around the classical theory of the problem:
//!
//! * [`core`] — problem representation ([`Point`], [`Instance`]), objective
//!   and gradient evaluation, geometric predicates.
//! * [`subdiff`] — subdifferential optimality tests: the resultant criterion
//!   at an anchor, interior/vertex certificates, and the 120-degree angle
//!   conditions for three-point instances.
//! * [`weiszfeld`] — the distance-weighted-mean fixed-point iteration with
//!   descent diagnostics, vertex-capture handling, and a certified solve loop.
//! * [`exact3`] — closed-form solver for unweighted three-point instances in
//!   the plane (equilateral-apex construction).
//! * [`oracle`] — an independent brute-force grid minimizer and a
//!   finite-difference gradient checker, used for verification.
//!
//! ```
//! use geomedian::{Instance, Point, weiszfeld};
//!
//! let inst = Instance::new(vec![
//!     Point::new(vec![0.0, 0.0]).unwrap(),
//!     Point::new(vec![1.0, 0.0]).unwrap(),
//!     Point::new(vec![0.0, 1.0]).unwrap(),
//!     Point::new(vec![1.0, 1.0]).unwrap(),
//! ]).unwrap();
//! let (sol, _trace) = weiszfeld::solve(&inst, None, &Default::default()).unwrap();
//! assert!((sol.point.coords()[0] - 0.5).abs() < 1e-8);
//! assert!((sol.point.coords()[1] - 0.5).abs() < 1e-8);
//! ```

pub mod core;
pub mod error;
pub mod exact3;
pub mod oracle;
pub mod subdiff;
pub mod weiszfeld;

pub use crate::core::{Instance, ObjectiveValue, Point};
pub use crate::error::{Error, Result};
pub use crate::subdiff::{Certificate, CertificateKind};
pub use crate::weiszfeld::{EscapePolicy, IterationTrace, Solution, SolverConfig, Status};
