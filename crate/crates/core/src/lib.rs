//! Exact symbolic engine for the algebraic elliptic KZB connection.
//!
//! The crate builds the connection forms on a single Weierstrass curve and
//! on the universal family `y^2 = 4x^3 - ux - v`, and checks flatness, gauge
//! equivalence, residues and weights with exact rational arithmetic. A small
//! floating-point oracle evaluates the analytic side through q-series.

pub mod rat;
pub mod poly;
pub mod fun;
pub mod forms;
pub mod laurent;
pub mod freelie;
pub mod linalg;
pub mod elliptic;
pub mod connection;
pub mod rep;
pub mod gauge;
pub mod oracle;

pub use forms::{DiffForm1, DiffForm2};
pub use fun::CurveFun;
pub use poly::{Curve, CurvePoly, Mono, Weight};
pub use rat::Rat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("fiber (u, v) = ({u}, {v}) lies on the discriminant locus")]
    SingularFiber { u: Rat, v: Rat },
    #[error("expansion requested to order {requested} but only {available} is available")]
    TruncationTooShort { requested: i64, available: i64 },
    #[error("{0}")]
    Domain(String),
}
