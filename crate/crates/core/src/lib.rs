//! Solvers for the instantaneous growth ("jump") of a supercooled solid
//! region under surface tension.
//!
//! The jump is resolved on a fast time scale by an auxiliary front cascade:
//! the arrival time w(x) of the cascade at x satisfies
//!
//! div( ∇w/|∇w| · (1/|∇w| + γ) ) = -1 - u(x)
//!
//! outside the initial region, with w = 0 and ∂_n w = 1/V0 on its boundary.
//! Equivalently, in Lagrangian form the front moves with normal speed
//! V = 1/|∇w| and accelerates according to
//!
//! dV/dt = -V · ( (1 + u) + H (V + γ) ),
//!
//! where H is the mean curvature of the current front. The solid aggregate
//! after the jump is {w < ∞}.
//!
//! The crate provides:
//! - exact solutions in the four symmetric geometries ([`closedform`]),
//! - the 1D fast-scale ODE and arrival-time ODE ([`cascade1d`]),
//! - a general 2D marker front-tracking solver ([`fronttrack`]),
//! - a fast-marching value-function solver |∇w| = L⁺ ([`eikonal`]),
//! - construction and checking of the particle-ensemble equilibrium that
//!   underlies the weak formulation ([`equilibrium`]),
//! - perimeter / total-variation / energy certification ([`verify`]).

pub mod cascade1d;
pub mod closedform;
pub mod domain;
pub mod eikonal;
pub mod equilibrium;
pub mod fronttrack;
pub mod num;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("empty rasterization: region does not cover any grid cell")]
    EmptyRasterization,
    #[error("empty boundary: initial region has no interface on this grid")]
    EmptyBoundary,
    #[error("CFL violation: dt = {dt} exceeds stable bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("inconsistent field: {0}")]
    InconsistentField(String),
    #[error("open constraint: eps must be strictly positive")]
    OpenConstraint,
    #[error("front left the computational box; enlarge the grid")]
    DomainExit,
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
