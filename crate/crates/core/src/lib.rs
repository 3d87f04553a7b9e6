//! Numerical solver and verification suite for prescribed `L_p`
//! Hessian-quotient curvature equations on the round sphere,
//!
//! ```text
//!     H_{n-l}(A) / H_{n-k}(A) = φ u^{p-1},    A = ∇²u + u·σ,    φ = 1/f,
//! ```
//!
//! where `u` is the support function of a convex hypersurface. The crate
//! provides the symmetric-function algebra ([`symfun`]), sphere
//! discretizations ([`sphere`]), the discrete residual and Jacobian
//! ([`pde`]), Newton and homotopy continuation solvers including the
//! critical eigenvalue problem ([`continuation`]), geometric verification
//! ([`geometry`]) and the batch driver behind the `curvquot` binary ([`run`]).

pub mod continuation;
pub mod error;
pub mod geometry;
pub mod pde;
pub mod run;
pub mod sparse;
pub mod sphere;
pub mod symfun;

pub use error::{Error, Result};
