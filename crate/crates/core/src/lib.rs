//! Primal-dual proximal gradient solvers for nonsmooth nonconvex minimax
//! problems with coupled linear constraints
//!
//! ```text
//! min_{x ∈ X} max_{y ∈ Y, Ax + By ⊴ c}  f(x, y) + h(x) − g(y)
//! ```

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod projections;
pub mod pdapg;
pub mod pdpg_l;
pub mod prox;
pub mod stationarity;
pub mod trace;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
