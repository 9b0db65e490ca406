//! Certified two-sided bounds for the Kobayashi infinitesimal metric on
//! domains `{r < 0}` in C^n, together with tools for studying the boundary
//! regularity of holomorphic maps.

pub mod analysis;
pub mod bound;
pub mod canonical;
pub mod cvector;
pub mod disc;
pub mod distance;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod expr;
pub mod holomap;
pub mod interval;
pub mod levi;
pub mod lower;
pub mod models;
pub mod optimize;
pub mod par;
pub mod parse;
pub mod region;
pub mod upper;

pub use cvector::{c, CVector, Unitary, C64};
pub use error::{Error, Result};
pub use expr::{Node, ScalarFieldExpr};
