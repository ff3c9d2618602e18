//! Wind-integrated AC optimal power flow through a Taylor-expanded
//! second-order cone approximation, tightened by rolling cutting planes and
//! restored to AC feasibility with Newton-Raphson.

pub mod conic;
pub mod driver;
pub mod error;
pub mod netmodel;
pub mod pf;
pub mod relaxation;
pub mod windcost;

pub use error::{Error, Result};
