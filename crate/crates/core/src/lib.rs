//! Exact verification of stochastic `U_q(sl_n)` R-matrices, their reflection
//! matrices and the integrable boundary-driven Markov chains built from them.
//!
//! All identities are checked by exact rational evaluation at random points.
//! Removable singularities such as the regularity point `u = 1` are evaluated
//! as limits with truncated Laurent series ([`exactnum::Jet`]).

pub mod boundary;
pub mod chain;
pub mod error;
pub mod exactnum;
pub mod harness;
pub mod identities;
pub mod linalg;
pub mod qkit;
pub mod rmat;

pub use error::{Error, Result};
pub use exactnum::{DualScalar, ExactScalar, Field, Jet, NumError, ParamPoint};
pub use harness::{Budget, CheckRecord, Status, Tamper, Witness};
pub use linalg::Matrix;
pub use rmat::ModelConfig;
