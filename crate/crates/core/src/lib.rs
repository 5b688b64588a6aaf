//! Runtime verification of reactive task trees over channel systems.
//!
//! The crate models a deliberative control stack — a ticked task tree, the
//! skill layer beneath it, and the components the skills call — as a system
//! of program graphs communicating over point-to-point channels. Properties
//! over the channel traffic are written in a small timed property language,
//! evaluated offline over recorded traces or enforced online by synthesized
//! monitors that passively observe every transmission.

pub mod bt;
pub mod cond;
pub mod error;
pub mod model;
pub mod monitor;
pub mod scenario;
pub mod scope;
pub mod trace;
pub mod value;

pub use cond::MessageCondition;
pub use error::{ModelError, ParseError};
pub use value::{Domain, Message, RelOp, Scalar};
