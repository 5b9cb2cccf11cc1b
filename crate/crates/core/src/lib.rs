//! Solvers for the keychain problem family.

pub mod adversarial;
pub mod assignment;
pub mod error;
pub mod gen;
pub mod io;
pub mod laminar;
pub mod lp;
pub mod model;
pub mod obm;
pub mod oracle;
pub mod order;
pub mod scenarios;

pub use error::{KeychainError, Result};
pub use io::{Instance, InstanceKind};
pub use model::*;
