pub mod bounds;
pub mod closed_forms;
pub mod error;
pub mod expr;
pub mod gallery;
pub mod interp;
pub mod mcsim;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod par;
pub mod quad;

pub use error::{Error, Result};
pub use expr::{parse, Compiled, Expr, Params};
