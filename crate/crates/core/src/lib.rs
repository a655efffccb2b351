//! Definition, execution and exhaustive verification of multi-party
//! computation protocols written in Overture, optionally staged through
//! the Prelude metalanguage.

pub mod datalog;
pub mod dist;
pub mod engine;
pub mod field;
pub mod lang;
pub mod lex;
pub mod prelude;
pub mod stdlib;
pub mod verifier;
