//! Command-line front end of `mtdc-stab`.

pub mod commands;
pub mod emit;
pub mod study;
