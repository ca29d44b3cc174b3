//! Library half of the `picklab` binary: request decoding, dispatch and report
//! assembly. `main.rs` only parses arguments and prints.

pub mod commands;
pub mod necessity;
pub mod settings;
pub mod wire;
