//! Persistence and simulation support for the wallet CLI. The binary in
//! `main.rs` is a thin command dispatcher over these modules and the engine.

pub mod persist;
pub mod sim;
