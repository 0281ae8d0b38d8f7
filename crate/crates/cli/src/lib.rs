//! Library surface of the experiment runner, so the commands can be
//! driven from tests as well as from the binary.

pub mod commands;
pub mod config;
pub mod constants;
pub mod table;
