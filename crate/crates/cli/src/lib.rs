//! File formats, argument handling and command implementations of the `wbp`
//! tool.

pub mod alist;
pub mod args;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod tables;
