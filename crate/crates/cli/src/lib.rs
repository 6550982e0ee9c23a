//! Batch front end for the simulator: configuration files, result records,
//! CSV and SVG emitters and the `menr` subcommands.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod hash;
pub mod record;
pub mod svg;
