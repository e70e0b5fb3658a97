#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod coloring;
pub mod construct;
pub mod error;
pub mod grid;
pub mod io;
pub mod lcl;
pub mod rng;
pub mod toast;

pub use error::{Error, Result};
