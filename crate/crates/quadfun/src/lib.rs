//! File formats, a parallel Monte Carlo runner and the `quadfun` command line
//! on top of [`quadfun_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod spec;

pub use error::{Error, Result};
pub use quadfun_core as core;
