//! File loading, input generation, reports, sweeps and the command line
//! for [`esm_core`].

pub mod cli;
pub mod codec;
pub mod load;
pub mod report;
pub mod sweep;
