//! LWE hidden-GHZ trapdoor family, circuit simulation and GHZ distribution protocols.

pub mod bits;
pub mod cli;
pub mod dist;
pub mod family;
mod fixed;
pub mod modq;
pub mod mp;
pub mod protocol;
pub mod qsim;
pub mod report;
pub mod rng;
pub mod stats;
