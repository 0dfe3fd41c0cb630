pub mod analysis;
pub mod fp4;
pub mod harness;
pub mod pipeline;
pub mod policy;
pub mod rl;
