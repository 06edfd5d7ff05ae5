pub mod bits;
pub mod channel;
pub mod cli;
pub mod math;
pub mod privacy;
pub mod protocol;
pub mod reconciliation;
pub mod rng;
pub mod security;
pub mod tomography;
