pub mod algebra;
pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod interferometer;
pub mod scenario;
pub mod selftest;
