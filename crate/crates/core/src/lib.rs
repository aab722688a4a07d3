pub mod bits;
pub mod cli;
pub mod combinatorics;
pub mod conditional;
pub mod detector;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod frames;
pub mod numerics;
pub mod simulator;
