pub mod config;
pub mod frequency;
pub mod harness;
pub mod linguistic;
pub mod preprocess;
pub mod transport;
pub mod sources;
pub mod scoring;
