pub mod classifiers;
pub mod config;
pub mod evaluation;
pub mod features;
pub mod records;
pub mod rng;
pub mod run;
pub mod splits;
pub mod synthgen;
pub mod terms;
