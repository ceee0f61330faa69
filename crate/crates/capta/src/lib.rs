//! Project files, the pipeline driver, exports and the local API around
//! `capta-core`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod fixture;
pub mod gexf;
pub mod pipeline;
pub mod project;
pub mod report;
pub mod service;
pub mod tables;

pub use config::ProjectConfig;
pub use project::Project;
