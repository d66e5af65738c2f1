//! Configuration-driven pipelines, exports and the acceptance suite for the edgeflow toolkit.

pub mod acceptance;
pub mod config;
pub mod export;
pub mod manifest;
pub mod pipeline;
