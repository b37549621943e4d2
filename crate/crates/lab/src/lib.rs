//! File formats, spec strings, experiment drivers and plots around
//! `bloomlab-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod io;
pub mod specs;
pub mod svg;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] bloomlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("spec: {0}")]
    Spec(String),
    #[error("parse: {0}")]
    Parse(String),
}
