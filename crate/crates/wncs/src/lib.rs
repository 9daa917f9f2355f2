//! Experiment engine, file formats and command-line front end for
//! coding-free wireless networked control.
//!
//! [`experiment`] turns an [`experiment::ExperimentSpec`] into a
//! [`experiment::SweepResult`] by parallel, seed-addressed Monte Carlo over
//! the designs in `wncs-core`. [`config`] reads TOML and flags into a
//! validated [`config::RunConfig`], [`output`] writes CSV with a metadata
//! sidecar, and [`verify`] holds the oracle cross-checks behind
//! `wncs verify`.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;
