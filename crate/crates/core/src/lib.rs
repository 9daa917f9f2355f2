//! Coding-free (analog) control of scalar plants over wireless fading links.
//!
//! A controller observes plant states and sends `v = K·x` as an uncoded
//! real-valued symbol; the actuator applies `u = G·r` to whatever it
//! receives. This crate holds the allocation-light algorithmic core:
//!
//! - [`model`]: plant recursion, cost accounting and the slow-fading
//!   steady-state cost.
//! - [`fading`]: block Rayleigh and per-symbol Gaussian channel samplers with
//!   keyed, reproducible RNG substreams.
//! - [`slow`]: closed-form single- and multi-plant designs for slow fading,
//!   including the identical-actuator and identical-controller variants and
//!   the plant selection rules.
//! - [`fast`]: the sign-flipping partial-CSI law for fast fading and its
//!   optimal single- and multi-plant designs.
//! - [`coded`]: the digital baseline (Hamming/BCH over GF(2), Gray-mapped
//!   square QAM, deadbeat control with drop-on-failure).
//! - [`sim`]: single-replica Monte-Carlo loops shared by the experiment
//!   engine.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod coded;
pub mod error;
pub mod fading;
pub mod fast;
pub mod model;
mod roots;
pub mod sim;
pub mod slow;

pub use error::{Error, Result};
pub use model::{
    Cost, CostReport, GainPair, NoisePowers, PlantCost, PlantId, PlantParams, PlantState,
    ReplicaCost,
};
