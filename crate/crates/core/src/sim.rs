//! Per-replica closed-loop simulation of the analog control schemes.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::fading::{apply_channel, gaussian, sample_fast_symbol, FastChannel};
use crate::fast::partial_csi_control_symbol;
use crate::model::{GainPair, NoisePowers, PlantParams, ReplicaCost, DIVERGENCE_LIMIT};

/// Disturbance and actuator noise variances of a simulated loop. Either may
/// be zero, unlike in [`NoisePowers`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopNoise {
    sigma_w2: f64,
    sigma_z2: f64,
    sigma_w: f64,
}

impl LoopNoise {
    pub fn new(sigma_w2: f64, sigma_z2: f64) -> Result<Self> {
        if !(sigma_w2.is_finite() && sigma_w2 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_w2",
                reason: "must be non-negative",
            });
        }
        if !(sigma_z2.is_finite() && sigma_z2 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_z2",
                reason: "must be non-negative",
            });
        }
        Ok(Self {
            sigma_w2,
            sigma_z2,
            sigma_w: sigma_w2.sqrt(),
        })
    }

    pub fn from_model(plant: &PlantParams, noise: &NoisePowers) -> Self {
        Self {
            sigma_w2: plant.sigma_w2(),
            sigma_z2: noise.sigma_z2(),
            sigma_w: plant.sigma_w2().sqrt(),
        }
    }

    pub fn noiseless() -> Self {
        Self {
            sigma_w2: 0.0,
            sigma_z2: 0.0,
            sigma_w: 0.0,
        }
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    pub fn sigma_z2(&self) -> f64 {
        self.sigma_z2
    }
}

/// Costed window: states `x(b+1) … x(b+T)` enter the cost, where `b` is
/// the burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub horizon: usize,
    pub burn_in: usize,
}

impl Window {
    pub fn new(horizon: usize, burn_in: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be at least 1",
            });
        }
        Ok(Self { horizon, burn_in })
    }

    pub fn steps(&self) -> usize {
        self.horizon + self.burn_in
    }
}

/// Whether the fast-fading controller sees the sign of `H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignKnowledge {
    Partial,
    None,
}

pub(crate) fn diverged(x: f64) -> bool {
    !x.is_finite() || x.abs() > DIVERGENCE_LIMIT
}

/// Drives `step` for `window.steps()` symbols from `x0`. Once the state
/// leaves the divergence guard the replica is cut short and flagged.
fn run_loop<F>(
    x0: f64,
    window: Window,
    mut step: F,
    mut states: Option<&mut Vec<f64>>,
) -> ReplicaCost
where
    F: FnMut(f64) -> f64,
{
    let mut acc = ReplicaCost::default();
    let mut x = x0;
    for t in 1..=window.steps() {
        x = step(x);
        if let Some(s) = states.as_deref_mut() {
            s.push(x);
        }
        if diverged(x) {
            acc.diverged = true;
            break;
        }
        if t > window.burn_in {
            acc.push(x);
        }
    }
    acc
}

/// One slow-fading replica: `v = Kx`, `r = hv + z`, `u = Gr`.
#[allow(clippy::too_many_arguments)]
pub fn slow_replica<R: RngCore + ?Sized>(
    a: f64,
    gains: &GainPair,
    h: f64,
    noise: &LoopNoise,
    x0: f64,
    window: Window,
    rng: &mut R,
    states: Option<&mut Vec<f64>>,
) -> ReplicaCost {
    run_loop(
        x0,
        window,
        |x| {
            let r = apply_channel(gains.k * x, h, noise.sigma_z2, rng);
            let w = gaussian(rng, noise.sigma_w);
            a * x + gains.g * r + w
        },
        states,
    )
}

/// One fast-fading replica with a fresh Gaussian coefficient every symbol.
#[allow(clippy::too_many_arguments)]
pub fn fast_replica<R: RngCore + ?Sized>(
    a: f64,
    gains: &GainPair,
    channel: &FastChannel,
    csi: SignKnowledge,
    noise: &LoopNoise,
    x0: f64,
    window: Window,
    rng: &mut R,
    states: Option<&mut Vec<f64>>,
) -> ReplicaCost {
    run_loop(
        x0,
        window,
        |x| {
            let sym = sample_fast_symbol(channel, rng);
            let v = match csi {
                SignKnowledge::Partial => partial_csi_control_symbol(x, gains, sym.sign),
                SignKnowledge::None => gains.k * x,
            };
            let r = apply_channel(v, sym.h, noise.sigma_z2, rng);
            let w = gaussian(rng, noise.sigma_w);
            a * x + gains.g * r + w
        },
        states,
    )
}
