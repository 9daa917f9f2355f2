//! Fast-fading designs with sign-only channel knowledge.
//!
//! The controller flips its factor with the sign of the per-symbol
//! coefficient, so the loop term `G·K·|H(t)|` is never positive. The closed
//! loop is then random with second moment
//! `E[A_c²] = σ²_h U² + 2√(2σ²_h/π) A U + A²`, `U = G·K`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{Cost, GainPair, NoisePowers, PlantId, PlantParams};
use crate::roots::solve_decreasing;
use crate::slow::{longest_prefix, require_positive_gain, sort_descending, SnrAllocation};
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

/// `1 − 2/π`.
pub const ETA: f64 = 1.0 - 2.0 / PI;

fn folded_mean(sigma_h2: f64) -> f64 {
    (2.0 * sigma_h2 / PI).sqrt()
}

fn require_variance(sigma_h2: f64) -> Result<()> {
    if sigma_h2.is_finite() && sigma_h2 > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "sigma_h2",
            reason: "fast-fading variance must be positive",
        })
    }
}

/// Transmitted value `sgn(h)·K·x`; `h_sign` of zero counts as `+1`.
pub fn partial_csi_control_symbol(x: f64, gains: &GainPair, h_sign: f64) -> f64 {
    let s = if h_sign < 0.0 { -1.0 } else { 1.0 };
    s * gains.k * x
}

pub fn expected_ac2(plant: &PlantParams, sigma_h2: f64, u: f64) -> f64 {
    let a = plant.a();
    sigma_h2 * u * u + 2.0 * folded_mean(sigma_h2) * a * u + a * a
}

/// Closed-loop second moment when the sign flip is disabled:
/// `A² + U²σ²_h`, never below `A²`.
pub fn expected_ac2_no_csi(plant: &PlantParams, sigma_h2: f64, u: f64) -> f64 {
    let a = plant.a();
    a * a + u * u * sigma_h2
}

pub fn stabilizable_fast(plant: &PlantParams) -> bool {
    plant.a() * plant.a() * ETA < 1.0
}

/// Smallest SNR `(A² − 1)/((1 − ηA²)σ²_h)` at which a plant can be
/// stabilized; infinite when the plant is not stabilizable at all.
pub fn fast_floor(a: f64, sigma_h2: f64) -> f64 {
    let margin = 1.0 - ETA * a * a;
    if margin > 0.0 {
        (a * a - 1.0) / (margin * sigma_h2)
    } else {
        f64::INFINITY
    }
}

pub fn feasible_single_fast_at(plant: &PlantParams, sigma_h2: f64, gamma0: f64) -> bool {
    let a2 = plant.a() * plant.a();
    let sg = sigma_h2 * gamma0;
    a2 * (1.0 + ETA * sg) <= 1.0 + sg
}

pub fn feasible_single_fast(plant: &PlantParams, noise: &NoisePowers, sigma_h2: f64) -> bool {
    feasible_single_fast_at(plant, sigma_h2, noise.gamma0())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleFastDesign {
    /// `None` at the feasibility boundary, where `K* = 0`.
    pub gains: Option<GainPair>,
    pub u: f64,
    pub e_ac2: f64,
    pub cost: Cost,
    pub gamma: f64,
}

pub fn optimize_single_fast_at(
    plant: &PlantParams,
    ssr: f64,
    sigma_h2: f64,
    gamma: f64,
) -> Result<SingleFastDesign> {
    let a = require_positive_gain(plant)?;
    require_variance(sigma_h2)?;
    if !stabilizable_fast(plant) {
        return Err(Error::NotFastStabilizable {
            a2_eta: a * a * ETA,
        });
    }
    if !feasible_single_fast_at(plant, sigma_h2, gamma) {
        return Err(Error::NotStabilizable {
            required: fast_floor(a, sigma_h2),
            budget: gamma,
        });
    }
    let u = -folded_mean(sigma_h2) * a * gamma / (1.0 + sigma_h2 * gamma);
    let e_ac2 = expected_ac2(plant, sigma_h2, u);
    let q = (1.0 - e_ac2) * gamma - u * u;
    if !(q > 0.0) {
        return Ok(SingleFastDesign {
            gains: None,
            u,
            e_ac2,
            cost: Cost::Unbounded,
            gamma,
        });
    }
    let k = -(q / ssr).sqrt();
    Ok(SingleFastDesign {
        gains: Some(GainPair::new(k, u / k)),
        u,
        e_ac2,
        cost: Cost::Bounded(gamma * plant.sigma_w2() / q),
        gamma,
    })
}

pub fn optimize_single_fast(
    plant: &PlantParams,
    noise: &NoisePowers,
    sigma_h2: f64,
) -> Result<SingleFastDesign> {
    optimize_single_fast_at(plant, noise.ssr(plant), sigma_h2, noise.gamma0())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastDesign {
    pub per_plant: Vec<SingleFastDesign>,
    pub eta: f64,
}

impl FastDesign {
    pub fn predicted_costs(&self) -> impl Iterator<Item = Cost> + '_ {
        self.per_plant.iter().map(|d| d.cost)
    }

    pub fn total_cost(&self) -> Cost {
        self.predicted_costs().sum()
    }
}

/// Largest best-channel-first set with
/// `Σ (A² − 1)/((1 − ηA²)σ²_{h,i}) ≤ γ₀`.
pub fn select_plants_fast(
    plants: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
) -> Vec<PlantId> {
    if !stabilizable_fast(plant) {
        return Vec::new();
    }
    let a = plant.a();
    let sorted = sort_descending(plants);
    longest_prefix(&sorted, noise.gamma0(), |s| fast_floor(a, s))
}

/// Joint fast-fading design. Shares are
/// `γ_i = ((A² − 1) + √(2/π)·A·σ_{h,i}/√λ)/((1 − ηA²)σ²_{h,i})`, clamped
/// below at the per-plant floor.
pub fn allocate_multi_fast(
    selected: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
) -> Result<(SnrAllocation, FastDesign)> {
    let a = require_positive_gain(plant)?;
    if selected.is_empty() {
        return Err(Error::NoPlants);
    }
    for &(_, s) in selected {
        require_variance(s)?;
    }
    if !stabilizable_fast(plant) {
        return Err(Error::NotFastStabilizable {
            a2_eta: a * a * ETA,
        });
    }
    let gamma0 = noise.gamma0();
    let ssr = noise.ssr(plant);
    let floors: Vec<f64> = selected.iter().map(|&(_, s)| fast_floor(a, s)).collect();
    let floor_sum: f64 = floors.iter().sum();
    if floor_sum > gamma0 {
        return Err(Error::Infeasible {
            criterion: "fast-fading joint design",
            required: floor_sum,
            budget: gamma0,
        });
    }
    let margin = 1.0 - ETA * a * a;
    let c = (2.0 / PI).sqrt();

    let (gamma, lambda) = if selected.len() == 1 {
        (alloc::vec![gamma0], None)
    } else if floor_sum == gamma0 {
        (floors.clone(), None)
    } else {
        let share = |lambda: f64, s: f64, floor: f64| -> f64 {
            let g = ((a * a - 1.0) + c * a * s.sqrt() / lambda.sqrt()) / (margin * s);
            g.max(floor)
        };
        let lambda = solve_decreasing(
            |l| {
                selected
                    .iter()
                    .zip(&floors)
                    .map(|(&(_, s), &fl)| share(l, s, fl))
                    .sum()
            },
            gamma0,
        )?;
        let gamma = selected
            .iter()
            .zip(&floors)
            .map(|(&(_, s), &fl)| share(lambda, s, fl))
            .collect();
        (gamma, Some(lambda))
    };

    let per_plant = selected
        .iter()
        .zip(&gamma)
        .map(|(&(_, s), &g)| optimize_single_fast_at(plant, ssr, s, g))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        SnrAllocation {
            gamma,
            selected: selected.iter().map(|&(id, _)| id).collect(),
            lambda,
        },
        FastDesign {
            per_plant,
            eta: ETA,
        },
    ))
}
