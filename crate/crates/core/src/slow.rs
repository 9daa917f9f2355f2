//! Slow-fading designs: one coefficient `|H|` per control process, known to
//! controller and actuator.
//!
//! For a single plant the optimum sits on the SNR constraint with closed loop
//! `A*_c = A/(1 + H²γ)`. Several plants share the budget through per-plant
//! SNR shares found from a one-dimensional KKT multiplier; worse channels get
//! larger shares.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{Cost, GainPair, NoisePowers, PlantId, PlantParams};
use crate::roots::solve_decreasing;
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

pub(crate) fn require_positive_gain(plant: &PlantParams) -> Result<f64> {
    let a = plant.a();
    if a > 1.0 {
        Ok(a)
    } else {
        Err(Error::InvalidParameter {
            name: "a",
            reason: "optimizers assume A > 1; mirror the state to handle A < -1",
        })
    }
}

pub(crate) fn require_channel(name: &'static str, h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: "channel coefficient must be positive",
        })
    }
}

/// Minimum SNR `(A² − 1)/H²` needed to stabilize a plant over `h`.
pub fn stabilizability_floor(a: f64, h: f64) -> f64 {
    (a * a - 1.0) / (h * h)
}

pub fn feasible_single_at(plant: &PlantParams, h: f64, gamma0: f64) -> bool {
    stabilizability_floor(plant.a(), h) <= gamma0
}

pub fn feasible_single(plant: &PlantParams, noise: &NoisePowers, h: f64) -> bool {
    feasible_single_at(plant, h, noise.gamma0())
}

/// Gains of a single slow-fading design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlowGains {
    Interior(GainPair),
    /// The budget equals the stabilizability floor: `K* → 0` and `G* → ∞`
    /// with only their product defined.
    Boundary {
        product: f64,
    },
}

impl SlowGains {
    pub fn pair(&self) -> Option<GainPair> {
        match self {
            SlowGains::Interior(p) => Some(*p),
            SlowGains::Boundary { .. } => None,
        }
    }

    pub fn product(&self) -> f64 {
        match self {
            SlowGains::Interior(p) => p.g * p.k,
            SlowGains::Boundary { product } => *product,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSlowDesign {
    pub gains: SlowGains,
    pub a_c: f64,
    pub cost: Cost,
    /// SNR share the design was solved for.
    pub gamma: f64,
}

/// Optimal gains for one plant at SNR `gamma`.
pub fn optimize_single_slow_at(
    plant: &PlantParams,
    ssr: f64,
    h: f64,
    gamma: f64,
) -> Result<SingleSlowDesign> {
    let a = require_positive_gain(plant)?;
    require_channel("h", h)?;
    let floor = stabilizability_floor(a, h);
    if !(floor <= gamma) {
        return Err(Error::NotStabilizable {
            required: floor,
            budget: gamma,
        });
    }
    let s = h * h * gamma;
    let a_c = a / (1.0 + s);
    let margin = s + 1.0 - a * a;
    if margin <= 0.0 {
        return Ok(SingleSlowDesign {
            gains: SlowGains::Boundary {
                product: -(a * a - 1.0) / (a * h),
            },
            a_c,
            cost: Cost::Unbounded,
            gamma,
        });
    }
    let k = -(gamma * margin / (ssr * (s + 1.0))).sqrt();
    let g = a * h * (gamma * ssr / ((s + 1.0) * margin)).sqrt();
    // Equals (G²σ²_z + σ²_w)/(1 − A*_c²) at these gains.
    let cost = plant.sigma_w2() * (1.0 + s) / margin;
    Ok(SingleSlowDesign {
        gains: SlowGains::Interior(GainPair::new(k, g)),
        a_c,
        cost: Cost::Bounded(cost),
        gamma,
    })
}

pub fn optimize_single_slow(
    plant: &PlantParams,
    noise: &NoisePowers,
    h: f64,
) -> Result<SingleSlowDesign> {
    optimize_single_slow_at(plant, noise.ssr(plant), h, noise.gamma0())
}

/// Orders plants by channel quality, best first; equal qualities keep id
/// order.
pub(crate) fn sort_descending(plants: &[(PlantId, f64)]) -> Vec<(PlantId, f64)> {
    let mut sorted = plants.to_vec();
    sorted.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    sorted
}

/// Longest prefix of `sorted` whose accumulated `term` stays within `budget`.
pub(crate) fn longest_prefix<F>(sorted: &[(PlantId, f64)], budget: f64, mut term: F) -> Vec<PlantId>
where
    F: FnMut(f64) -> f64,
{
    let mut used = 0.0;
    let mut out = Vec::new();
    for &(id, q) in sorted {
        used += term(q);
        if !(used <= budget) {
            break;
        }
        out.push(id);
    }
    out
}

/// Plants chosen for remote control: the largest best-channel-first set
/// with `Σ (A² − 1)/H²_i ≤ γ₀`.
pub fn select_plants_slow(
    plants: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
) -> Vec<PlantId> {
    let a = plant.a();
    let sorted = sort_descending(plants);
    longest_prefix(&sorted, noise.gamma0(), |h| stabilizability_floor(a, h))
}

/// Per-plant SNR shares of a multi-plant design.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrAllocation {
    pub gamma: Vec<f64>,
    pub selected: Vec<PlantId>,
    /// KKT multiplier; `None` when the allocation needed no root search
    /// (a single plant, or a budget exactly at the floors).
    pub lambda: Option<f64>,
}

impl SnrAllocation {
    pub fn total(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowDesign {
    pub per_plant: Vec<SingleSlowDesign>,
}

impl SlowDesign {
    pub fn gains(&self) -> impl Iterator<Item = SlowGains> + '_ {
        self.per_plant.iter().map(|d| d.gains)
    }

    pub fn closed_loop(&self) -> impl Iterator<Item = f64> + '_ {
        self.per_plant.iter().map(|d| d.a_c)
    }

    pub fn predicted_costs(&self) -> impl Iterator<Item = Cost> + '_ {
        self.per_plant.iter().map(|d| d.cost)
    }

    pub fn total_cost(&self) -> Cost {
        self.predicted_costs().sum()
    }
}

/// Joint design of several plants sharing one SNR budget.
///
/// Shares are `γ_i = (A² − 1)/H²_i + A/(H_i √λ)` with `λ` set so that the
/// shares exhaust `γ₀`; each plant then receives the single-plant optimum at
/// its share. Outputs follow the order of `selected`.
pub fn allocate_multi_slow(
    selected: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
) -> Result<(SnrAllocation, SlowDesign)> {
    let a = require_positive_gain(plant)?;
    if selected.is_empty() {
        return Err(Error::NoPlants);
    }
    for &(_, h) in selected {
        require_channel("h", h)?;
    }
    let gamma0 = noise.gamma0();
    let ssr = noise.ssr(plant);
    let floors: Vec<f64> = selected
        .iter()
        .map(|&(_, h)| stabilizability_floor(a, h))
        .collect();
    let floor_sum: f64 = floors.iter().sum();
    if floor_sum > gamma0 {
        return Err(Error::Infeasible {
            criterion: "slow-fading joint design",
            required: floor_sum,
            budget: gamma0,
        });
    }

    let (gamma, lambda) = if selected.len() == 1 {
        (alloc::vec![gamma0], None)
    } else if floor_sum == gamma0 {
        (floors.clone(), None)
    } else {
        let share = |lambda: f64, (h, floor): (f64, f64)| -> f64 {
            (floor + a / (h * lambda.sqrt())).max(floor)
        };
        let lambda = solve_decreasing(
            |l| {
                selected
                    .iter()
                    .zip(&floors)
                    .map(|(&(_, h), &fl)| share(l, (h, fl)))
                    .sum()
            },
            gamma0,
        )?;
        let gamma = selected
            .iter()
            .zip(&floors)
            .map(|(&(_, h), &fl)| share(lambda, (h, fl)))
            .collect();
        (gamma, Some(lambda))
    };

    let per_plant = selected
        .iter()
        .zip(&gamma)
        .map(|(&(_, h), &g)| optimize_single_slow_at(plant, ssr, h, g))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        SnrAllocation {
            gamma,
            selected: selected.iter().map(|&(id, _)| id).collect(),
            lambda,
        },
        SlowDesign { per_plant },
    ))
}

// ---------------------------------------------------------------------------
// Identical actuator factors
// ---------------------------------------------------------------------------

/// Effective budget `G²γ₀/(G² + SSR)` seen by the products `K̃_i = K_i·G`.
pub fn identical_actuator_budget(g: f64, gamma0: f64, ssr: f64) -> f64 {
    g * g * gamma0 / (g * g + ssr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActuatorRegime {
    /// Budget covers `Σ A²/H²_i`: every loop is deadbeat (`A_c = 0`).
    Unconstrained,
    /// Budget binds; `lambda` is the multiplier of the SNR constraint.
    Constrained { lambda: f64 },
    /// Budget equals `Σ (A² − 1)/H²_i`: every loop sits at its SNR minimizer.
    Boundary,
}

/// `K̃_i(λ')`, the stationary point of the Lagrangian, written to avoid
/// cancellation on either sign of `D = (1 − A²)λ' + H²`.
fn k_tilde(a: f64, h: f64, lambda: f64) -> f64 {
    let d = (1.0 - a * a) * lambda + h * h;
    let q = 4.0 * a * a * h * h * lambda;
    let root = (d * d + q).sqrt();
    if d > 0.0 {
        -2.0 * a * h / (d + root)
    } else {
        (d - root) / (2.0 * a * h * lambda)
    }
}

fn snr_term(a: f64, h: f64, k: f64) -> f64 {
    let ac = a + h * k;
    k * k / (1.0 - ac * ac)
}

/// Products `K̃_i` minimizing the sum cost with a shared actuator factor,
/// given the effective budget `gamma_tilde`.
pub fn identical_actuator_gains(
    hs: &[f64],
    a: f64,
    gamma_tilde: f64,
) -> Result<(Vec<f64>, ActuatorRegime)> {
    if hs.is_empty() {
        return Err(Error::NoPlants);
    }
    if !(a > 1.0) {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: "optimizers assume A > 1; mirror the state to handle A < -1",
        });
    }
    for &h in hs {
        require_channel("h", h)?;
    }
    let unconstrained: f64 = hs.iter().map(|&h| a * a / (h * h)).sum();
    if gamma_tilde >= unconstrained {
        return Ok((
            hs.iter().map(|&h| -a / h).collect(),
            ActuatorRegime::Unconstrained,
        ));
    }
    let floor_sum: f64 = hs.iter().map(|&h| stabilizability_floor(a, h)).sum();
    if gamma_tilde < floor_sum {
        return Err(Error::Infeasible {
            criterion: "identical-actuator",
            required: floor_sum,
            budget: gamma_tilde,
        });
    }
    if gamma_tilde == floor_sum {
        return Ok((
            hs.iter().map(|&h| -(a * a - 1.0) / (a * h)).collect(),
            ActuatorRegime::Boundary,
        ));
    }
    let lambda = solve_decreasing(
        |l| hs.iter().map(|&h| snr_term(a, h, k_tilde(a, h, l))).sum(),
        gamma_tilde,
    )?;
    Ok((
        hs.iter().map(|&h| k_tilde(a, h, lambda)).collect(),
        ActuatorRegime::Constrained { lambda },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdenticalActuatorDesign {
    pub g: f64,
    pub gamma_tilde: f64,
    pub k_tilde: Vec<f64>,
    pub regime: ActuatorRegime,
    pub predicted_costs: Vec<Cost>,
}

impl IdenticalActuatorDesign {
    /// Controller factors `K_i = K̃_i / G`.
    pub fn k(&self) -> Vec<f64> {
        self.k_tilde.iter().map(|k| k / self.g).collect()
    }

    pub fn total_cost(&self) -> Cost {
        self.predicted_costs.iter().copied().sum()
    }
}

pub fn optimize_identical_actuator(
    selected: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
    g_common: f64,
) -> Result<IdenticalActuatorDesign> {
    if !(g_common.is_finite() && g_common > 0.0) {
        return Err(Error::InvalidParameter {
            name: "g_common",
            reason: "shared actuator factor must be positive",
        });
    }
    let a = require_positive_gain(plant)?;
    let ssr = noise.ssr(plant);
    let gamma_tilde = identical_actuator_budget(g_common, noise.gamma0(), ssr);
    let hs: Vec<f64> = selected.iter().map(|&(_, h)| h).collect();
    let (k_tilde, regime) = identical_actuator_gains(&hs, a, gamma_tilde)?;
    let predicted_costs = hs
        .iter()
        .zip(&k_tilde)
        .map(|(&h, &k)| {
            let ac = a + h * k;
            crate::model::steady_state_cost(ac * ac, g_common, noise.sigma_z2(), plant.sigma_w2())
        })
        .collect();
    Ok(IdenticalActuatorDesign {
        g: g_common,
        gamma_tilde,
        k_tilde,
        regime,
        predicted_costs,
    })
}

/// Largest best-channel-first set with `Σ (A² − 1)/H²_i ≤ G²γ₀/(G² + SSR)`.
pub fn select_plants_identical_actuator(
    plants: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
    g_common: f64,
) -> Vec<PlantId> {
    let a = plant.a();
    let budget = identical_actuator_budget(g_common, noise.gamma0(), noise.ssr(plant));
    let sorted = sort_descending(plants);
    longest_prefix(&sorted, budget, |h| stabilizability_floor(a, h))
}

// ---------------------------------------------------------------------------
// Identical controller factors
// ---------------------------------------------------------------------------

/// Magnitudes of `K` below this are rejected as degenerate.
pub const MIN_CONTROLLER_FACTOR: f64 = 1e-12;

/// Actuator factor minimizing one plant's cost for a fixed controller
/// factor `k < 0`.
pub fn identical_controller_gain(a: f64, h: f64, k: f64, ssr: f64) -> f64 {
    let e = 1.0 - a * a + h * h * k * k * ssr;
    let q = 4.0 * a * a * h * h * k * k * ssr;
    let root = (e * e + q).sqrt();
    if e > 0.0 {
        -2.0 * a * h * k * ssr / (e + root)
    } else {
        (e - root) / (2.0 * a * h * k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdenticalControllerDesign {
    pub k: f64,
    pub g: Vec<f64>,
    pub closed_loop: Vec<f64>,
    pub predicted_costs: Vec<f64>,
    pub total_cost: f64,
    /// Largest admissible sum cost, `P0/K²`.
    pub budget: f64,
    pub feasible: bool,
}

pub fn optimize_identical_controller(
    selected: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
    k_common: f64,
) -> Result<IdenticalControllerDesign> {
    if !k_common.is_finite() || k_common >= 0.0 {
        return Err(Error::InvalidParameter {
            name: "k_common",
            reason: "shared controller factor must be negative",
        });
    }
    if k_common.abs() < MIN_CONTROLLER_FACTOR {
        return Err(Error::Degenerate("controller factor vanishes"));
    }
    let a = require_positive_gain(plant)?;
    if selected.is_empty() {
        return Err(Error::NoPlants);
    }
    let ssr = noise.ssr(plant);
    let mut g = Vec::with_capacity(selected.len());
    let mut closed_loop = Vec::with_capacity(selected.len());
    let mut predicted_costs = Vec::with_capacity(selected.len());
    for &(_, h) in selected {
        require_channel("h", h)?;
        let gi = identical_controller_gain(a, h, k_common, ssr);
        let ac = a + h * k_common * gi;
        debug_assert!(ac * ac < 1.0);
        predicted_costs.push(noise.sigma_z2() * (gi * gi + ssr) / (1.0 - ac * ac));
        g.push(gi);
        closed_loop.push(ac);
    }
    let total_cost: f64 = predicted_costs.iter().sum();
    let budget = noise.p0() / (k_common * k_common);
    Ok(IdenticalControllerDesign {
        k: k_common,
        g,
        closed_loop,
        predicted_costs,
        total_cost,
        budget,
        feasible: total_cost <= budget,
    })
}

/// Largest best-channel-first set whose optimal sum cost stays within
/// `P0/K²`.
pub fn select_plants_identical_controller(
    plants: &[(PlantId, f64)],
    plant: &PlantParams,
    noise: &NoisePowers,
    k_common: f64,
) -> Vec<PlantId> {
    let a = plant.a();
    if !(k_common < -MIN_CONTROLLER_FACTOR) || !(a > 1.0) {
        return Vec::new();
    }
    let ssr = noise.ssr(plant);
    let budget = noise.p0() / (k_common * k_common);
    let sorted = sort_descending(plants);
    longest_prefix(&sorted, budget, |h| {
        let gi = identical_controller_gain(a, h, k_common, ssr);
        let ac = a + h * k_common * gi;
        noise.sigma_z2() * (gi * gi + ssr) / (1.0 - ac * ac)
    })
}
