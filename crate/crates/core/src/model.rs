//! Plant model, design variables and cost accounting.

use alloc::vec::Vec;
use core::fmt;
use core::iter::Sum;
use core::ops::Add;

use crate::error::{Error, Result};

/// States whose magnitude exceeds this are treated as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlantId(pub u32);

impl fmt::Display for PlantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Scalar plant `x(t+1) = A·x(t) + u(t) + w(t)` with `w ~ N(0, sigma_w2)`.
///
/// Only open-loop unstable plants (`|A| > 1`) are representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    a: f64,
    sigma_w2: f64,
}

impl PlantParams {
    pub fn new(a: f64, sigma_w2: f64) -> Result<Self> {
        if !a.is_finite() || a.abs() <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "open-loop gain must satisfy |a| > 1",
            });
        }
        if !(sigma_w2.is_finite() && sigma_w2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_w2",
                reason: "disturbance variance must be positive",
            });
        }
        Ok(Self { a, sigma_w2 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }
}

/// Actuator noise variance and transmit power limit, both in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePowers {
    sigma_z2: f64,
    p0: f64,
    gamma0: f64,
}

impl NoisePowers {
    pub fn new(sigma_z2: f64, p0: f64) -> Result<Self> {
        if !(sigma_z2.is_finite() && sigma_z2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_z2",
                reason: "noise variance must be positive",
            });
        }
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p0",
                reason: "transmit power limit must be positive",
            });
        }
        Ok(Self {
            sigma_z2,
            p0,
            gamma0: p0 / sigma_z2,
        })
    }

    pub fn sigma_z2(&self) -> f64 {
        self.sigma_z2
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// SNR budget `P0 / sigma_z2`.
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Disturbance-to-noise ratio `sigma_w2 / sigma_z2`.
    pub fn ssr(&self, plant: &PlantParams) -> f64 {
        plant.sigma_w2 / self.sigma_z2
    }
}

/// Controller factor `k` and actuator factor `g` of one analog loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPair {
    pub k: f64,
    pub g: f64,
}

impl GainPair {
    pub fn new(k: f64, g: f64) -> Self {
        Self { k, g }
    }

    /// `A + G·H·K` for a slow-fading coefficient `h`.
    pub fn closed_loop(&self, a: f64, h: f64) -> f64 {
        a + self.g * h * self.k
    }

    /// Controller-side SNR `K²(G² + SSR)/(1 − A_c²)`; `None` when the loop
    /// is not mean-square stable.
    pub fn slow_snr(&self, plant: &PlantParams, noise: &NoisePowers, h: f64) -> Option<f64> {
        let ac = self.closed_loop(plant.a(), h);
        let margin = 1.0 - ac * ac;
        (margin > 0.0).then(|| self.k * self.k * (self.g * self.g + noise.ssr(plant)) / margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub x: f64,
    pub t: u64,
}

impl PlantState {
    pub fn new(x: f64) -> Self {
        Self { x, t: 0 }
    }
}

pub fn step_plant(state: PlantState, u: f64, w: f64, plant: &PlantParams) -> PlantState {
    PlantState {
        x: plant.a * state.x + u + w,
        t: state.t + 1,
    }
}

/// A long-run cost, or the tag for a loop that is provably not mean-square
/// stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Bounded(f64),
    Unbounded,
}

impl Cost {
    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Bounded(v) => Some(v),
            Cost::Unbounded => None,
        }
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, Cost::Bounded(_))
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Bounded(a), Cost::Bounded(b)) => Cost::Bounded(a + b),
            _ => Cost::Unbounded,
        }
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::Bounded(0.0), Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Bounded(v) => write!(f, "{v}"),
            Cost::Unbounded => f.write_str("INF"),
        }
    }
}

/// Steady-state second moment `(G²σ²_z + σ²_w)/(1 − E[A_c²])`.
pub fn steady_state_cost(ac2: f64, g: f64, sigma_z2: f64, sigma_w2: f64) -> Cost {
    if ac2 < 1.0 {
        Cost::Bounded((g * g * sigma_z2 + sigma_w2) / (1.0 - ac2))
    } else {
        Cost::Unbounded
    }
}

/// Long-run cost of a slow-fading loop with fixed coefficient `h`.
pub fn predicted_cost_slow(
    plant: &PlantParams,
    noise: &NoisePowers,
    gains: &GainPair,
    h: f64,
) -> Cost {
    let ac = gains.closed_loop(plant.a(), h);
    steady_state_cost(ac * ac, gains.g, noise.sigma_z2(), plant.sigma_w2())
}

/// Sum of `x(t)²` over one replica's costed window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplicaCost {
    pub sum_sq: f64,
    pub steps: usize,
    pub diverged: bool,
}

impl ReplicaCost {
    pub fn push(&mut self, x: f64) {
        self.sum_sq += x * x;
        self.steps += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantCost {
    pub id: PlantId,
    pub cost: Cost,
    pub stable: bool,
}

/// Finite-horizon empirical cost, optionally paired with the closed-form
/// long-run prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub j_t: Cost,
    pub j_ave_predicted: Option<Cost>,
    pub per_plant: Vec<PlantCost>,
    pub horizon: usize,
}

impl CostReport {
    /// Averages per-replica sums into per-plant costs; plants are summed in
    /// the given order. A plant with any diverged replica is reported
    /// unbounded and unstable.
    pub fn from_replicas(plants: &[(PlantId, &[ReplicaCost])], horizon: usize) -> Result<Self> {
        if plants.is_empty() {
            return Err(Error::NoPlants);
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be at least 1",
            });
        }
        let mut per_plant = Vec::with_capacity(plants.len());
        for &(id, replicas) in plants {
            if replicas.is_empty() {
                return Err(Error::InvalidParameter {
                    name: "replicas",
                    reason: "each plant needs at least one replica",
                });
            }
            let diverged = replicas.iter().any(|r| r.diverged);
            let cost = if diverged {
                Cost::Unbounded
            } else {
                let total: f64 = replicas.iter().map(|r| r.sum_sq).sum();
                Cost::Bounded(total / (replicas.len() as f64 * horizon as f64))
            };
            per_plant.push(PlantCost {
                id,
                cost,
                stable: !diverged,
            });
        }
        let j_t = per_plant.iter().map(|p| p.cost).sum();
        Ok(Self {
            j_t,
            j_ave_predicted: None,
            per_plant,
            horizon,
        })
    }

    pub fn with_prediction(mut self, predicted: Cost) -> Self {
        self.j_ave_predicted = Some(predicted);
        self
    }
}

/// Stored replicas of one plant; `replicas[r][t - 1]` is `x(t)`.
#[derive(Debug, Clone, Copy)]
pub struct PlantTrajectories<'a> {
    pub id: PlantId,
    pub replicas: &'a [Vec<f64>],
}

/// `J_T = (1/T) Σ_{t=b+1}^{b+T} Σ_i x_i(t)²`, averaged over replicas.
pub fn empirical_cost(
    trajectories: &[PlantTrajectories<'_>],
    horizon: usize,
    burn_in: usize,
) -> Result<CostReport> {
    if trajectories.is_empty() {
        return Err(Error::NoPlants);
    }
    let needed = burn_in + horizon;
    let mut sums: Vec<(PlantId, Vec<ReplicaCost>)> = Vec::with_capacity(trajectories.len());
    for plant in trajectories {
        let mut replicas = Vec::with_capacity(plant.replicas.len());
        for states in plant.replicas {
            if states.len() < needed {
                return Err(Error::ShortTrajectory {
                    needed,
                    got: states.len(),
                });
            }
            let mut acc = ReplicaCost::default();
            for &x in &states[burn_in..needed] {
                if !x.is_finite() || x.abs() > DIVERGENCE_LIMIT {
                    acc.diverged = true;
                }
                acc.push(x);
            }
            replicas.push(acc);
        }
        sums.push((plant.id, replicas));
    }
    let views: Vec<(PlantId, &[ReplicaCost])> =
        sums.iter().map(|(id, r)| (*id, r.as_slice())).collect();
    CostReport::from_replicas(&views, horizon)
}
