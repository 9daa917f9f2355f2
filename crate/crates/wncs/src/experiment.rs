//! Monte-Carlo experiment engine.
//!
//! Every replica draws from its own addressed stream
//! `(experiment, grid point, replica, plant)`, replicas run in parallel, and
//! results are reduced in replica order. Output is therefore a function of
//! the `ExperimentSpec` alone, whatever the worker count.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use wncs_core::coded::{boundary_second_moment, run_coded_control, CodingScheme, ModemLink};
use wncs_core::fading::{sample_rayleigh_block, substream, FastChannel, SimRng, StreamKey};
use wncs_core::fast::allocate_multi_fast;
use wncs_core::sim::{fast_replica, slow_replica, LoopNoise, SignKnowledge, Window};
use wncs_core::slow::{allocate_multi_slow, optimize_single_slow, select_plants_slow};
use wncs_core::{Cost, CostReport, GainPair, NoisePowers, PlantId, PlantParams, ReplicaCost};

pub const DEFAULT_SEED: u64 = 2019;
pub const DEFAULT_REPLICAS: usize = 1000;
pub const DEFAULT_HORIZON: usize = 500;
pub const DEFAULT_REALIZATIONS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("infeasible experiment: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(#[from] wncs_core::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Trace,
    SingleCompare,
    MultiSlowSweep,
    MultiFastSweep,
    SelectionSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Trace => "trace",
            ExperimentKind::SingleCompare => "single-compare",
            ExperimentKind::MultiSlowSweep => "multi-slow-sweep",
            ExperimentKind::MultiFastSweep => "multi-fast-sweep",
            ExperimentKind::SelectionSweep => "selection-sweep",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// Kind-specific inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    /// State decay under fixed closed-loop parameters. The controller factor
    /// is the single-plant optimum at the first grid power; each `A_c` then
    /// fixes the actuator factor.
    Trace {
        h: f64,
        a_c: Vec<f64>,
        x0: f64,
    },
    /// Coding-free against the four coded schemes on one coefficient `h`.
    SingleCompare {
        h: f64,
    },
    MultiSlow {
        h: Vec<f64>,
    },
    MultiFast {
        sigma_h2: Vec<f64>,
    },
    /// Plants selected for remote control under block Rayleigh draws.
    Selection {
        mean_gain: f64,
        group_sizes: Vec<usize>,
        realizations: usize,
    },
}

impl Recipe {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Recipe::Trace { .. } => ExperimentKind::Trace,
            Recipe::SingleCompare { .. } => ExperimentKind::SingleCompare,
            Recipe::MultiSlow { .. } => ExperimentKind::MultiSlowSweep,
            Recipe::MultiFast { .. } => ExperimentKind::MultiFastSweep,
            Recipe::Selection { .. } => ExperimentKind::SelectionSweep,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub recipe: Recipe,
    pub plant: PlantParams,
    /// Actuator noise power in watts.
    pub sigma_z2: f64,
    /// Transmit-power grid in watts.
    pub powers: Vec<f64>,
    pub horizon: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_owned()));
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.powers.is_empty() {
            return bad("power grid is empty");
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("powers must be positive");
        }
        if self.powers.windows(2).any(|w| w[0] >= w[1]) {
            return bad("power grid must be strictly increasing");
        }
        if !(self.sigma_z2.is_finite() && self.sigma_z2 > 0.0) {
            return bad("sigma_z2 must be positive");
        }
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite() && *x > 0.0);
        match &self.recipe {
            Recipe::Trace { h, a_c, x0 } => {
                if !positive(&[*h]) || a_c.is_empty() || !x0.is_finite() {
                    return bad("trace needs h > 0, at least one A_c and a finite x0");
                }
                if a_c.iter().any(|v| !v.is_finite()) {
                    return bad("A_c values must be finite");
                }
            }
            Recipe::SingleCompare { h } if !positive(&[*h]) => return bad("h must be positive"),
            Recipe::MultiSlow { h } if !positive(h) => {
                return bad("h must be a non-empty list of positive values")
            }
            Recipe::MultiFast { sigma_h2 } if !positive(sigma_h2) => {
                return bad("sigma_h2 must be a non-empty list of positive values")
            }
            Recipe::Selection {
                mean_gain,
                group_sizes,
                realizations,
            } => {
                if !positive(&[*mean_gain]) || *realizations == 0 {
                    return bad("selection needs mean_gain > 0 and at least one realization");
                }
                if group_sizes.is_empty() || group_sizes.contains(&0) {
                    return bad("group sizes must be positive");
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn noise_at(&self, p0: f64) -> Result<NoisePowers> {
        Ok(NoisePowers::new(self.sigma_z2, p0)?)
    }

    fn key(&self, point: usize, replica: usize, plant: usize) -> StreamKey {
        StreamKey {
            experiment: self.recipe.kind().stream(),
            point: point as u64,
            replica: replica as u64,
            plant: plant as u64,
        }
    }

    fn rng(&self, point: usize, replica: usize, plant: usize) -> SimRng {
        substream(self.seed, self.key(point, replica, plant))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    /// Infeasible design or diverged simulation.
    Inf,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Inf => None,
        }
    }

    fn from_cost(c: Cost) -> Cell {
        c.value().map_or(Cell::Inf, Cell::Value)
    }

    fn from_option(v: Option<f64>) -> Cell {
        v.map_or(Cell::Inf, Cell::Value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<Cell>,
    pub stable: Vec<bool>,
}

impl Series {
    fn new(name: impl Into<String>) -> Self {
        Series {
            name: name.into(),
            values: Vec::new(),
            stable: Vec::new(),
        }
    }

    fn push(&mut self, value: Cell, stable: bool) {
        self.values.push(value);
        self.stable.push(stable);
    }

    pub fn column(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.values.iter().map(|c| c.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub seed: u64,
    pub replicas: usize,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub x_label: String,
    pub x: Vec<f64>,
    pub series: Vec<Series>,
    pub meta: Metadata,
}

impl SweepResult {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }
}

pub fn watts_to_dbm(p: f64) -> f64 {
    let dbm = 10.0 * p.log10() + 30.0;
    // Keeps grid labels such as 20 instead of 19.999999999999996.
    (dbm * 1e9).round() / 1e9
}

/// Parallel replica runner with a fixed worker count.
pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `None` uses one worker per core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut b = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(ExperimentError::Invalid(
                    "threads must be at least 1".into(),
                ));
            }
            b = b.num_threads(n);
        }
        Ok(Runner { pool: b.build()? })
    }

    /// `f(0), …, f(n − 1)` in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }

    pub fn run(&self, spec: &ExperimentSpec) -> Result<SweepResult> {
        spec.validate()?;
        match &spec.recipe {
            Recipe::Trace { .. } => run_trace(self, spec),
            Recipe::SingleCompare { .. } => run_single_compare(self, spec),
            Recipe::MultiSlow { .. } | Recipe::MultiFast { .. } => run_multi_sweep(self, spec),
            Recipe::Selection { .. } => run_selection_sweep(self, spec),
        }
    }
}

fn metadata(spec: &ExperimentSpec) -> Metadata {
    Metadata {
        seed: spec.seed,
        replicas: spec.replicas,
        provenance: format!(
            "wncs {} {}",
            env!("CARGO_PKG_VERSION"),
            spec.recipe.kind().name()
        ),
    }
}

fn window(spec: &ExperimentSpec) -> Result<Window> {
    Ok(Window::new(spec.horizon, 0)?)
}

fn replica_mean(reps: &[ReplicaCost], horizon: usize) -> Result<Cell> {
    let report = CostReport::from_replicas(&[(PlantId(0), reps)], horizon)?;
    Ok(Cell::from_cost(report.j_t))
}

fn ac_label(a_c: f64) -> String {
    format!("{a_c}")
}

/// Per-`t` state of the first replica and replica-averaged running cost
/// `J_t = (1/t) Σ_{s=1}^{t} x(s)²` for each `A_c`.
pub fn run_trace(runner: &Runner, spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let Recipe::Trace { h, a_c, x0 } = &spec.recipe else {
        return Err(ExperimentError::Invalid("not a trace recipe".into()));
    };
    let (h, x0) = (*h, *x0);
    let a = spec.plant.a();
    let noise = spec.noise_at(spec.powers[0])?;
    let design = optimize_single_slow(&spec.plant, &noise, h).map_err(infeasible)?;
    let Some(opt) = design.gains.pair() else {
        return Err(ExperimentError::Infeasible(
            "the budget sits on the stabilizability boundary; no finite controller factor".into(),
        ));
    };
    let loop_noise = LoopNoise::from_model(&spec.plant, &noise);
    let t_max = spec.horizon;
    let w = window(spec)?;
    let mut series = Vec::new();
    for (ci, &target) in a_c.iter().enumerate() {
        let gains = GainPair::new(opt.k, (target - a) / (h * opt.k));
        let runs: Vec<Vec<f64>> = runner.map(spec.replicas, |r| {
            let mut rng = spec.rng(ci, r, 0);
            let mut states = Vec::with_capacity(t_max);
            slow_replica(
                a,
                &gains,
                h,
                &loop_noise,
                x0,
                w,
                &mut rng,
                Some(&mut states),
            );
            states
        });
        let stable = target.abs() < 1.0;
        let mut xs = Series::new(format!("x_ac{}", ac_label(target)));
        let mut js = Series::new(format!("j_ac{}", ac_label(target)));
        let mut sums = vec![0.0; t_max];
        let mut alive = t_max;
        for states in &runs {
            // A diverged replica stops one state past the guard.
            let usable = if states.len() < t_max || states.last().is_some_and(|x| !within_guard(*x))
            {
                states.len().saturating_sub(1)
            } else {
                t_max
            };
            alive = alive.min(usable);
            for (t, x) in states.iter().take(usable).enumerate() {
                sums[t] += x * x;
            }
        }
        let first = &runs[0];
        let mut running = 0.0;
        for (t, sum) in sums.iter().enumerate() {
            let x = first.get(t).copied().filter(|x| within_guard(*x));
            xs.push(Cell::from_option(x), stable);
            running += sum / spec.replicas as f64;
            let j = (t < alive).then(|| running / (t + 1) as f64);
            js.push(Cell::from_option(j), stable);
        }
        series.push(xs);
        series.push(js);
    }
    Ok(SweepResult {
        x_label: "t".into(),
        x: (1..=t_max).map(|t| t as f64).collect(),
        series,
        meta: metadata(spec),
    })
}

fn within_guard(x: f64) -> bool {
    x.is_finite() && x.abs() <= wncs_core::model::DIVERGENCE_LIMIT
}

fn infeasible(e: wncs_core::Error) -> ExperimentError {
    match e {
        wncs_core::Error::NotStabilizable { .. }
        | wncs_core::Error::Infeasible { .. }
        | wncs_core::Error::NotFastStabilizable { .. } => {
            ExperimentError::Infeasible(e.to_string())
        }
        other => ExperimentError::Core(other),
    }
}

fn is_infeasibility(e: &wncs_core::Error) -> bool {
    matches!(
        e,
        wncs_core::Error::NotStabilizable { .. }
            | wncs_core::Error::Infeasible { .. }
            | wncs_core::Error::NotFastStabilizable { .. }
    )
}

/// Coding-free (optimal single-plant gains) against every coded scheme, by
/// simulated `J_T` from `x(0) = 0`.
pub fn run_single_compare(runner: &Runner, spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let Recipe::SingleCompare { h } = spec.recipe else {
        return Err(ExperimentError::Invalid("not a compare recipe".into()));
    };
    let a = spec.plant.a();
    let w = window(spec)?;
    let schemes = CodingScheme::all();
    let mut free = Series::new("coding_free");
    let mut free_pred = Series::new("coding_free_predicted");
    let mut coded: Vec<Series> = schemes.iter().map(|s| Series::new(s.label())).collect();
    for (pi, &p0) in spec.powers.iter().enumerate() {
        let noise = spec.noise_at(p0)?;
        let loop_noise = LoopNoise::from_model(&spec.plant, &noise);
        match optimize_single_slow(&spec.plant, &noise, h) {
            Ok(d) => {
                free_pred.push(Cell::from_cost(d.cost), d.cost.is_bounded());
                match d.gains.pair() {
                    Some(g) => {
                        let reps = runner.map(spec.replicas, |r| {
                            let mut rng = spec.rng(pi, r, 0);
                            slow_replica(a, &g, h, &loop_noise, 0.0, w, &mut rng, None)
                        });
                        let cell = replica_mean(&reps, spec.horizon)?;
                        free.push(cell, cell != Cell::Inf);
                    }
                    None => free.push(Cell::Inf, false),
                }
            }
            Err(e) if is_infeasibility(&e) => {
                free_pred.push(Cell::Inf, false);
                free.push(Cell::Inf, false);
            }
            Err(e) => return Err(e.into()),
        }
        for (si, scheme) in schemes.iter().enumerate() {
            let link = ModemLink::new(*scheme, h, p0, spec.sigma_z2)?;
            let outcomes = runner.map(spec.replicas, |r| {
                let mut rng = spec.rng(pi, r, si + 1);
                let mut l = link.clone();
                run_coded_control(&spec.plant, &loop_noise, &mut l, 0.0, w, &mut rng)
            });
            let outcomes = outcomes
                .into_iter()
                .collect::<wncs_core::Result<Vec<_>>>()?;
            let reps: Vec<ReplicaCost> = outcomes.iter().map(|o| o.cost).collect();
            let epochs: usize = outcomes.iter().map(|o| o.epochs).sum();
            let delivered: usize = outcomes.iter().map(|o| o.delivered).sum();
            let p_hat = delivered as f64 / epochs as f64;
            let contractive =
                boundary_second_moment(a, spec.plant.sigma_w2(), scheme.d(), p_hat).is_some();
            let cell = replica_mean(&reps, spec.horizon)?;
            coded[si].push(cell, contractive && cell != Cell::Inf);
        }
    }
    let mut series = vec![free, free_pred];
    series.extend(coded);
    Ok(SweepResult {
        x_label: "p0_dbm".into(),
        x: spec.powers.iter().map(|&p| watts_to_dbm(p)).collect(),
        series,
        meta: metadata(spec),
    })
}

/// Per-plant SNR shares, gains (absent when unscheduled) and predicted costs.
type Designed = (Vec<f64>, Vec<Option<GainPair>>, Vec<Cost>);

#[derive(Debug, Clone, Copy)]
enum Regime {
    Slow,
    Fast,
}

/// Per plant `i`: allocated power `p_i` (W), `k_i`, `g_i`, predicted and
/// simulated cost; plus predicted and simulated totals. Grid points where
/// the joint design is infeasible are `INF` throughout.
pub fn run_multi_sweep(runner: &Runner, spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let (regime, coeffs) = match &spec.recipe {
        Recipe::MultiSlow { h } => (Regime::Slow, h.clone()),
        Recipe::MultiFast { sigma_h2 } => (Regime::Fast, sigma_h2.clone()),
        _ => return Err(ExperimentError::Invalid("not a multi-plant recipe".into())),
    };
    let a = spec.plant.a();
    let w = window(spec)?;
    let m = coeffs.len();
    let plants: Vec<(PlantId, f64)> = coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| (PlantId(i as u32), c))
        .collect();
    let names = ["p", "k", "g", "j_pred", "j_sim"];
    let mut cols: Vec<Vec<Series>> = (0..m)
        .map(|i| {
            names
                .iter()
                .map(|n| Series::new(format!("{n}_{}", i + 1)))
                .collect()
        })
        .collect();
    let mut total_pred = Series::new("total_pred");
    let mut total_sim = Series::new("total_sim");
    let mut any_feasible = false;
    for (pi, &p0) in spec.powers.iter().enumerate() {
        let noise = spec.noise_at(p0)?;
        let loop_noise = LoopNoise::from_model(&spec.plant, &noise);
        let designed: Option<Designed> = match regime {
            Regime::Slow => match allocate_multi_slow(&plants, &spec.plant, &noise) {
                Ok((alloc, d)) => Some((
                    alloc.gamma,
                    d.gains().map(|g| g.pair()).collect(),
                    d.predicted_costs().collect(),
                )),
                Err(e) if is_infeasibility(&e) => None,
                Err(e) => return Err(e.into()),
            },
            Regime::Fast => match allocate_multi_fast(&plants, &spec.plant, &noise) {
                Ok((alloc, d)) => Some((
                    alloc.gamma,
                    d.per_plant.iter().map(|p| p.gains).collect(),
                    d.predicted_costs().collect(),
                )),
                Err(e) if is_infeasibility(&e) => None,
                Err(e) => return Err(e.into()),
            },
        };
        let Some((gamma, gains, predicted)) = designed else {
            for plant_cols in cols.iter_mut() {
                for s in plant_cols.iter_mut() {
                    s.push(Cell::Inf, false);
                }
            }
            total_pred.push(Cell::Inf, false);
            total_sim.push(Cell::Inf, false);
            continue;
        };
        any_feasible = true;
        let mut sims = Vec::with_capacity(m);
        for i in 0..m {
            let stable = predicted[i].is_bounded();
            let c = &mut cols[i];
            c[0].push(Cell::Value(gamma[i] * spec.sigma_z2), true);
            c[1].push(Cell::from_option(gains[i].map(|g| g.k)), stable);
            c[2].push(Cell::from_option(gains[i].map(|g| g.g)), stable);
            c[3].push(Cell::from_cost(predicted[i]), stable);
            let sim = match gains[i] {
                Some(g) => {
                    let coeff = coeffs[i];
                    let reps = runner.map(spec.replicas, |r| {
                        let mut rng = spec.rng(pi, r, i);
                        match regime {
                            Regime::Slow => {
                                slow_replica(a, &g, coeff, &loop_noise, 0.0, w, &mut rng, None)
                            }
                            Regime::Fast => {
                                // Validated positive above.
                                let ch = FastChannel::new(coeff).expect("positive variance");
                                fast_replica(
                                    a,
                                    &g,
                                    &ch,
                                    SignKnowledge::Partial,
                                    &loop_noise,
                                    0.0,
                                    w,
                                    &mut rng,
                                    None,
                                )
                            }
                        }
                    });
                    replica_mean(&reps, spec.horizon)?
                }
                None => Cell::Inf,
            };
            c[4].push(sim, stable && sim != Cell::Inf);
            sims.push(sim);
        }
        let tp: Cost = predicted.iter().copied().sum();
        total_pred.push(Cell::from_cost(tp), tp.is_bounded());
        let ts: Option<f64> = sims.iter().map(|c| c.value()).sum();
        total_sim.push(Cell::from_option(ts), ts.is_some() && tp.is_bounded());
    }
    if !any_feasible {
        return Err(ExperimentError::Infeasible(
            "no grid power admits a joint design for all plants".into(),
        ));
    }
    let mut series: Vec<Series> = cols.into_iter().flatten().collect();
    series.push(total_pred);
    series.push(total_sim);
    Ok(SweepResult {
        x_label: "p0_dbm".into(),
        x: spec.powers.iter().map(|&p| watts_to_dbm(p)).collect(),
        series,
        meta: metadata(spec),
    })
}

/// Average number of plants selected for remote control, per group size.
/// Each realization's draws are shared by all grid powers.
pub fn run_selection_sweep(runner: &Runner, spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let Recipe::Selection {
        mean_gain,
        group_sizes,
        realizations,
    } = &spec.recipe
    else {
        return Err(ExperimentError::Invalid("not a selection recipe".into()));
    };
    let noises = spec
        .powers
        .iter()
        .map(|&p| spec.noise_at(p))
        .collect::<Result<Vec<_>>>()?;
    let mut series = Vec::new();
    for (gi, &m0) in group_sizes.iter().enumerate() {
        let counts: Vec<Vec<usize>> = runner.map(*realizations, |r| {
            let mut rng = spec.rng(gi, r, 0);
            let plants: Vec<(PlantId, f64)> = (0..m0)
                .map(|i| {
                    let ch =
                        sample_rayleigh_block(*mean_gain, &mut rng).expect("validated mean gain");
                    (PlantId(i as u32), ch.h())
                })
                .collect();
            noises
                .iter()
                .map(|n| select_plants_slow(&plants, &spec.plant, n).len())
                .collect()
        });
        let mut s = Series::new(format!("avg_m_m0_{m0}"));
        for pi in 0..spec.powers.len() {
            let total: usize = counts.iter().map(|c| c[pi]).sum();
            s.push(Cell::Value(total as f64 / *realizations as f64), true);
        }
        series.push(s);
    }
    Ok(SweepResult {
        x_label: "p0_dbm".into(),
        x: spec.powers.iter().map(|&p| watts_to_dbm(p)).collect(),
        series,
        meta: metadata(spec),
    })
}
