//! Closed-form designs checked against brute-force oracles on the reference
//! instance: `A = 1.5`, `σ²_w = 0.1`, `σ²_z = −40 dBm`, `P₀ = 20 dBm`.

use std::f64::consts::PI;

use wncs_core::coded::{qam_modulate, BchCode};
use wncs_core::fast::{
    allocate_multi_fast, fast_floor, optimize_single_fast, stabilizable_fast, ETA,
};
use wncs_core::slow::{allocate_multi_slow, optimize_single_slow, stabilizability_floor};
use wncs_core::{NoisePowers, PlantId, PlantParams};

const A: f64 = 1.5;
const SIGMA_W2: f64 = 0.1;
const SIGMA_Z2: f64 = 1e-7;
const P0: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn reference() -> (PlantParams, NoisePowers) {
    (
        PlantParams::new(A, SIGMA_W2).expect("valid plant"),
        NoisePowers::new(SIGMA_Z2, P0).expect("valid noise"),
    )
}

fn dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Minimum over a log grid of `(−|K|, G)` of the steady-state cost, subject
/// to `K²·J ≤ P₀`. `ac2(u)` is the closed-loop second moment for `u = GK`.
fn grid_minimum(n: usize, ac2: impl Fn(f64) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..n {
        let k = -10f64.powf(-4.0 + 5.5 * i as f64 / (n - 1) as f64);
        for j in 0..n {
            let g = 10f64.powf(-1.0 + 6.0 * j as f64 / (n - 1) as f64);
            let m = 1.0 - ac2(g * k);
            if m <= 0.0 {
                continue;
            }
            let cost = (g * g * SIGMA_Z2 + SIGMA_W2) / m;
            if k * k * cost <= P0 && cost < best {
                best = cost;
            }
        }
    }
    best
}

fn against_grid(name: &'static str, closed: Option<f64>, grid: f64) -> Check {
    match closed {
        Some(j) => {
            let ok = grid >= j * (1.0 - 1e-9) && grid / j - 1.0 < 5e-3;
            check(name, ok, format!("closed form {j:.7}, grid {grid:.7}"))
        }
        None => check(name, false, "closed form reported unbounded".into()),
    }
}

fn slow_single() -> Check {
    let (p, n) = reference();
    let h = 0.01;
    let closed = optimize_single_slow(&p, &n, h)
        .ok()
        .and_then(|d| d.cost.value());
    let grid = grid_minimum(2000, |u| (A + u * h).powi(2));
    against_grid("slow single-plant design vs 2000x2000 grid", closed, grid)
}

fn fast_single() -> Check {
    let (p, n) = reference();
    let s2: f64 = 1e-4;
    let closed = optimize_single_fast(&p, &n, s2)
        .ok()
        .and_then(|d| d.cost.value());
    let c = (2.0 * s2 / PI).sqrt();
    let grid = grid_minimum(2000, |u| s2 * u * u + 2.0 * c * A * u + A * A);
    against_grid("fast single-plant design vs 2000x2000 grid", closed, grid)
}

/// Best total over a `points`-step sweep of the split `γ₁ + γ₂ = γ₀`, with
/// each share's single-plant cost from `cost(i, γ)`.
fn best_split(lo: f64, hi: f64, points: usize, cost: impl Fn(usize, f64) -> Option<f64>) -> f64 {
    let gamma0 = P0 / SIGMA_Z2;
    (1..points)
        .filter_map(|i| {
            let g1 = lo + (hi - lo) * i as f64 / points as f64;
            Some(cost(0, g1)? + cost(1, gamma0 - g1)?)
        })
        .fold(f64::INFINITY, f64::min)
}

fn against_sweep(name: &'static str, closed: Option<f64>, sweep: f64) -> Check {
    match closed {
        Some(j) => {
            let ok = sweep >= j * (1.0 - 1e-12) && sweep / j - 1.0 < 1e-3;
            check(name, ok, format!("closed form {j:.7}, sweep {sweep:.7}"))
        }
        None => check(name, false, "allocation failed".into()),
    }
}

fn slow_multi() -> Check {
    let (p, n) = reference();
    let hs = [0.01, 0.02];
    let sel = [(PlantId(0), hs[0]), (PlantId(1), hs[1])];
    let closed = allocate_multi_slow(&sel, &p, &n)
        .ok()
        .and_then(|(_, d)| d.total_cost().value());
    // Share γ on coefficient h: A_c = A/(1 + h²γ), cost σ²_w/(1 − A·A_c).
    let cost = |i: usize, g: f64| {
        let ac = A / (1.0 + hs[i] * hs[i] * g);
        let m = 1.0 - A * ac;
        (m > 0.0).then(|| SIGMA_W2 / m)
    };
    let gamma0 = P0 / SIGMA_Z2;
    let sweep = best_split(
        stabilizability_floor(A, hs[0]),
        gamma0 - stabilizability_floor(A, hs[1]),
        10_000,
        cost,
    );
    against_sweep(
        "slow two-plant allocation vs 1e4-point split sweep",
        closed,
        sweep,
    )
}

fn fast_multi() -> Check {
    let (p, n) = reference();
    let s2 = [1e-4, 4e-4];
    let sel = [(PlantId(0), s2[0]), (PlantId(1), s2[1])];
    let closed = allocate_multi_fast(&sel, &p, &n)
        .ok()
        .and_then(|(_, d)| d.total_cost().value());
    // With the budget active, K² = (P(1 − E) − u²σ²_z)/σ²_w, so the cost
    // P/K² becomes γσ²_w/((1 − E)γ − u²); minimised over u = GK by golden
    // section at fixed share γ.
    let cost = |i: usize, gamma: f64| {
        let c = (2.0 * s2[i] / PI).sqrt();
        let j = |u: f64| {
            let e = s2[i] * u * u + 2.0 * c * A * u + A * A;
            let q = (1.0 - e) * gamma - u * u;
            if q > 0.0 {
                gamma * SIGMA_W2 / q
            } else {
                f64::INFINITY
            }
        };
        let (mut lo, mut hi) = (-2.0 * A / c, 0.0);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if j(m1) < j(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let v = j(0.5 * (lo + hi));
        v.is_finite().then_some(v)
    };
    let gamma0 = P0 / SIGMA_Z2;
    let sweep = best_split(
        fast_floor(A, s2[0]),
        gamma0 - fast_floor(A, s2[1]),
        10_000,
        cost,
    );
    against_sweep(
        "fast two-plant allocation vs 1e4-point split sweep",
        closed,
        sweep,
    )
}

fn fast_edge() -> Check {
    let edge = 1.0 / (1.0 - 2.0 / PI).sqrt();
    let below = PlantParams::new(edge - 1e-6, SIGMA_W2).expect("valid");
    let above = PlantParams::new(edge + 1e-6, SIGMA_W2).expect("valid");
    let ok = stabilizable_fast(&below)
        && !stabilizable_fast(&above)
        && (ETA - (1.0 - 2.0 / PI)).abs() < 1e-15;
    check(
        "partial-CSI stabilizability edge",
        ok,
        format!("|A| = {edge:.6}"),
    )
}

/// Lowest budget in dBm for which `feasible` holds, by bisection.
fn threshold_dbm(feasible: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (-30.0, 60.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if feasible(10f64.powf((mid - 30.0) / 10.0)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn slow_threshold() -> Check {
    let p = PlantParams::new(A, SIGMA_W2).expect("valid");
    let sel = [(PlantId(0), 0.01), (PlantId(1), 0.02)];
    let found = threshold_dbm(|p0| {
        NoisePowers::new(SIGMA_Z2, p0).is_ok_and(|n| allocate_multi_slow(&sel, &p, &n).is_ok())
    });
    let direct = dbm(SIGMA_Z2 * (A * A - 1.0) * (1.0 / 0.01f64.powi(2) + 1.0 / 0.02f64.powi(2)));
    check(
        "slow two-plant feasibility threshold (H = 0.01, 0.02)",
        (found - direct).abs() < 1e-3 && (direct - 1.94).abs() < 0.01,
        format!("{found:.2} dBm"),
    )
}

fn fast_threshold() -> Check {
    let p = PlantParams::new(A, SIGMA_W2).expect("valid");
    let sel = [(PlantId(0), 1e-4), (PlantId(1), 4e-4)];
    let found = threshold_dbm(|p0| {
        NoisePowers::new(SIGMA_Z2, p0).is_ok_and(|n| allocate_multi_fast(&sel, &p, &n).is_ok())
    });
    let margin = 1.0 - (1.0 - 2.0 / PI) * A * A;
    let direct = dbm(SIGMA_Z2 * (A * A - 1.0) / margin * (1.0 / 1e-4 + 1.0 / 4e-4));
    check(
        "fast two-plant feasibility threshold (sigma_h2 = 1e-4, 4e-4)",
        (found - direct).abs() < 1e-3 && (direct - 9.33).abs() < 0.01,
        format!("{found:.2} dBm"),
    )
}

fn single_errors(code: &BchCode) -> bool {
    let (n, k) = (code.n(), code.k());
    (0..1u32 << k).all(|m| {
        let c = code.encode_word(m);
        (0..n).all(|pos| code.decode_word(c ^ (1 << pos)) == m)
    })
}

fn codec() -> Check {
    let ok = single_errors(&BchCode::HAMMING_7_4) && single_errors(&BchCode::HAMMING_15_11);
    check(
        "single-error correction, all codewords and positions",
        ok,
        "(7,4): 16x7, (15,11): 2048x15".into(),
    )
}

fn gray(l: u32) -> bool {
    let pts: Vec<_> = (0..1u32 << l)
        .map(|w| {
            let bits: Vec<bool> = (0..l).map(|i| (w >> (l - 1 - i)) & 1 == 1).collect();
            (qam_modulate(&bits, l, 1.0)[0], w)
        })
        .collect();
    let min_d = pts
        .iter()
        .flat_map(|(p, _)| pts.iter().map(move |(q, _)| (*q - *p).norm()))
        .filter(|d| *d > 1e-12)
        .fold(f64::INFINITY, f64::min);
    pts.iter().all(|(p, wp)| {
        pts.iter()
            .filter(|(q, _)| ((*q - *p).norm() - min_d).abs() < 1e-9)
            .all(|(_, wq)| (wp ^ wq).count_ones() == 1)
    })
}

fn gray_check() -> Check {
    check(
        "Gray adjacency, 16-QAM and 256-QAM",
        gray(4) && gray(8),
        "all nearest-neighbour pairs".into(),
    )
}

pub fn run_all() -> Vec<Check> {
    vec![
        slow_single(),
        slow_multi(),
        fast_single(),
        fast_multi(),
        fast_edge(),
        slow_threshold(),
        fast_threshold(),
        codec(),
        gray_check(),
    ]
}
