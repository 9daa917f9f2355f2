//! Brute-force and Monte-Carlo checks of the fast-fading designs.

use proptest::prelude::*;
use rand_core::RngCore;
use wncs_core::fading::{sample_fast_symbol, substream, FastChannel, StreamKey};
use wncs_core::fast::{
    allocate_multi_fast, expected_ac2, expected_ac2_no_csi, fast_floor, optimize_single_fast,
    optimize_single_fast_at, select_plants_fast, stabilizable_fast, ETA,
};
use wncs_core::model::DIVERGENCE_LIMIT;
use wncs_core::sim::{fast_replica, LoopNoise, SignKnowledge, Window};
use wncs_core::{GainPair, NoisePowers, PlantId, PlantParams};

const SIGMA_W2: f64 = 0.1;
const SIGMA_Z2: f64 = 1e-7;

fn reference() -> (PlantParams, NoisePowers) {
    (
        PlantParams::new(1.5, SIGMA_W2).unwrap(),
        NoisePowers::new(SIGMA_Z2, 0.1).unwrap(),
    )
}

/// `E[(A + U|h|)²]` by sampling.
fn sampled_ac2(a: f64, u: f64, sigma_h2: f64, n: usize, seed: u64) -> f64 {
    let ch = FastChannel::new(sigma_h2).unwrap();
    let mut rng = substream(seed, StreamKey::default());
    (0..n)
        .map(|_| {
            let s = sample_fast_symbol(&ch, &mut rng);
            let ac = a + u * s.sign * s.h;
            ac * ac
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn second_moment_formula_by_sampling() {
    let (p, _) = reference();
    for (i, &u) in [-250.0, -118.5, -50.0, 0.0, 40.0].iter().enumerate() {
        let mc = sampled_ac2(1.5, u, 1e-4, 1_000_000, i as u64);
        let f = expected_ac2(&p, 1e-4, u);
        assert!((mc / f - 1.0).abs() < 5e-3, "u={u}: {mc} vs {f}");
    }
}

/// Steady-state cost and SNR of a fast-fading pair, from the definitions.
fn fast_cost_and_snr(a: f64, s2: f64, k: f64, g: f64, ssr: f64) -> Option<(f64, f64)> {
    let c = (2.0 * s2 / std::f64::consts::PI).sqrt();
    let u = g * k;
    let e = s2 * u * u + 2.0 * c * a * u + a * a;
    let m = 1.0 - e;
    (m > 0.0).then(|| ((g * g * SIGMA_Z2 + SIGMA_W2) / m, k * k * (g * g + ssr) / m))
}

#[test]
fn single_design_against_grid() {
    let (p, n) = reference();
    let d = optimize_single_fast(&p, &n, 1e-4).unwrap();
    let j = d.cost.value().unwrap();
    let ssr = n.ssr(&p);
    let size = 2000;
    let mut best = f64::INFINITY;
    for i in 0..size {
        let k = -10f64.powf(-4.0 + 5.5 * i as f64 / (size - 1) as f64);
        for jj in 0..size {
            let g = 10f64.powf(-1.0 + 6.0 * jj as f64 / (size - 1) as f64);
            if let Some((c, snr)) = fast_cost_and_snr(1.5, 1e-4, k, g, ssr) {
                if snr <= n.gamma0() && c < best {
                    best = c;
                }
            }
        }
    }
    assert!(best >= j * (1.0 - 1e-9), "{best} < {j}");
    assert!(best / j - 1.0 < 5e-3, "{best} vs {j}");
    assert!((j - 0.5944866).abs() < 1e-6);
}

#[test]
fn joint_design_against_split_sweep() {
    let (p, n) = reference();
    let sel = [(PlantId(0), 4e-4), (PlantId(1), 1e-4)];
    let (alloc, design) = allocate_multi_fast(&sel, &p, &n).unwrap();
    let closed = design.total_cost().value().unwrap();
    let ssr = n.ssr(&p);
    let g0 = n.gamma0();
    let (f1, f2) = (fast_floor(1.5, 4e-4), fast_floor(1.5, 1e-4));
    let mut best = f64::INFINITY;
    let points = 10_000;
    for i in 1..points {
        let g1 = f1 + (g0 - f2 - f1) * i as f64 / points as f64;
        let j1 = optimize_single_fast_at(&p, ssr, 4e-4, g1)
            .unwrap()
            .cost
            .value();
        let j2 = optimize_single_fast_at(&p, ssr, 1e-4, g0 - g1)
            .unwrap()
            .cost
            .value();
        if let (Some(a), Some(b)) = (j1, j2) {
            best = best.min(a + b);
        }
    }
    assert!(best >= closed * (1.0 - 1e-12), "{best} < {closed}");
    assert!(best / closed - 1.0 < 1e-3, "{best} vs {closed}");
    assert!(alloc.gamma[0] < alloc.gamma[1]);
}

#[test]
fn feasibility_threshold_of_two_plant_instance() {
    let sum = fast_floor(1.5, 4e-4) + fast_floor(1.5, 1e-4);
    // Budget in dBm at which the pair just fits with σ²_z = −40 dBm.
    let dbm = 10.0 * (sum * SIGMA_Z2).log10() + 30.0;
    assert!((dbm - 9.33).abs() < 0.01, "{dbm}");
}

#[test]
fn moment_recursion_under_partial_csi() {
    let (p, n) = reference();
    let d = optimize_single_fast(&p, &n, 1e-4).unwrap();
    let gains = d.gains.unwrap();
    let ch = FastChannel::new(1e-4).unwrap();
    let noise = LoopNoise::from_model(&p, &n);
    let steps = 4;
    let replicas = 1_000_000;
    let mut m = vec![0.0; steps];
    let mut states = Vec::with_capacity(steps);
    for r in 0..replicas {
        states.clear();
        let mut rng = substream(
            5,
            StreamKey {
                replica: r,
                ..Default::default()
            },
        );
        fast_replica(
            1.5,
            &gains,
            &ch,
            SignKnowledge::Partial,
            &noise,
            1.0,
            Window::new(steps, 0).unwrap(),
            &mut rng,
            Some(&mut states),
        );
        for (acc, &x) in m.iter_mut().zip(&states) {
            *acc += x * x;
        }
    }
    let m: Vec<f64> = m.iter().map(|s| s / replicas as f64).collect();
    let drive = gains.g * gains.g * SIGMA_Z2 + SIGMA_W2;
    let mut prev = 1.0;
    for &mt in &m {
        let predicted = d.e_ac2 * prev + drive;
        assert!((mt / predicted - 1.0).abs() < 0.01, "{mt} vs {predicted}");
        prev = mt;
    }
}

/// Sign-blind pairs spanning small to large products `U = G·K`.
fn blind_pairs() -> Vec<GainPair> {
    [
        -1e-2, -1.0, -10.0, -50.0, -118.5, -200.0, -400.0, 30.0, 100.0, -1000.0,
    ]
    .iter()
    .enumerate()
    .map(|(i, &u)| {
        let k = -0.1 * (i + 1) as f64;
        GainPair::new(k, u / k)
    })
    .collect()
}

#[test]
fn sign_blind_control_cannot_stabilize() {
    let (p, n) = reference();
    let ch = FastChannel::new(1e-4).unwrap();
    let noise = LoopNoise::from_model(&p, &n);
    let replicas = 100_000;
    let horizon = 50;
    for (pi, gains) in blind_pairs().iter().enumerate() {
        assert!(expected_ac2_no_csi(&p, 1e-4, gains.g * gains.k) > 1.0);
        let mut m = vec![0.0; horizon + 1];
        m[0] = 1.0;
        let mut states = Vec::with_capacity(horizon);
        for r in 0..replicas {
            states.clear();
            let key = StreamKey {
                experiment: 40,
                point: pi as u64,
                replica: r,
                plant: 0,
            };
            let mut rng = substream(2019, key);
            fast_replica(
                1.5,
                gains,
                &ch,
                SignKnowledge::None,
                &noise,
                1.0,
                Window::new(horizon, 0).unwrap(),
                &mut rng,
                Some(&mut states),
            );
            // A replica cut short by the divergence guard counts as infinite
            // from then on.
            for (t, acc) in m[1..].iter_mut().enumerate() {
                let x = states.get(t).copied().unwrap_or(f64::INFINITY);
                let x2 = if x.abs() > DIVERGENCE_LIMIT {
                    f64::INFINITY
                } else {
                    x * x
                };
                *acc += x2 / replicas as f64;
            }
        }
        // Products of random gains make single-step sample means noisy, so
        // growth is checked between checkpoints five symbols apart.
        for t in (5..=horizon).step_by(5) {
            let grew = m[t] > m[t - 5] || m[t - 5].is_infinite();
            assert!(grew, "pair {pi}: E[x²({t})] = {} ≤ {}", m[t], m[t - 5]);
        }
        assert!(m[horizon] > 1e6 * m[0]);
    }
}

#[test]
fn stabilizability_flips_at_one_over_sqrt_eta() {
    let edge = 1.0 / ETA.sqrt();
    let below = PlantParams::new(edge - 1e-6, SIGMA_W2).unwrap();
    let above = PlantParams::new(edge + 1e-6, SIGMA_W2).unwrap();
    assert!(stabilizable_fast(&below));
    assert!(!stabilizable_fast(&above));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn second_moment_is_exactly_quadratic(a in 1.0001f64..1.65, s2 in 1e-6f64..1e-2, u in -1e3f64..1e3) {
        let p = PlantParams::new(a, SIGMA_W2).unwrap();
        let h = 1.0;
        let fd = (expected_ac2(&p, s2, u + h) - 2.0 * expected_ac2(&p, s2, u) + expected_ac2(&p, s2, u - h)) / (h * h);
        prop_assert!((fd / (2.0 * s2) - 1.0).abs() < 1e-6 || (fd - 2.0 * s2).abs() < 1e-9);
    }

    #[test]
    fn allocation_invariants(
        a in 1.0001f64..1.6,
        s2 in proptest::collection::vec(-5.0f64..=-2.0, 1..6),
        slack in 1.0f64..50.0,
    ) {
        let p = PlantParams::new(a, SIGMA_W2).unwrap();
        let sel: Vec<(PlantId, f64)> = s2.iter().enumerate().map(|(i, &l)| (PlantId(i as u32), 10f64.powf(l))).collect();
        let floors: f64 = sel.iter().map(|&(_, s)| fast_floor(a, s)).sum();
        let n = NoisePowers::new(SIGMA_Z2, floors * slack * SIGMA_Z2).unwrap();
        let (alloc, design) = allocate_multi_fast(&sel, &p, &n).unwrap();
        prop_assert!((alloc.total() / n.gamma0() - 1.0).abs() < 1e-10);
        for (i, (&(_, si), &gi)) in sel.iter().zip(&alloc.gamma).enumerate() {
            let fi = fast_floor(a, si);
            prop_assert!(gi >= fi);
            for (&(_, sj), &gj) in sel.iter().zip(&alloc.gamma).skip(i + 1) {
                let fj = fast_floor(a, sj);
                if si > sj && gi > fi && gj > fj {
                    prop_assert!(gi < gj);
                }
                if sj > si && gi > fi && gj > fj {
                    prop_assert!(gj < gi);
                }
            }
        }
        for d in &design.per_plant {
            prop_assert!(d.e_ac2 < 1.0);
            let g = d.gains.unwrap();
            prop_assert!(g.k < 0.0 && g.g > 0.0);
        }
    }

    #[test]
    fn single_design_sits_on_budget(a in 1.0001f64..1.6, log_s2 in -5.0f64..-2.0, f in 1.1f64..1e3) {
        let p = PlantParams::new(a, SIGMA_W2).unwrap();
        let s2 = 10f64.powf(log_s2);
        let gamma = fast_floor(a, s2) * f;
        let d = optimize_single_fast_at(&p, 1e6, s2, gamma).unwrap();
        let g = d.gains.unwrap();
        let snr = g.k * g.k * (g.g * g.g + 1e6) / (1.0 - d.e_ac2);
        prop_assert!((snr / gamma - 1.0).abs() < 1e-9);
        prop_assert!((d.e_ac2 - expected_ac2(&p, s2, d.u)).abs() == 0.0);
    }

    #[test]
    fn selection_respects_floors(
        a in 1.0001f64..1.7,
        s2 in proptest::collection::vec(-5.0f64..=-2.0, 0..10),
        log_gamma in 2.0f64..8.0,
    ) {
        let p = PlantParams::new(a, SIGMA_W2).unwrap();
        let n = NoisePowers::new(SIGMA_Z2, 10f64.powf(log_gamma) * SIGMA_Z2).unwrap();
        let plants: Vec<(PlantId, f64)> = s2.iter().enumerate().map(|(i, &l)| (PlantId(i as u32), 10f64.powf(l))).collect();
        let sel = select_plants_fast(&plants, &p, &n);
        if !stabilizable_fast(&p) {
            prop_assert!(sel.is_empty());
        }
        let s_of = |id: PlantId| plants.iter().find(|x| x.0 == id).unwrap().1;
        let used: f64 = sel.iter().map(|&id| fast_floor(a, s_of(id))).sum();
        prop_assert!(used <= n.gamma0());
    }
}

#[test]
fn sampler_is_seed_deterministic() {
    let mut a = substream(1, StreamKey::default());
    let mut b = substream(1, StreamKey::default());
    assert_eq!(a.next_u64(), b.next_u64());
}
