//! Deadbeat control over a coded link.
//!
//! Epochs start at `t = 0, d, 2d, …`. At the start of an epoch the
//! controller computes `u_c = −A^d·x(t)` and sends it in `d` symbols; if the
//! actuator recovers the payload it applies `u_c` at the epoch's last
//! symbol, so `x(t + d)` holds only the disturbances of the epoch. Failed
//! epochs and symbols outside an epoch apply no control.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand_core::RngCore;

use super::bch::{bch_decode, bch_encode, CodingScheme};
use super::qam::{qam_detect, qam_modulate};
use crate::error::{Error, Result};
use crate::fading::gaussian;
use crate::model::{PlantParams, ReplicaCost};
use crate::sim::{diverged, LoopNoise, Window};

/// Decides whether one epoch's control value reaches the actuator.
pub trait Transport {
    fn symbols_per_epoch(&self) -> usize;

    fn deliver<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool;
}

/// Full modem path: random payload, encode, scramble, modulate, fade, add
/// complex noise, detect, descramble, decode, compare with what was sent.
///
/// The scrambler XORs each codeword with a fresh pseudo-random mask known to
/// both ends, so the transmitted points, and hence the chance of recovery,
/// do not depend on the payload.
#[derive(Debug, Clone)]
pub struct ModemLink {
    scheme: CodingScheme,
    h: f64,
    power: f64,
    noise_std: f64,
    payload: Vec<bool>,
}

impl ModemLink {
    /// `sigma_z2` is the noise variance per real dimension.
    pub fn new(scheme: CodingScheme, h: f64, power: f64, sigma_z2: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: "channel coefficient must be positive",
            });
        }
        if !(power.is_finite() && power >= 0.0) || !(sigma_z2.is_finite() && sigma_z2 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "power",
                reason: "power and noise must be non-negative",
            });
        }
        Ok(Self {
            scheme,
            h,
            power,
            noise_std: sigma_z2.sqrt(),
            payload: alloc::vec![false; scheme.k()],
        })
    }

    pub fn scheme(&self) -> &CodingScheme {
        &self.scheme
    }

    /// Sends `payload` once and reports exact recovery.
    pub fn transmit<R: RngCore + ?Sized>(&self, payload: &[bool], rng: &mut R) -> Result<bool> {
        let code = &self.scheme.code;
        let l = self.scheme.bits_per_symbol;
        let mask = rng.next_u32();
        let scramble = |bits: &mut [bool]| {
            for (j, b) in bits.iter_mut().enumerate() {
                *b ^= mask >> j & 1 == 1;
            }
        };
        let mut codeword = bch_encode(payload, code)?;
        scramble(&mut codeword);
        let mut received = Vec::with_capacity(self.scheme.d() * l as usize);
        for s in qam_modulate(&codeword, l, self.power) {
            let noise =
                Complex64::new(gaussian(rng, self.noise_std), gaussian(rng, self.noise_std));
            received.extend(qam_detect(s * self.h + noise, self.h, l, self.power));
        }
        received.truncate(code.n());
        scramble(&mut received);
        let (decoded, _) = bch_decode(&received, code)?;
        Ok(decoded == payload)
    }
}

impl Transport for ModemLink {
    fn symbols_per_epoch(&self) -> usize {
        self.scheme.d()
    }

    fn deliver<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        let word = rng.next_u32();
        for (j, b) in self.payload.iter_mut().enumerate() {
            *b = word >> j & 1 == 1;
        }
        let payload = core::mem::take(&mut self.payload);
        let ok = self.transmit(&payload, rng).unwrap_or(false);
        self.payload = payload;
        ok
    }
}

/// Independent drops with a fixed success probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropLink {
    pub success_prob: f64,
    pub d: usize,
}

impl Transport for DropLink {
    fn symbols_per_epoch(&self) -> usize {
        self.d
    }

    fn deliver<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        u < self.success_prob
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CodedOutcome {
    pub cost: ReplicaCost,
    pub epochs: usize,
    pub delivered: usize,
    /// `Σ x²` at epoch boundaries `t = d, 2d, …` inside the costed window.
    pub boundary_sum_sq: f64,
    pub boundary_count: usize,
}

/// One replica of the coded protocol over `window.steps()` symbols.
pub fn run_coded_control<T, R>(
    plant: &PlantParams,
    noise: &LoopNoise,
    link: &mut T,
    x0: f64,
    window: Window,
    rng: &mut R,
) -> Result<CodedOutcome>
where
    T: Transport,
    R: RngCore + ?Sized,
{
    let d = link.symbols_per_epoch();
    if d == 0 || window.steps() < d {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "horizon must cover at least one epoch",
        });
    }
    let a = plant.a();
    let a_d = a.powi(d as i32);
    let sigma_w = noise.sigma_w2().sqrt();
    let mut out = CodedOutcome::default();
    let mut x = x0;
    let mut pending = 0.0;
    let steps = window.steps();
    for t in 0..steps {
        let offset = t % d;
        let epoch_fits = t - offset + d <= steps;
        if offset == 0 && epoch_fits {
            out.epochs += 1;
            let ok = link.deliver(rng);
            if ok {
                out.delivered += 1;
            }
            pending = if ok { -a_d * x } else { 0.0 };
        }
        let u = if offset == d - 1 && epoch_fits {
            pending
        } else {
            0.0
        };
        x = a * x + u + gaussian(rng, sigma_w);
        if diverged(x) {
            out.cost.diverged = true;
            break;
        }
        let step = t + 1;
        if step > window.burn_in {
            out.cost.push(x);
            if step % d == 0 {
                out.boundary_sum_sq += x * x;
                out.boundary_count += 1;
            }
        }
    }
    Ok(out)
}

/// Stationary boundary second moment under i.i.d. drops:
/// `σ²_w(A^{2d} − 1)/(A² − 1) / (1 − (1 − p)A^{2d})`; `None` when the
/// recursion is not contractive.
pub fn boundary_second_moment(a: f64, sigma_w2: f64, d: usize, success_prob: f64) -> Option<f64> {
    let a2 = a * a;
    let a2d = a2.powi(d as i32);
    let growth = (1.0 - success_prob) * a2d;
    (growth < 1.0).then(|| sigma_w2 * (a2d - 1.0) / (a2 - 1.0) / (1.0 - growth))
}
