//! Channel models and reproducible random streams.
//!
//! Slow fading is handled through [`SlowChannel`], the positive magnitude
//! `|H|` that stays fixed for a whole control process. Fast fading uses
//! [`FastChannel`], whose per-symbol coefficient is the signed real part
//! `H(t) ~ N(0, σ²_h)`. The two projections are different types so a
//! formula written for one cannot be fed the other.

#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// The generator behind every simulation stream.
pub type SimRng = ChaCha8Rng;

/// Coordinates of one independent random stream.
///
/// Streams are addressed rather than split sequentially, so adding a plant
/// or a replica never perturbs the draws of the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamKey {
    pub experiment: u64,
    pub point: u64,
    pub replica: u64,
    pub plant: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamKey {
    fn stream_id(&self) -> u64 {
        [self.experiment, self.point, self.replica, self.plant]
            .iter()
            .fold(0x6A09_E667_F3BC_C908, |acc, &part| splitmix64(acc ^ part))
    }
}

/// ChaCha stream `key` under `root_seed`.
pub fn substream(root_seed: u64, key: StreamKey) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(key.stream_id());
    rng
}

#[inline]
pub(crate) fn gaussian<R: RngCore + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    std_dev * z
}

/// Effective slow-fading coefficient `|H|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowChannel {
    h: f64,
}

impl SlowChannel {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: "slow-fading magnitude must be positive",
            });
        }
        Ok(Self { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn power_gain(&self) -> f64 {
        self.h * self.h
    }
}

/// Block Rayleigh draw: `h = |c|` with `c` circular complex Gaussian and
/// `E[|c|²] = mean_power_gain`.
pub fn sample_rayleigh_block<R: RngCore + ?Sized>(
    mean_power_gain: f64,
    rng: &mut R,
) -> Result<SlowChannel> {
    if !(mean_power_gain.is_finite() && mean_power_gain > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean_power_gain",
            reason: "must be positive",
        });
    }
    let per_dim = (mean_power_gain / 2.0).sqrt();
    loop {
        let re = gaussian(rng, per_dim);
        let im = gaussian(rng, per_dim);
        let h = re.hypot(im);
        // |c| = 0 has probability zero; redraw to keep the invariant h > 0.
        if h > 0.0 {
            return Ok(SlowChannel { h });
        }
    }
}

/// Per-symbol real fading `H(t) ~ N(0, σ²_h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastChannel {
    sigma_h2: f64,
    sigma_h: f64,
}

impl FastChannel {
    pub fn new(sigma_h2: f64) -> Result<Self> {
        if !(sigma_h2.is_finite() && sigma_h2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_h2",
                reason: "fast-fading variance must be positive",
            });
        }
        Ok(Self {
            sigma_h2,
            sigma_h: sigma_h2.sqrt(),
        })
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }
}

/// One fast-fading coefficient and the sign the controller observes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastSymbol {
    pub h: f64,
    /// `+1.0` or `-1.0`; an exact zero maps to `+1.0`.
    pub sign: f64,
}

pub fn signum_nonzero(h: f64) -> f64 {
    if h < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn sample_fast_symbol<R: RngCore + ?Sized>(ch: &FastChannel, rng: &mut R) -> FastSymbol {
    let h = gaussian(rng, ch.sigma_h);
    FastSymbol {
        h,
        sign: signum_nonzero(h),
    }
}

/// `h·v + z` with `z ~ N(0, σ²_z)` on the one real dimension in use.
pub fn apply_channel<R: RngCore + ?Sized>(v: f64, h: f64, sigma_z2: f64, rng: &mut R) -> f64 {
    h * v + gaussian(rng, sigma_z2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> SimRng {
        substream(7, StreamKey::default())
    }

    #[test]
    fn rayleigh_power_gain() {
        let mut r = rng();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_rayleigh_block(1e-4, &mut r).unwrap().power_gain();
        }
        let mean = sum / n as f64;
        assert!((mean / 1e-4 - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn rayleigh_median() {
        let mut r = rng();
        let n = 1_000_000;
        let above = (0..n)
            .filter(|_| {
                sample_rayleigh_block(1.0, &mut r).unwrap().power_gain() > core::f64::consts::LN_2
            })
            .count();
        let frac = above as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "{frac}");
    }

    #[test]
    fn fast_symbol_moments() {
        let ch = FastChannel::new(1e-4).unwrap();
        let mut r = rng();
        let n = 1_000_000;
        let (mut sum, mut abs_sum, mut pos) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            let s = sample_fast_symbol(&ch, &mut r);
            sum += s.h;
            abs_sum += s.h.abs();
            if s.sign > 0.0 {
                pos += 1;
            }
            assert_eq!(s.sign, signum_nonzero(s.h));
        }
        let sigma = 1e-2;
        assert!((sum / n as f64).abs() < 3.0 * sigma / 1000.0);
        // folded normal mean sqrt(2 σ²/π)
        let expected = (2.0 * 1e-4 / core::f64::consts::PI).sqrt();
        assert!((expected - 7.9788e-3).abs() < 1e-7);
        assert!(((abs_sum / n as f64) / expected - 1.0).abs() < 0.01);
        assert!((pos as f64 / n as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn zero_sign_maps_to_plus() {
        assert_eq!(signum_nonzero(0.0), 1.0);
        assert_eq!(signum_nonzero(-0.0), 1.0);
        assert_eq!(signum_nonzero(-1e-300), -1.0);
    }

    #[test]
    fn channel_output() {
        let mut r = rng();
        assert!((apply_channel(1.0, 2.0, 1e-300, &mut r) - 2.0).abs() < 1e-100);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| apply_channel(1.0, 0.01, 1e-7, &mut r))
            .sum::<f64>()
            / n as f64;
        assert!((mean / 0.01 - 1.0).abs() < 0.01);
        let var = (0..n)
            .map(|_| apply_channel(0.0, 5.0, 1e-7, &mut r).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((var / 1e-7 - 1.0).abs() < 0.01);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let key = StreamKey {
            experiment: 1,
            point: 2,
            replica: 3,
            plant: 4,
        };
        let mut r1 = substream(42, key);
        let mut r2 = substream(42, key);
        let mut r3 = substream(42, StreamKey { plant: 5, ..key });
        let s1: [u64; 8] = core::array::from_fn(|_| r1.next_u64());
        let s2: [u64; 8] = core::array::from_fn(|_| r2.next_u64());
        let s3: [u64; 8] = core::array::from_fn(|_| r3.next_u64());
        assert_eq!(s1, s2);
        assert_ne!(s1, s3);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SlowChannel::new(0.0).is_err());
        assert!(FastChannel::new(-1.0).is_err());
        assert!(sample_rayleigh_block(0.0, &mut rng()).is_err());
    }
}
