//! Square `2^L`-QAM with per-axis Gray labels.
//!
//! The first `L/2` bits of a symbol select the in-phase level, the rest the
//! quadrature level. Levels sit on the odd-integer grid `±1, ±3, …` scaled
//! so the average symbol energy equals the requested power.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // unused when std is linked
use num_traits::Float;

fn levels(bits_per_symbol: u32) -> u32 {
    1 << (bits_per_symbol / 2)
}

/// Grid scaling giving average energy `power`.
pub fn scale(bits_per_symbol: u32, power: f64) -> f64 {
    let m = levels(bits_per_symbol) as f64;
    (power / (2.0 * (m * m - 1.0) / 3.0)).sqrt()
}

fn gray_to_index(mut g: u32) -> u32 {
    let mut shift = g >> 1;
    while shift != 0 {
        g ^= shift;
        shift >>= 1;
    }
    g
}

fn index_to_gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn axis_level(label: u32, m: u32) -> f64 {
    let i = gray_to_index(label);
    (2 * i) as f64 - (m - 1) as f64
}

fn axis_label(y: f64, m: u32) -> u32 {
    let top = (m - 1) as f64;
    let i = if y.is_finite() {
        ((y + top) / 2.0).round().clamp(0.0, top) as u32
    } else {
        0
    };
    index_to_gray(i)
}

fn read_bits(bits: &[bool], start: usize, len: usize) -> u32 {
    (start..start + len).fold(0, |acc, j| {
        acc << 1 | bits.get(j).copied().unwrap_or(false) as u32
    })
}

/// Maps `bits` to `⌈len/L⌉` symbols, padding the last one with zeros.
pub fn qam_modulate(bits: &[bool], bits_per_symbol: u32, power: f64) -> Vec<Complex64> {
    let l = bits_per_symbol as usize;
    let half = l / 2;
    let m = levels(bits_per_symbol);
    let s = scale(bits_per_symbol, power);
    (0..bits.len().div_ceil(l))
        .map(|sym| {
            let i = read_bits(bits, sym * l, half);
            let q = read_bits(bits, sym * l + half, half);
            Complex64::new(s * axis_level(i, m), s * axis_level(q, m))
        })
        .collect()
}

/// Equalizes by the real coefficient `h` and returns the `L` bits of the
/// nearest constellation point.
pub fn qam_detect(received: Complex64, h: f64, bits_per_symbol: u32, power: f64) -> Vec<bool> {
    let half = bits_per_symbol / 2;
    let m = levels(bits_per_symbol);
    let s = scale(bits_per_symbol, power);
    let y = received / (h * s);
    let i = axis_label(y.re, m);
    let q = axis_label(y.im, m);
    let word = i << half | q;
    (0..bits_per_symbol)
        .rev()
        .map(|j| word >> j & 1 == 1)
        .collect()
}
