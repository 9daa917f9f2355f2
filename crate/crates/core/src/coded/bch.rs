//! Single-error-correcting binary BCH codes in systematic cyclic form.
//!
//! A message `m(x)` becomes `m(x)·x^(n−k) + (m(x)·x^(n−k) mod g(x))`. Bit
//! slices are most-significant coefficient first, so a codeword reads as
//! the message followed by its parity bits.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BchCode {
    n: u32,
    k: u32,
    t_corr: u32,
    generator: u32,
    /// Error pattern for every syndrome value.
    locations: [u32; 16],
}

const fn poly_mod(mut value: u32, generator: u32, degree: u32) -> u32 {
    let mut bit = 31;
    loop {
        if value >> bit & 1 == 1 && bit >= degree {
            value ^= generator << (bit - degree);
        }
        if bit == degree {
            break;
        }
        bit -= 1;
    }
    value
}

const fn syndrome_table(n: u32, generator: u32, degree: u32) -> [u32; 16] {
    let mut table = [0u32; 16];
    let mut pos = 0;
    while pos < n {
        let s = poly_mod(1 << pos, generator, degree);
        table[s as usize] = 1 << pos;
        pos += 1;
    }
    table
}

impl BchCode {
    /// (7, 4) code with `g(x) = x³ + x + 1`.
    pub const HAMMING_7_4: BchCode = BchCode {
        n: 7,
        k: 4,
        t_corr: 1,
        generator: 0b1011,
        locations: syndrome_table(7, 0b1011, 3),
    };

    /// (15, 11) code with `g(x) = x⁴ + x + 1`.
    pub const HAMMING_15_11: BchCode = BchCode {
        n: 15,
        k: 11,
        t_corr: 1,
        generator: 0b10011,
        locations: syndrome_table(15, 0b10011, 4),
    };

    pub fn new(n: u32, k: u32) -> Result<Self> {
        match (n, k) {
            (7, 4) => Ok(Self::HAMMING_7_4),
            (15, 11) => Ok(Self::HAMMING_15_11),
            _ => Err(Error::InvalidParameter {
                name: "code",
                reason: "supported codes are (7,4) and (15,11)",
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn t_corr(&self) -> usize {
        self.t_corr as usize
    }

    fn parity_bits(&self) -> u32 {
        self.n - self.k
    }

    pub fn encode_word(&self, message: u32) -> u32 {
        let shifted = message << self.parity_bits();
        shifted | poly_mod(shifted, self.generator, self.parity_bits())
    }

    pub fn syndrome(&self, word: u32) -> u32 {
        poly_mod(word, self.generator, self.parity_bits())
    }

    /// Nearest codeword's message. Every word of a perfect code lies within
    /// distance one of exactly one codeword.
    pub fn decode_word(&self, word: u32) -> u32 {
        let corrected = word ^ self.locations[self.syndrome(word) as usize];
        corrected >> self.parity_bits()
    }
}

fn pack(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| acc << 1 | b as u32)
}

fn unpack(value: u32, len: usize) -> Vec<bool> {
    (0..len).rev().map(|i| value >> i & 1 == 1).collect()
}

pub fn bch_encode(bits: &[bool], code: &BchCode) -> Result<Vec<bool>> {
    if bits.len() != code.k() {
        return Err(Error::LengthMismatch {
            expected: code.k(),
            got: bits.len(),
        });
    }
    Ok(unpack(code.encode_word(pack(bits)), code.n()))
}

/// Decoded message bits and a completion flag. With these perfect codes
/// the flag is always set; a miscorrection only shows up when the bits are
/// compared with what was sent.
pub fn bch_decode(word: &[bool], code: &BchCode) -> Result<(Vec<bool>, bool)> {
    if word.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            got: word.len(),
        });
    }
    Ok((unpack(code.decode_word(pack(word)), code.k()), true))
}

/// A code paired with a `2^L`-QAM constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingScheme {
    pub code: BchCode,
    pub bits_per_symbol: u32,
}

impl CodingScheme {
    pub fn new(n: u32, k: u32, bits_per_symbol: u32) -> Result<Self> {
        let code = BchCode::new(n, k)?;
        if bits_per_symbol != 4 && bits_per_symbol != 8 {
            return Err(Error::InvalidParameter {
                name: "bits_per_symbol",
                reason: "supported constellations are 16-QAM and 256-QAM",
            });
        }
        Ok(Self {
            code,
            bits_per_symbol,
        })
    }

    /// The four combinations, lowest latency first.
    pub fn all() -> [CodingScheme; 4] {
        [
            Self::new(7, 4, 8).unwrap(),
            Self::new(7, 4, 4).unwrap(),
            Self::new(15, 11, 8).unwrap(),
            Self::new(15, 11, 4).unwrap(),
        ]
    }

    /// Symbols per codeword, `⌈n/L⌉`.
    pub fn d(&self) -> usize {
        self.code.n().div_ceil(self.bits_per_symbol as usize)
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn k(&self) -> usize {
        self.code.k()
    }

    pub fn t_corr(&self) -> usize {
        self.code.t_corr()
    }

    pub fn label(&self) -> &'static str {
        match (self.code.n, self.bits_per_symbol) {
            (7, 8) => "bch7_4_256qam",
            (7, 4) => "bch7_4_16qam",
            (15, 8) => "bch15_11_256qam",
            _ => "bch15_11_16qam",
        }
    }
}
