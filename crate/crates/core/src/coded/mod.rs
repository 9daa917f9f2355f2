//! Coding-based control baseline: deadbeat control values carried by a
//! Hamming-type BCH code over Gray-mapped square QAM, dropped on decoding
//! failure.

pub mod bch;
pub mod protocol;
pub mod qam;

pub use bch::{bch_decode, bch_encode, BchCode, CodingScheme};
pub use protocol::{
    boundary_second_moment, run_coded_control, CodedOutcome, DropLink, ModemLink, Transport,
};
pub use qam::{qam_detect, qam_modulate};
