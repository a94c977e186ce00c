//! Unit conventions.
//!
//! | quantity  | internal unit | table unit | conversion             |
//! |-----------|---------------|------------|------------------------|
//! | time      | ns            | ns, µs     | 1 µs = 1000 ns         |
//! | frequency | rad/ns        | MHz, GHz   | ω = 2π f               |
//! | rate      | 1/ns          | 1/time     | γ = 1/τ                |
//!
//! Pulse amplitudes are stored as angular frequencies and written to files
//! in MHz.

use std::f64::consts::TAU;

pub const NS_PER_US: f64 = 1000.0;

pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency (rad/ns) back to MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

/// Rate `1/tau` for a lifetime in µs.
pub fn rate_from_us(tau_us: f64) -> f64 {
    1.0 / (tau_us * NS_PER_US)
}
