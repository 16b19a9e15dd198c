//! Channel Jacobi coordinates and collinear bond coordinates.
//!
//! ```text
//! channel 1:  X = R₁ - r₁/2,  Y = r₁
//! channel 2:  X = r₂,         Y = R₂ - r₂/2
//! ```
//!
//! Both maps have unit Jacobian.

use crate::wavepacket::ChannelId;

/// `(R, r)` of `channel` to bond coordinates `(X, Y)`.
pub fn jacobi_to_bond(big_r: f64, r: f64, channel: ChannelId) -> (f64, f64) {
    match channel {
        ChannelId::Reactant => (big_r - 0.5 * r, r),
        ChannelId::Product => (r, big_r - 0.5 * r),
    }
}

/// Inverse of [`jacobi_to_bond`].
pub fn bond_to_jacobi(x: f64, y: f64, channel: ChannelId) -> (f64, f64) {
    match channel {
        ChannelId::Reactant => (x + 0.5 * y, y),
        ChannelId::Product => (y + 0.5 * x, x),
    }
}
