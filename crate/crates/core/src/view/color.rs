//! Position <-> color codec over the unit cube.
//!
//! A normalized position o in [0,1]^3 becomes the RGB color floor(255*o)
//! (quantized) or o itself (fractional). The inverse divides by 255 or is
//! the identity. Fractional codes round-trip exactly; quantized codes are
//! within 1/255 per channel.

use crate::error::{Error, Result};
use nalgebra::Vector3;

#[derive(Debug, Clone, PartialEq)]
pub enum ColorCode {
    /// Integer RGB in {0,..,255}^3.
    Quantized([u8; 3]),
    /// RGB kept fractional in [0,1]^3, preserving full accuracy.
    Fractional(Vector3<f64>),
}

/// Encode a normalized position as a color. Errors if `o` leaves [0,1]^3.
pub fn pos_to_color(o: &Vector3<f64>, quantize: bool) -> Result<ColorCode> {
    if !o.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)) {
        return Err(Error::UnnormalizedInput([o.x, o.y, o.z]));
    }
    if quantize {
        let q = |c: f64| -> u8 { ((255.0 * c).floor().clamp(0.0, 255.0)) as u8 };
        Ok(ColorCode::Quantized([q(o.x), q(o.y), q(o.z)]))
    } else {
        Ok(ColorCode::Fractional(*o))
    }
}

/// Decode a color back to a position in [0,1]^3.
pub fn color_to_pos(c: &ColorCode) -> Vector3<f64> {
    match c {
        ColorCode::Quantized(q) => {
            Vector3::new(q[0] as f64 / 255.0, q[1] as f64 / 255.0, q[2] as f64 / 255.0)
        }
        ColorCode::Fractional(v) => *v,
    }
}
