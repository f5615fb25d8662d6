//! sRGB transfer function.

/// Decodes a nonlinear sRGB value in `[0, 1]` to linear light.
pub fn decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Encodes linear light in `[0, 1]` to nonlinear sRGB.
pub fn encode(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

pub fn decode_u8(code: u8) -> f64 {
    decode(code as f64 / 255.0)
}

pub fn encode_u8(v: f64) -> u8 {
    (encode(v) * 255.0).round() as u8
}

pub fn decode_u16(code: u16) -> f64 {
    decode(code as f64 / 65535.0)
}

pub fn encode_u16(v: f64) -> u16 {
    (encode(v) * 65535.0).round() as u16
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(decode_u8(0), 0.0);
        assert_eq!(decode_u8(255), 1.0);
        assert_eq!(encode_u8(0.0), 0);
        assert_eq!(encode_u8(1.0), 255);
    }

    #[test]
    fn mid_gray() {
        // ((128/255 + 0.055) / 1.055)^2.4
        assert!((decode_u8(128) - 0.21586).abs() < 5e-6);
    }

    #[test]
    fn exhaustive_round_trip() {
        for code in 0..=255u8 {
            assert_eq!(encode_u8(decode_u8(code)), code);
        }
    }

    #[test]
    fn sixteen_bit_round_trip() {
        for code in (0..=u16::MAX).step_by(7) {
            assert_eq!(encode_u16(decode_u16(code)), code);
        }
    }
}
