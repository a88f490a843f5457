//! Procedural RGB test image used by the desk image preset.

use std::f64::consts::TAU;

use mgdl_core::formats::RgbImage;

/// `size × size` card mixing a smooth diagonal wave (red), a hard-edged
/// disc over a ramp (green) and an 8-pixel checkerboard (blue).
pub fn test_card(size: usize) -> RgbImage {
    assert!(size >= 2, "test card needs at least 2x2 pixels");
    let scale = (size - 1) as f64;
    let mut data = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        for c in 0..size {
            let u = r as f64 / scale;
            let v = c as f64 / scale;
            let red = 0.5 + 0.4 * (TAU * (3.0 * u + 2.0 * v)).sin();
            let d = ((u - 0.45).powi(2) + (v - 0.55).powi(2)).sqrt();
            let green = if d < 0.3 { 0.85 } else { 0.2 + 0.3 * u };
            let check = if (r / 8 + c / 8) % 2 == 0 { 0.7 } else { 0.3 };
            let blue = check * (0.5 + 0.5 * v);
            for x in [red, green, blue] {
                data.push((x.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    RgbImage::new(size, size, data).expect("buffer matches dimensions")
}
