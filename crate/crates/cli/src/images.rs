//! Diagnostic PNG dumps: modulus in grayscale, phase on a cyclic colormap.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::{config_err, CliResult};

/// Modulus mapped linearly so the largest value is 255.
pub fn modulus_gray(data: &[C64]) -> Vec<u8> {
    let max = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    data.iter()
        .map(|z| if max > 0.0 { (255.0 * z.norm() / max).round() as u8 } else { 0 })
        .collect()
}

/// Hue wheel with one full turn over `[-pi, pi)`; red at `+-pi`.
pub fn phase_rgb(phase: f64) -> [u8; 3] {
    let h = (phase + PI).rem_euclid(2.0 * PI) / (2.0 * PI) * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [(255.0 * r).round() as u8, (255.0 * g).round() as u8, (255.0 * b).round() as u8]
}

fn write_png(path: &Path, width: usize, height: usize, color: png::ColorType, bytes: &[u8]) -> CliResult<()> {
    let err = |e: &dyn std::fmt::Display| config_err(format!("{}: {e}", path.display()));
    let file = File::create(path).map_err(|e| err(&e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| err(&e))?;
    w.write_image_data(bytes).map_err(|e| err(&e))?;
    Ok(())
}

/// Writes `<stem>_modulus.png` and `<stem>_phase.png` for a row-major
/// `width x height` array.
pub fn dump(dir: &Path, stem: &str, data: &[C64], width: usize, height: usize) -> CliResult<()> {
    write_png(&dir.join(format!("{stem}_modulus.png")), width, height, png::ColorType::Grayscale, &modulus_gray(data))?;
    let rgb: Vec<u8> = data.iter().flat_map(|z| phase_rgb(z.arg())).collect();
    write_png(&dir.join(format!("{stem}_phase.png")), width, height, png::ColorType::Rgb, &rgb)
}
