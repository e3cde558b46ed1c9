use std::io::Write;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::FormatError;
use crate::spectra::principal_domain_mask;

/// Row-major square grid as CSV, one grid row per line.
pub fn grid_csv(values: &[f64], size: usize) -> String {
    let mut s = String::with_capacity(values.len() * 8);
    for row in values.chunks(size.max(1)) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn unit_scale(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

fn byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary (P5) 8-bit PGM of a grid, min-max scaled.
pub fn write_pgm(path: &Path, values: &[f64], size: usize) -> Result<(), FormatError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{size} {size}\n255\n")?;
    let pixels: Vec<u8> = unit_scale(values).into_iter().map(byte).collect();
    f.write_all(&pixels)?;
    Ok(f.flush()?)
}

/// Principal-domain cells with a 4-neighbour outside the domain or on the
/// grid edge.
pub fn domain_outline(size: usize) -> Vec<bool> {
    let mask = principal_domain_mask(size);
    let inside = |j: isize, k: isize| {
        j >= 0 && k >= 0 && (j as usize) < size && (k as usize) < size && mask[j as usize * size + k as usize]
    };
    let mut out = vec![false; size * size];
    for j in 0..size as isize {
        for k in 0..size as isize {
            if inside(j, k) && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dj, dk)| !inside(j + dj, k + dk)) {
                out[j as usize * size + k as usize] = true;
            }
        }
    }
    out
}

/// RGB overlay: the log-scaled bispectrum in grey, the heatmap blended in
/// red, and the principal-domain outline in green. Row `j`, column `k`.
pub fn overlay_image(bispectrum: &[f64], heat: &[f64], size: usize) -> RgbImage {
    let base = unit_scale(&bispectrum.iter().map(|v| v.max(0.0).ln_1p()).collect::<Vec<_>>());
    let heat = unit_scale(heat);
    let outline = domain_outline(size);
    RgbImage::from_fn(size as u32, size as u32, |k, j| {
        let i = j as usize * size + k as usize;
        if outline[i] {
            return Rgb([0, 255, 0]);
        }
        let (g, h) = (base[i], heat[i]);
        let mix = |a: f64| byte(a * (1.0 - 0.6 * h));
        Rgb([byte(g * (1.0 - 0.6 * h) + 0.6 * h), mix(g), mix(g)])
    })
}

pub fn write_overlay_png(path: &Path, bispectrum: &[f64], heat: &[f64], size: usize) -> Result<(), FormatError> {
    overlay_image(bispectrum, heat, size).save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
