use std::path::Path;

use image::{Rgb, RgbImage};
use lisafit::{MarkedPattern, RasterSurface};

use crate::CliError;

const RAMP: [[f64; 3]; 6] = [
    [68.0, 1.0, 84.0],
    [65.0, 68.0, 135.0],
    [42.0, 120.0, 142.0],
    [34.0, 168.0, 132.0],
    [122.0, 209.0, 81.0],
    [253.0, 231.0, 37.0],
];
const TARGET_PIXELS: usize = 512;

fn colour(t: f64) -> Rgb<u8> {
    if !t.is_finite() {
        return Rgb([128, 128, 128]);
    }
    let s = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (s.floor() as usize).min(RAMP.len() - 2);
    let f = s - k as f64;
    let c = |i: usize| (RAMP[k][i] * (1.0 - f) + RAMP[k + 1][i] * f).round() as u8;
    Rgb([c(0), c(1), c(2)])
}

fn normaliser(values: impl Iterator<Item = f64> + Clone) -> impl Fn(f64) -> f64 {
    let lo = values.clone().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = values.filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    move |v| {
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    }
}

fn save(img: &RgbImage, path: &Path) -> Result<(), CliError> {
    img.save(path)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Raster heatmap with `y_min` at the bottom of the image.
pub fn heatmap(s: &RasterSurface, path: &Path) -> Result<(), CliError> {
    let (nx, ny) = (s.nx(), s.ny());
    let scale = (TARGET_PIXELS / nx.max(ny)).max(1);
    let norm = normaliser(s.values().iter().copied());
    let mut img = RgbImage::new((nx * scale) as u32, (ny * scale) as u32);
    for (px, py, pixel) in img.enumerate_pixels_mut() {
        let ix = px as usize / scale;
        let iy = ny - 1 - py as usize / scale;
        *pixel = colour(norm(s.value(ix, iy)));
    }
    save(&img, path)
}

/// Points drawn as small squares coloured by their mark on a white background.
pub fn point_map(mp: &MarkedPattern, path: &Path) -> Result<(), CliError> {
    let w = *mp.pattern().window();
    let side = TARGET_PIXELS as f64;
    let scale = side / w.width().max(w.height());
    let (width, height) = ((w.width() * scale).ceil() as u32, (w.height() * scale).ceil() as u32);
    let mut img = RgbImage::from_pixel(width.max(1), height.max(1), Rgb([255, 255, 255]));
    let norm = normaliser(mp.marks().iter().map(|m| m.ln()));
    for (p, m) in mp.iter() {
        let cx = ((p.x - w.x_min()) * scale) as i64;
        let cy = (height as f64 - (p.y - w.y_min()) * scale) as i64;
        let c = colour(norm(m.ln()));
        for dy in -3..=3 {
            for dx in -3..=3 {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                    img.put_pixel(x as u32, y as u32, c);
                }
            }
        }
    }
    save(&img, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_endpoints() {
        assert_eq!(colour(0.0), Rgb([68, 1, 84]));
        assert_eq!(colour(1.0), Rgb([253, 231, 37]));
        assert_eq!(colour(f64::NAN), Rgb([128, 128, 128]));
    }
}
