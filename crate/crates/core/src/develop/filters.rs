//! Sharpening stages: unsharp masking and thresholded micro-contrast.

use crate::rawio::RgbImage16;

use super::demosaic::reflect;

/// Sigma of the unsharp-mask blur used by the development pipeline.
pub const USM_RADIUS: f64 = 1.0;

/// Separable Gaussian blur with reflect-101 borders; support is `ceil(3 sigma)`.
pub fn gaussian_blur(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let mut tmp = vec![0f64; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * row[reflect(x as isize + k as isize - half, width)])
                .sum();
        }
    }
    let mut out = vec![0f64; plane.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[reflect(y as isize + k as isize - half, height) * width + x])
                .sum();
        }
    }
    out
}

/// `in + amount * (in - blur(in))` before rounding and clamping.
pub fn unsharp_mask_plane(plane: &[f64], width: usize, height: usize, amount: f64, radius: f64) -> Vec<f64> {
    let blurred = gaussian_blur(plane, width, height, radius);
    plane
        .iter()
        .zip(&blurred)
        .map(|(&v, &b)| v + amount * (v - b))
        .collect()
}

pub fn unsharp_mask(img: &RgbImage16, amount: f64, radius: f64) -> RgbImage16 {
    if amount == 0.0 {
        return img.clone();
    }
    map_planes(img, |plane| unsharp_mask_plane(plane, img.width, img.height, amount, radius))
}

/// Local high-pass boost: the 3x3 residual `in - mean3x3(in)` is
/// soft-thresholded at `uniformity / 100` percent of the white level and
/// added back with gain `strength / 50`.
pub fn micro_contrast(img: &RgbImage16, strength: f64, uniformity: u32) -> RgbImage16 {
    if strength == 0.0 {
        return img.clone();
    }
    let gain = strength / 50.0;
    let threshold = uniformity as f64 / 100.0 * 0.01 * img.white_level as f64;
    let (w, h) = (img.width, img.height);
    map_planes(img, |plane| {
        let mut out = Vec::with_capacity(plane.len());
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0;
                for dy in -1..=1 {
                    let sy = reflect(y as isize + dy, h);
                    for dx in -1..=1 {
                        sum += plane[sy * w + reflect(x as isize + dx, w)];
                    }
                }
                let v = plane[y * w + x];
                let hp = v - sum / 9.0;
                let excess = (hp.abs() - threshold).max(0.0);
                out.push(v + gain * excess.copysign(hp));
            }
        }
        out
    })
}

/// Runs `f` over each channel as f64 and rounds back into range.
pub(crate) fn map_planes(img: &RgbImage16, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> RgbImage16 {
    let white = img.white_level as f64;
    let mut out = RgbImage16::new(img.width, img.height, img.white_level);
    for c in 0..3 {
        let plane: Vec<f64> = img.planes[c].iter().map(|&v| v as f64).collect();
        out.planes[c] = f(&plane)
            .into_iter()
            .map(|v| v.round().clamp(0.0, white) as u16)
            .collect();
    }
    out
}

/// Mean over the image of the variance in each 3x3 window (interior pixels).
pub fn mean_local_variance(plane: &[u16], width: usize, height: usize) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for y in 1..height.saturating_sub(1) {
        for x in 1..width.saturating_sub(1) {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for dy in 0..3 {
                for dx in 0..3 {
                    let v = plane[(y + dy - 1) * width + x + dx - 1] as f64;
                    s += v;
                    s2 += v * v;
                }
            }
            total += s2 / 9.0 - (s / 9.0).powi(2);
            n += 1;
        }
    }
    total / n.max(1) as f64
}
