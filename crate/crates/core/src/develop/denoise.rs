//! Multilevel wavelet denoising.
//!
//! Each channel goes through a 4-level separable LeGall 5/3 lifting
//! transform (symmetric extension, Mallat layout). Detail coefficients at
//! each level are soft-thresholded at `intensity * sigma / 10`, where sigma
//! is the MAD noise estimate of that level's diagonal band, and then mixed
//! back toward the original coefficients by `detail / 40`.

use crate::paramsample::DENOISE_DETAIL_MAX;
use crate::rawio::RgbImage16;

use super::filters::map_planes;

pub const LEVELS: usize = 4;

pub fn pyramid_denoise(img: &RgbImage16, intensity: f64, detail: u32) -> RgbImage16 {
    if intensity <= 0.0 {
        return img.clone();
    }
    let keep = detail.min(DENOISE_DETAIL_MAX) as f64 / DENOISE_DETAIL_MAX as f64;
    map_planes(img, |plane| {
        let mut coeffs = plane.to_vec();
        let dims = forward_2d(&mut coeffs, img.width, img.width, img.height, LEVELS);
        for &(lw, lh) in &dims {
            shrink_level(&mut coeffs, img.width, lw, lh, intensity, keep);
        }
        inverse_2d(&mut coeffs, img.width, &dims);
        coeffs
    })
}

/// Soft-thresholds the three detail bands of the level whose input region
/// was `lw x lh` (low band occupies the top-left `ceil(lw/2) x ceil(lh/2)`).
fn shrink_level(c: &mut [f64], stride: usize, lw: usize, lh: usize, intensity: f64, keep: f64) {
    let (sw, sh) = (lw.div_ceil(2), lh.div_ceil(2));
    let in_detail = |x: usize, y: usize| x >= sw || y >= sh;

    let mut diag: Vec<f64> = (sh..lh)
        .flat_map(|y| (sw..lw).map(move |x| (x, y)))
        .map(|(x, y)| c[y * stride + x].abs())
        .collect();
    if diag.is_empty() {
        return;
    }
    let mid = diag.len() / 2;
    let (_, median, _) = diag.select_nth_unstable_by(mid, f64::total_cmp);
    let sigma = *median / 0.6745;
    let threshold = intensity * sigma / 10.0;
    if threshold == 0.0 {
        return;
    }
    for y in 0..lh {
        for x in 0..lw {
            if in_detail(x, y) {
                let v = &mut c[y * stride + x];
                let shrunk = (v.abs() - threshold).max(0.0).copysign(*v);
                *v = (1.0 - keep) * shrunk + keep * *v;
            }
        }
    }
}

/// Returns the region size transformed at each level, finest first.
fn forward_2d(c: &mut [f64], stride: usize, width: usize, height: usize, levels: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::new();
    let (mut w, mut h) = (width, height);
    let mut line = Vec::new();
    for _ in 0..levels {
        if w < 2 || h < 2 {
            break;
        }
        for y in 0..h {
            line.clear();
            line.extend_from_slice(&c[y * stride..y * stride + w]);
            lift_forward(&mut line);
            c[y * stride..y * stride + w].copy_from_slice(&line);
        }
        for x in 0..w {
            line.clear();
            line.extend((0..h).map(|y| c[y * stride + x]));
            lift_forward(&mut line);
            for (y, v) in line.iter().enumerate() {
                c[y * stride + x] = *v;
            }
        }
        dims.push((w, h));
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    dims
}

fn inverse_2d(c: &mut [f64], stride: usize, dims: &[(usize, usize)]) {
    let mut line = Vec::new();
    for &(w, h) in dims.iter().rev() {
        for x in 0..w {
            line.clear();
            line.extend((0..h).map(|y| c[y * stride + x]));
            lift_inverse(&mut line);
            for (y, v) in line.iter().enumerate() {
                c[y * stride + x] = *v;
            }
        }
        for y in 0..h {
            line.clear();
            line.extend_from_slice(&c[y * stride..y * stride + w]);
            lift_inverse(&mut line);
            c[y * stride..y * stride + w].copy_from_slice(&line);
        }
    }
}

/// In-place 5/3 analysis; output is `[low..., high...]`.
fn lift_forward(x: &mut [f64]) {
    let n = x.len();
    let ns = n.div_ceil(2);
    let nd = n / 2;
    let mut s: Vec<f64> = (0..ns).map(|i| x[2 * i]).collect();
    let mut d: Vec<f64> = (0..nd).map(|i| x[2 * i + 1]).collect();
    for i in 0..nd {
        let right = if i + 1 < ns { s[i + 1] } else { s[i] };
        d[i] -= 0.5 * (s[i] + right);
    }
    update(&mut s, &d, 0.25);
    x[..ns].copy_from_slice(&s);
    x[ns..].copy_from_slice(&d);
}

fn lift_inverse(x: &mut [f64]) {
    let n = x.len();
    let ns = n.div_ceil(2);
    let nd = n / 2;
    let mut s = x[..ns].to_vec();
    let d = x[ns..].to_vec();
    update(&mut s, &d, -0.25);
    for i in 0..nd {
        let right = if i + 1 < ns { s[i + 1] } else { s[i] };
        x[2 * i + 1] = d[i] + 0.5 * (s[i] + right);
    }
    for (i, v) in s.iter().enumerate() {
        x[2 * i] = *v;
    }
}

fn update(s: &mut [f64], d: &[f64], k: f64) {
    let nd = d.len();
    if nd == 0 {
        return;
    }
    for (i, v) in s.iter_mut().enumerate() {
        let left = if i > 0 { d[i - 1] } else { d[0] };
        let right = if i < nd { d[i] } else { d[nd - 1] };
        *v += k * (left + right);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::develop::filters::mean_local_variance;
    use rand::{Rng, SeedableRng};

    fn noisy(w: usize, h: usize, seed: u64) -> RgbImage16 {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        RgbImage16::from_fn(w, h, 65535, |x, y| {
            let base = 20000.0 + 80.0 * x as f64 + 40.0 * y as f64;
            let mut px = [0u16; 3];
            for p in &mut px {
                *p = (base + rng.random_range(-1500.0..1500.0)) as u16;
            }
            px
        })
    }

    #[test]
    fn lifting_reconstructs_any_length() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        for n in 1..40 {
            let orig: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let mut x = orig.clone();
            lift_forward(&mut x);
            lift_inverse(&mut x);
            for (a, b) in orig.iter().zip(&x) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_signal_has_zero_details() {
        let mut x = vec![7.0; 11];
        lift_forward(&mut x);
        assert!(x[6..].iter().all(|&d| d == 0.0));
        assert!(x[..6].iter().all(|&s| s == 7.0));
    }

    #[test]
    fn two_d_transform_round_trips() {
        let img = noisy(37, 22, 2);
        let mut c: Vec<f64> = img.planes[0].iter().map(|&v| v as f64).collect();
        let dims = forward_2d(&mut c, 37, 37, 22, LEVELS);
        assert_eq!(dims.len(), LEVELS);
        inverse_2d(&mut c, 37, &dims);
        for (a, b) in img.planes[0].iter().zip(&c) {
            assert_eq!(*a, b.round() as u16);
        }
    }

    #[test]
    fn zero_intensity_is_identity() {
        let img = noisy(32, 32, 3);
        assert_eq!(pyramid_denoise(&img, 0.0, 17), img);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = RgbImage16::from_fn(40, 24, 65535, |_, _| [9000, 123, 65535]);
        for (i, d) in [(1.0, 0), (30.0, 20), (60.0, 40)] {
            assert_eq!(pyramid_denoise(&img, i, d), img);
        }
    }

    #[test]
    fn stronger_intensity_removes_more() {
        let img = noisy(64, 64, 4);
        let v: Vec<f64> = [5.0, 20.0, 60.0]
            .iter()
            .map(|&i| {
                let out = pyramid_denoise(&img, i, 0);
                mean_local_variance(&out.planes[0], 64, 64)
            })
            .collect();
        let base = mean_local_variance(&img.planes[0], 64, 64);
        assert!(base > v[0] && v[0] > v[1] && v[1] > v[2], "{base} {v:?}");
    }

    #[test]
    fn detail_restores_texture() {
        let img = noisy(64, 64, 5);
        for intensity in [10.0, 40.0, 60.0] {
            let e: Vec<f64> = [0, 20, 40]
                .iter()
                .map(|&d| {
                    let out = pyramid_denoise(&img, intensity, d);
                    mean_local_variance(&out.planes[1], 64, 64)
                })
                .collect();
            assert!(e[2] >= e[1] && e[1] >= e[0], "{intensity}: {e:?}");
        }
        // full detail keeps every coefficient
        assert_eq!(pyramid_denoise(&img, 60.0, 40), img);
    }
}
