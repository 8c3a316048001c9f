//! Proportional resize so the short side hits the target, then a centre crop.
//!
//! Resampling is separable convolution at pixel-centre-mapped coordinates;
//! when downscaling the kernel support is widened by the scale factor.
//! Taps falling outside the image clamp to the nearest edge sample.

use crate::paramsample::ResizeKernel;
use crate::rawio::RgbImage16;

use super::{DevelopError, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResizePolicy {
    pub allow_upscale: bool,
}

impl Default for ResizePolicy {
    fn default() -> Self {
        ResizePolicy { allow_upscale: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resized {
    pub image: RgbImage16,
    /// The source's short side was below the target.
    pub upscaled: bool,
}

/// Geometry of the scaled intermediate and the crop taken from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropGeometry {
    pub scaled_width: usize,
    pub scaled_height: usize,
    pub offset_x: usize,
    pub offset_y: usize,
}

pub fn crop_geometry(width: usize, height: usize, target: usize) -> CropGeometry {
    let short = width.min(height);
    // round(long * target / short), at least `target`
    let scale_long = |long: usize| ((2 * long * target + short) / (2 * short)).max(target);
    let (sw, sh) = if width <= height {
        (target, scale_long(height))
    } else {
        (scale_long(width), target)
    };
    CropGeometry {
        scaled_width: sw,
        scaled_height: sh,
        offset_x: (sw - target) / 2,
        offset_y: (sh - target) / 2,
    }
}

pub fn resize_crop(
    img: &RgbImage16,
    kernel: ResizeKernel,
    target_side: usize,
) -> Result<Resized, DevelopError> {
    resize_crop_with(img, kernel, target_side, ResizePolicy::default())
}

pub fn resize_crop_with(
    img: &RgbImage16,
    kernel: ResizeKernel,
    target_side: usize,
    policy: ResizePolicy,
) -> Result<Resized, DevelopError> {
    if img.width == 0 || img.height == 0 || target_side == 0 {
        return Err(DevelopError::new(
            Stage::Resize,
            format!("cannot resize {}x{} to side {target_side}", img.width, img.height),
        ));
    }
    let upscaled = img.width.min(img.height) < target_side;
    if upscaled && !policy.allow_upscale {
        return Err(DevelopError::new(
            Stage::Resize,
            format!(
                "short side {} below target {target_side} and upscaling is disabled",
                img.width.min(img.height)
            ),
        ));
    }
    let geo = crop_geometry(img.width, img.height, target_side);
    let xs = axis_weights(img.width, geo.scaled_width, geo.offset_x, target_side, kernel);
    let ys = axis_weights(img.height, geo.scaled_height, geo.offset_y, target_side, kernel);

    let mut out = RgbImage16::new(target_side, target_side, img.white_level);
    let white = img.white_level as f64;
    let mut rows = vec![0f64; img.height * target_side];
    for c in 0..3 {
        let src = &img.planes[c];
        for y in 0..img.height {
            let line = &src[y * img.width..(y + 1) * img.width];
            for (ox, taps) in xs.iter().enumerate() {
                rows[y * target_side + ox] =
                    taps.iter().map(|&(i, w)| w * line[i] as f64).sum();
            }
        }
        let dst = &mut out.planes[c];
        for (oy, taps) in ys.iter().enumerate() {
            for ox in 0..target_side {
                let v: f64 = taps.iter().map(|&(i, w)| w * rows[i * target_side + ox]).sum();
                dst[oy * target_side + ox] = v.round().clamp(0.0, white) as u16;
            }
        }
    }
    Ok(Resized {
        image: out,
        upscaled,
    })
}

/// Normalised taps for each cropped output coordinate along one axis.
fn axis_weights(
    in_len: usize,
    scaled_len: usize,
    offset: usize,
    count: usize,
    kernel: ResizeKernel,
) -> Vec<Vec<(usize, f64)>> {
    let ratio = in_len as f64 / scaled_len as f64;
    let last = in_len as isize - 1;
    (offset..offset + count)
        .map(|o| {
            let centre = (o as f64 + 0.5) * ratio;
            if kernel == ResizeKernel::Nearest {
                return vec![((centre.floor() as isize).clamp(0, last) as usize, 1.0)];
            }
            let support = match kernel {
                ResizeKernel::Bilinear => 1.0,
                _ => 2.0,
            };
            let stretch = ratio.max(1.0);
            let lo = (centre - support * stretch).floor() as isize;
            let hi = (centre + support * stretch).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = Vec::with_capacity((hi - lo + 1) as usize);
            for i in lo..=hi {
                let t = (i as f64 + 0.5 - centre) / stretch;
                let w = match kernel {
                    ResizeKernel::Bilinear => triangle(t),
                    _ => keys_cubic(t),
                };
                if w != 0.0 {
                    let idx = i.clamp(0, last) as usize;
                    match taps.iter_mut().find(|(j, _)| *j == idx) {
                        Some(tap) => tap.1 += w,
                        None => taps.push((idx, w)),
                    }
                }
            }
            let sum: f64 = taps.iter().map(|t| t.1).sum();
            if sum != 1.0 {
                for tap in &mut taps {
                    tap.1 /= sum;
                }
            }
            taps
        })
        .collect()
}

fn triangle(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

/// Keys cubic convolution with a = -0.5.
fn keys_cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let x = t.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KERNELS: [ResizeKernel; 3] = [
        ResizeKernel::Nearest,
        ResizeKernel::Bilinear,
        ResizeKernel::Bicubic,
    ];

    fn textured(w: usize, h: usize) -> RgbImage16 {
        RgbImage16::from_fn(w, h, 65535, |x, y| {
            [
                ((x * 7919 + y * 104729) % 65536) as u16,
                ((x * 31 + y * 17) % 60000) as u16,
                ((x ^ y) * 13 % 65536) as u16,
            ]
        })
    }

    #[test]
    fn same_size_is_identity() {
        let img = textured(64, 64);
        for k in KERNELS {
            let r = resize_crop(&img, k, 64).unwrap();
            assert_eq!(r.image, img, "{k:?}");
            assert!(!r.upscaled);
        }
    }

    #[test]
    fn wide_input_keeps_centre_columns() {
        let img = textured(128, 64);
        for k in KERNELS {
            let r = resize_crop(&img, k, 64).unwrap();
            for y in 0..64 {
                for x in 0..64 {
                    assert_eq!(r.image.pixel(x, y), img.pixel(x + 32, y));
                }
            }
        }
        let g = crop_geometry(2048, 1024, 1024);
        assert_eq!((g.scaled_width, g.offset_x, g.offset_y), (2048, 512, 0));
    }

    #[test]
    fn portrait_geometry() {
        let g = crop_geometry(3000, 5000, 1024);
        assert_eq!(g.scaled_width, 1024);
        assert_eq!(g.scaled_height, 1707);
        assert_eq!(g.offset_y, 341);
    }

    #[test]
    fn nearest_samples_mapped_coordinates() {
        // scaled-down analogue of 3000x5000 -> 1024
        let (w, h, t) = (300usize, 500usize, 128usize);
        let img = textured(w, h);
        let g = crop_geometry(w, h, t);
        let out = resize_crop(&img, ResizeKernel::Nearest, t).unwrap().image;
        for oy in 0..t {
            for ox in 0..t {
                let sx = (((ox + g.offset_x) as f64 + 0.5) * w as f64 / g.scaled_width as f64) as usize;
                let sy = (((oy + g.offset_y) as f64 + 0.5) * h as f64 / g.scaled_height as f64) as usize;
                assert_eq!(out.pixel(ox, oy), img.pixel(sx.min(w - 1), sy.min(h - 1)));
            }
        }
    }

    #[test]
    fn constants_preserved_in_every_direction() {
        let img = RgbImage16::from_fn(50, 30, 4095, |_, _| [100, 2000, 4095]);
        for k in KERNELS {
            for t in [8, 30, 64] {
                let r = resize_crop(&img, k, t).unwrap();
                assert!(r.image.planes[0].iter().all(|&v| v == 100));
                assert!(r.image.planes[1].iter().all(|&v| v == 2000));
                assert!(r.image.planes[2].iter().all(|&v| v == 4095));
                assert_eq!(r.upscaled, t > 30);
            }
        }
    }

    #[test]
    fn upscale_can_be_refused() {
        let img = textured(16, 16);
        let err = resize_crop_with(&img, ResizeKernel::Bilinear, 32, ResizePolicy { allow_upscale: false });
        assert!(err.is_err());
    }
}
