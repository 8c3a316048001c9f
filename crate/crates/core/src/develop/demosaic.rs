use crate::paramsample::DemosaicMethod;
use crate::rawio::{CfaImage, Channel, RgbImage16};

/// Reflect-101 index mapping (`-1 -> 1`, `n -> n - 2`); keeps Bayer parity.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

pub fn demosaic(cfa: &CfaImage, method: DemosaicMethod) -> RgbImage16 {
    match method {
        DemosaicMethod::Fast => demosaic_nearest(cfa),
        DemosaicMethod::Dcb => demosaic_gradient_corrected(cfa),
    }
}

/// Each Bayer cell supplies its own R and B to all four sites; a non-green
/// site takes the green sample from the other half of its row.
fn demosaic_nearest(cfa: &CfaImage) -> RgbImage16 {
    let (w, h) = (cfa.width(), cfa.height());
    let pattern = cfa.pattern();
    let mut out = RgbImage16::new(w, h, cfa.white_level());
    for cy in (0..h).step_by(2) {
        for cx in (0..w).step_by(2) {
            let mut red = 0;
            let mut blue = 0;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                match pattern.channel_at(cx + dx, cy + dy) {
                    Channel::Red => red = cfa.get(cx + dx, cy + dy),
                    Channel::Blue => blue = cfa.get(cx + dx, cy + dy),
                    Channel::Green => {}
                }
            }
            for dy in 0..2 {
                for dx in 0..2 {
                    let (x, y) = (cx + dx, cy + dy);
                    let green = if pattern.channel_at(x, y) == Channel::Green {
                        cfa.get(x, y)
                    } else {
                        cfa.get(cx + (1 - dx), y)
                    };
                    let i = y * w + x;
                    out.planes[0][i] = red;
                    out.planes[1][i] = green;
                    out.planes[2][i] = blue;
                }
            }
        }
    }
    out
}

// Gradient-corrected bilinear kernels as (dx, dy, weight), weights in sixteenths.
const G_AT_RB: [(isize, isize, i64); 9] = [
    (0, 0, 8),
    (-1, 0, 4),
    (1, 0, 4),
    (0, -1, 4),
    (0, 1, 4),
    (-2, 0, -2),
    (2, 0, -2),
    (0, -2, -2),
    (0, 2, -2),
];

/// Colour whose samples sit left/right of the green site.
const ROW_NEIGHBOUR_AT_G: [(isize, isize, i64); 11] = [
    (0, 0, 10),
    (-1, 0, 8),
    (1, 0, 8),
    (-2, 0, -2),
    (2, 0, -2),
    (-1, -1, -2),
    (1, -1, -2),
    (-1, 1, -2),
    (1, 1, -2),
    (0, -2, 1),
    (0, 2, 1),
];

/// Colour whose samples sit above/below the green site.
const COL_NEIGHBOUR_AT_G: [(isize, isize, i64); 11] = [
    (0, 0, 10),
    (0, -1, 8),
    (0, 1, 8),
    (0, -2, -2),
    (0, 2, -2),
    (-1, -1, -2),
    (1, -1, -2),
    (-1, 1, -2),
    (1, 1, -2),
    (-2, 0, 1),
    (2, 0, 1),
];

/// Opposite chroma at a red or blue site.
const DIAGONAL_AT_RB: [(isize, isize, i64); 9] = [
    (0, 0, 12),
    (-1, -1, 4),
    (1, -1, 4),
    (-1, 1, 4),
    (1, 1, 4),
    (-2, 0, -3),
    (2, 0, -3),
    (0, -2, -3),
    (0, 2, -3),
];

fn demosaic_gradient_corrected(cfa: &CfaImage) -> RgbImage16 {
    let (w, h) = (cfa.width(), cfa.height());
    let pattern = cfa.pattern();
    let white = cfa.white_level() as i64;
    let src = cfa.samples();
    let mut out = RgbImage16::new(w, h, cfa.white_level());

    let apply = |x: usize, y: usize, kernel: &[(isize, isize, i64)], denom: i64| -> u16 {
        let mut acc = 0i64;
        for &(dx, dy, wgt) in kernel {
            let sx = reflect(x as isize + dx, w);
            let sy = reflect(y as isize + dy, h);
            acc += wgt * src[sy * w + sx] as i64;
        }
        // round half away from zero, then clamp to the sensor range
        let q = if acc >= 0 {
            (2 * acc + denom) / (2 * denom)
        } else {
            -((-2 * acc + denom) / (2 * denom))
        };
        q.clamp(0, white) as u16
    };

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let here = src[i];
            let [r, g, b] = match pattern.channel_at(x, y) {
                Channel::Green => {
                    let horizontal = pattern.channel_at(reflect(x as isize + 1, w), y);
                    let row = apply(x, y, &ROW_NEIGHBOUR_AT_G, 16);
                    let col = apply(x, y, &COL_NEIGHBOUR_AT_G, 16);
                    if horizontal == Channel::Red {
                        [row, here, col]
                    } else {
                        [col, here, row]
                    }
                }
                Channel::Red => [here, apply(x, y, &G_AT_RB, 16), apply(x, y, &DIAGONAL_AT_RB, 16)],
                Channel::Blue => [apply(x, y, &DIAGONAL_AT_RB, 16), apply(x, y, &G_AT_RB, 16), here],
            };
            out.planes[0][i] = r;
            out.planes[1][i] = g;
            out.planes[2][i] = b;
        }
    }
    out
}
