//! Orthonormal 8x8 DCT-II / DCT-III in double precision (two matrix products
//! with a fixed summation order), plus the IJG fixed-point inverse used for
//! decoding so output agrees with libjpeg-family decoders.

use std::sync::LazyLock;

/// `BASIS[u][x] = c(u)/2 * cos((2x+1) u pi / 16)`, `c(0) = 1/sqrt(2)`.
static BASIS: LazyLock<[[f64; 8]; 8]> = LazyLock::new(|| {
    let mut m = [[0.0; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let cu = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * cu * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    m
});

/// Forward transform of a row-major block (already level-shifted).
pub fn fdct8x8(block: &[f64; 64]) -> [f64; 64] {
    let b = &*BASIS;
    let mut tmp = [0.0; 64];
    // rows: tmp[y][u] = sum_x f[y][x] B[u][x]
    for y in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for x in 0..8 {
                s += block[y * 8 + x] * b[u][x];
            }
            tmp[y * 8 + u] = s;
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for y in 0..8 {
                s += tmp[y * 8 + u] * b[v][y];
            }
            out[v * 8 + u] = s;
        }
    }
    out
}

/// Inverse transform; the result is not level-shifted.
pub fn idct8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let b = &*BASIS;
    let mut tmp = [0.0; 64];
    // columns: tmp[y][u] = sum_v F[v][u] B[v][y]
    for y in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for v in 0..8 {
                s += coeffs[v * 8 + u] * b[v][y];
            }
            tmp[y * 8 + u] = s;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut s = 0.0;
            for u in 0..8 {
                s += tmp[y * 8 + u] * b[u][x];
            }
            out[y * 8 + x] = s;
        }
    }
    out
}

/// Fixed-point scale of [`idct_islow`] outputs: `sample = (x + 2^17) >> 18`.
pub const ISLOW_SHIFT: u32 = 18;

const CONST_BITS: u32 = 13;
const PASS1_BITS: u32 = 2;
const F0_298: i64 = 2446;
const F0_390: i64 = 3196;
const F0_541: i64 = 4433;
const F0_765: i64 = 6270;
const F0_899: i64 = 7373;
const F1_175: i64 = 9633;
const F1_501: i64 = 12299;
const F1_847: i64 = 15137;
const F1_961: i64 = 16069;
const F2_053: i64 = 16819;
const F2_562: i64 = 20995;
const F3_072: i64 = 25172;

fn descale(x: i64, n: u32) -> i64 {
    (x + (1 << (n - 1))) >> n
}

/// One 8-point pass of the Loeffler-Ligtenberg-Moschytz integer IDCT;
/// returns the eight outputs before descaling, scaled by `2^CONST_BITS`.
fn islow_1d(v: [i64; 8]) -> [i64; 8] {
    let (z2, z3) = (v[2], v[6]);
    let z1 = (z2 + z3) * F0_541;
    let tmp2 = z1 - z3 * F1_847;
    let tmp3 = z1 + z2 * F0_765;
    let tmp0 = (v[0] + v[4]) << CONST_BITS;
    let tmp1 = (v[0] - v[4]) << CONST_BITS;
    let (tmp10, tmp13) = (tmp0 + tmp3, tmp0 - tmp3);
    let (tmp11, tmp12) = (tmp1 + tmp2, tmp1 - tmp2);

    let (mut t0, mut t1, mut t2, mut t3) = (v[7], v[5], v[3], v[1]);
    let z1 = t0 + t3;
    let z2 = t1 + t2;
    let z3 = t0 + t2;
    let z4 = t1 + t3;
    let z5 = (z3 + z4) * F1_175;
    t0 *= F0_298;
    t1 *= F2_053;
    t2 *= F3_072;
    t3 *= F1_501;
    let z1 = -z1 * F0_899;
    let z2 = -z2 * F2_562;
    let z3 = -z3 * F1_961 + z5;
    let z4 = -z4 * F0_390 + z5;
    t0 += z1 + z3;
    t1 += z2 + z4;
    t2 += z2 + z3;
    t3 += z1 + z4;

    [
        tmp10 + t3,
        tmp11 + t2,
        tmp12 + t1,
        tmp13 + t0,
        tmp13 - t0,
        tmp12 - t1,
        tmp11 - t2,
        tmp10 - t3,
    ]
}

/// The IJG "islow" integer inverse DCT (the default of libjpeg and
/// libjpeg-turbo), stopping short of the final descale.
///
/// Input is quantised coefficients and their table, natural order. The
/// result `x` holds `2^ISLOW_SHIFT` times the level-unshifted sample, so
/// `x / 2^18` is the real-valued output and `(x + 2^17) >> 18` the sample
/// libjpeg emits before adding 128 and clamping.
pub fn idct_islow(coeffs: &[i32; 64], quant: &[u16; 64]) -> [i64; 64] {
    let mut ws = [0i64; 64];
    for col in 0..8 {
        let v: [i64; 8] = std::array::from_fn(|r| coeffs[r * 8 + col] as i64 * quant[r * 8 + col] as i64);
        let out = islow_1d(v);
        for r in 0..8 {
            ws[r * 8 + col] = descale(out[r], CONST_BITS - PASS1_BITS);
        }
    }
    let mut out = [0i64; 64];
    for row in 0..8 {
        let v: [i64; 8] = std::array::from_fn(|c| ws[row * 8 + c]);
        out[row * 8..row * 8 + 8].copy_from_slice(&islow_1d(v));
    }
    out
}
