//! Insecure ±1 coefficient flipping, only so that cover/stego pairing can be
//! exercised end to end. It is trivially detectable; do not use it to hide
//! anything.

use rand::seq::index;
use rand::Rng;

use super::{digest_hex, DatasetError};
use crate::jpeg::{decode_coefficients, encode_coefficients, CoefficientImage, JpegError};
use crate::rng;

/// AC coefficients are limited to category 10 in baseline Huffman coding.
const AC_LIMIT: i32 = 1023;

pub fn nonzero_ac_count(img: &CoefficientImage) -> usize {
    img.components
        .iter()
        .flat_map(|c| c.blocks.iter())
        .map(|b| b[1..].iter().filter(|&&v| v != 0).count())
        .sum()
}

/// Changes `round(rate * n)` of the `n` nonzero AC coefficients of a grey
/// baseline JPEG by ±1 and re-emits it with the cover's tables.
///
/// Selected ±1 entries move away from zero so the nonzero set is unchanged.
/// The choice is keyed by `seed` and the cover's SHA-256.
pub fn toy_embed(cover: &[u8], rate: f64, seed: u64) -> Result<Vec<u8>, DatasetError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(DatasetError::Argument(format!("embedding rate {rate} outside [0, 1]")));
    }
    let (mut img, _) = decode_coefficients(cover)?;
    if img.components.len() != 1 {
        return Err(JpegError::Unsupported("toy embedding takes grey JPEGs only".into()).into());
    }
    let positions: Vec<(usize, usize)> = img.components[0]
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, block)| (1..64).filter(move |&k| block[k] != 0).map(move |k| (b, k)))
        .collect();
    let changes = (rate * positions.len() as f64).round() as usize;
    let mut rng = rng::stream("toy-embed", seed, &digest_hex(cover));
    let chosen = index::sample(&mut rng, positions.len(), changes).into_vec();
    let blocks = &mut img.components[0].blocks;
    for i in chosen {
        let (b, k) = positions[i];
        let v = blocks[b][k];
        let step = if v.abs() == 1 {
            v
        } else if v.abs() == AC_LIMIT {
            -v.signum()
        } else if rng.random::<bool>() {
            1
        } else {
            -1
        };
        blocks[b][k] = v + step;
    }
    Ok(encode_coefficients(&img)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::{encode_jpeg, extract_quant_tables, EncodeInput, QuantChoice};
    use crate::rawio::{GreyImage8, RgbImage8};

    fn cover() -> Vec<u8> {
        let img = GreyImage8::from_fn(128, 96, |x, y| {
            let v = 128.0 + 60.0 * ((x as f64) * 0.21).sin() * ((y as f64) * 0.13).cos() + ((x * 7 + y * 13) % 23) as f64;
            v.clamp(0.0, 255.0) as u8
        });
        encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(75)).unwrap()
    }

    fn changed(a: &CoefficientImage, b: &CoefficientImage) -> usize {
        a.components[0]
            .blocks
            .iter()
            .zip(&b.components[0].blocks)
            .map(|(x, y)| (1..64).filter(|&k| x[k] != y[k]).count())
            .sum()
    }

    #[test]
    fn rate_zero_keeps_coefficients() {
        let c = cover();
        let s = toy_embed(&c, 0.0, 1).unwrap();
        assert_eq!(decode_coefficients(&c).unwrap().0, decode_coefficients(&s).unwrap().0);
    }

    #[test]
    fn rate_point_two() {
        let c = cover();
        let s = toy_embed(&c, 0.2, 7).unwrap();
        let (a, _) = decode_coefficients(&c).unwrap();
        let (b, _) = decode_coefficients(&s).unwrap();
        let n = nonzero_ac_count(&a);
        assert!(n > 1000);
        let frac = changed(&a, &b) as f64 / n as f64;
        assert!((frac - 0.2).abs() <= 0.01, "{frac}");
        assert_eq!(nonzero_ac_count(&b), n);
        // DC untouched
        assert!(a.components[0].blocks.iter().zip(&b.components[0].blocks).all(|(x, y)| x[0] == y[0]));
        assert_eq!(extract_quant_tables(&c).unwrap(), extract_quant_tables(&s).unwrap());
        assert_eq!(s, toy_embed(&c, 0.2, 7).unwrap());
        assert_ne!(s, toy_embed(&c, 0.2, 8).unwrap());
    }

    #[test]
    fn rejects_colour_and_bad_rate() {
        let img = RgbImage8::from_fn(16, 16, |x, _| [x as u8 * 10, 0, 0]);
        let blob = encode_jpeg(EncodeInput::Rgb(&img), &QuantChoice::Quality(75)).unwrap();
        assert!(matches!(toy_embed(&blob, 0.1, 0), Err(DatasetError::Jpeg(JpegError::Unsupported(_)))));
        assert!(matches!(toy_embed(&cover(), 1.5, 0), Err(DatasetError::Argument(_))));
        assert!(matches!(toy_embed(b"nope", 0.1, 0), Err(DatasetError::Jpeg(_))));
    }
}
