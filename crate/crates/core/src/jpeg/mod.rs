//! Baseline sequential JPEG: encoder, marker-level parser, decoder, and the
//! quantisation-table forensics used when re-compressing foreign files.

mod dct;
mod decoder;
mod encoder;
mod huffman;
pub mod quant;
pub mod tables;

use thiserror::Error;

pub use dct::{fdct8x8, idct8x8, idct_islow, ISLOW_SHIFT};
pub use decoder::{
    decode_coefficients, decode_jpeg, decode_unrounded, decode_unrounded_with, extract_quant_tables, IdctKind, parse_structure, DecodedImage,
    FrameComponent, FrameInfo, HuffmanTable, JpegStructure, MarkerInfo, ScanComponent, ScanInfo, UnroundedImage,
};
pub use encoder::{encode_coefficients, encode_jpeg, CoefficientImage, ComponentCoefficients, EncodeInput, QuantChoice};
pub use quant::{estimate_qf, nonstandard_target, passage_matrix, std_quant_matrix, QfEstimate, QuantMatrix, TableKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JpegError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("truncated stream: {0}")]
    Truncated(String),
    #[error("unsupported JPEG: {0}")]
    Unsupported(String),
    #[error("corrupt entropy-coded data: {0}")]
    CorruptData(String),
    #[error("malformed JPEG: {0}")]
    Format(String),
}

/// Decodes `blob` and re-encodes it at `target` quality.
///
/// With `preserve_nonstandard` the output tables are the input tables carried
/// to `target` by [`nonstandard_target`]; otherwise they are the standard
/// tables for `target`. Grey input stays grey, colour input is re-encoded 4:4:4.
pub fn recompress(blob: &[u8], target: u8, preserve_nonstandard: bool) -> Result<Vec<u8>, JpegError> {
    let (image, structure) = decode_jpeg(blob)?;
    let choice = if preserve_nonstandard {
        let tables = structure
            .quant_tables
            .iter()
            .enumerate()
            .map(|(i, q)| nonstandard_target(q, TableKind::for_component(i), target))
            .collect::<Result<Vec<_>, _>>()?;
        QuantChoice::Explicit(tables)
    } else {
        QuantChoice::Quality(target)
    };
    match &image {
        DecodedImage::Grey(g) => encode_jpeg(EncodeInput::Grey(g), &choice),
        DecodedImage::Rgb(c) => encode_jpeg(EncodeInput::Rgb(c), &choice),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rawio::{GreyImage8, RgbImage8};

    fn textured(seed: u32) -> GreyImage8 {
        GreyImage8::from_fn(64, 48, |x, y| {
            let v = (x as f64 * 0.3).sin() * 50.0 + (y as f64 * 0.17 + seed as f64).cos() * 40.0 + 128.0;
            v.clamp(0.0, 255.0) as u8
        })
    }

    #[test]
    fn recompress_to_standard_tables() {
        let blob = encode_jpeg(EncodeInput::Grey(&textured(1)), &QuantChoice::Quality(95)).unwrap();
        let out = recompress(&blob, 75, false).unwrap();
        assert_eq!(extract_quant_tables(&out).unwrap(), vec![std_quant_matrix(75, TableKind::Luma).unwrap()]);
    }

    #[test]
    fn recompress_constant_is_a_fixed_point() {
        let img = GreyImage8::from_fn(32, 32, |_, _| 128);
        let blob = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(90)).unwrap();
        let once = recompress(&blob, 75, false).unwrap();
        let twice = recompress(&once, 75, false).unwrap();
        assert_eq!(once, twice);
        let (a, _) = decode_jpeg(&twice).unwrap();
        assert_eq!(a, DecodedImage::Grey(img));
    }

    #[test]
    fn recompress_idempotence_on_texture() {
        let once = recompress(
            &encode_jpeg(EncodeInput::Grey(&textured(2)), &QuantChoice::Quality(95)).unwrap(),
            75,
            false,
        )
        .unwrap();
        let twice = recompress(&once, 75, false).unwrap();
        assert_eq!(extract_quant_tables(&once).unwrap(), extract_quant_tables(&twice).unwrap());
        let (DecodedImage::Grey(a), _) = decode_jpeg(&once).unwrap() else { panic!() };
        let (DecodedImage::Grey(b), _) = decode_jpeg(&twice).unwrap() else { panic!() };
        let close = a.data.iter().zip(&b.data).filter(|(p, q)| p.abs_diff(**q) <= 1).count();
        assert!(close as f64 >= 0.99 * a.data.len() as f64);
    }

    #[test]
    fn recompress_preserves_nonstandard_deviation() {
        let mut luma = *std_quant_matrix(90, TableKind::Luma).unwrap().entries();
        luma[9] = 30;
        let chroma = std_quant_matrix(90, TableKind::Chroma).unwrap();
        let tables = vec![QuantMatrix::new(luma).unwrap(), chroma];
        let img = RgbImage8::from_fn(40, 24, |x, y| [(x * 6) as u8, (y * 9) as u8, ((x + y) * 3) as u8]);
        let blob = encode_jpeg(EncodeInput::Rgb(&img), &QuantChoice::Explicit(tables.clone())).unwrap();
        let out = recompress(&blob, 75, true).unwrap();
        let expected = vec![
            nonstandard_target(&tables[0], TableKind::Luma, 75).unwrap(),
            nonstandard_target(&tables[1], TableKind::Chroma, 75).unwrap(),
            nonstandard_target(&tables[1], TableKind::Chroma, 75).unwrap(),
        ];
        assert_eq!(extract_quant_tables(&out).unwrap(), expected);
        assert_ne!(expected[0], std_quant_matrix(75, TableKind::Luma).unwrap());
    }
}
