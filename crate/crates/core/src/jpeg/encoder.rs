use crate::rawio::{GreyImage8, RgbImage8};

use super::dct::fdct8x8;
use super::huffman::{encode_block, BitWriter, EncodeTable, HuffSpec};
use super::quant::{std_quant_matrix, QuantMatrix, TableKind};
use super::tables::*;
use super::JpegError;

#[derive(Clone, Copy, Debug)]
pub enum EncodeInput<'a> {
    Grey(&'a GreyImage8),
    Rgb(&'a RgbImage8),
}

impl<'a> From<&'a GreyImage8> for EncodeInput<'a> {
    fn from(img: &'a GreyImage8) -> Self {
        EncodeInput::Grey(img)
    }
}

impl<'a> From<&'a RgbImage8> for EncodeInput<'a> {
    fn from(img: &'a RgbImage8) -> Self {
        EncodeInput::Rgb(img)
    }
}

/// Quantisation tables for the encoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuantChoice {
    /// Standard luminance (and chrominance) tables at this quality.
    Quality(u8),
    /// One table per component; for colour, two tables mean luma + shared
    /// chroma.
    Explicit(Vec<QuantMatrix>),
}

/// Quantised DCT coefficients of one component, natural order per block,
/// blocks in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentCoefficients {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    pub blocks_w: usize,
    pub blocks_h: usize,
    pub blocks: Vec<[i32; 64]>,
}

impl ComponentCoefficients {
    pub fn block(&self, bx: usize, by: usize) -> &[i32; 64] {
        &self.blocks[by * self.blocks_w + bx]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientImage {
    pub width: usize,
    pub height: usize,
    pub components: Vec<ComponentCoefficients>,
    /// Table used by each component.
    pub quant: Vec<QuantMatrix>,
}

fn resolve_tables(choice: &QuantChoice, ncomp: usize) -> Result<Vec<QuantMatrix>, JpegError> {
    match choice {
        QuantChoice::Quality(q) => (0..ncomp).map(|i| std_quant_matrix(*q, TableKind::for_component(i))).collect(),
        QuantChoice::Explicit(t) => match (ncomp, t.len()) {
            (1, 1) | (3, 3) => Ok(t.clone()),
            (3, 2) => Ok(vec![t[0], t[1], t[1]]),
            (n, k) => Err(JpegError::Argument(format!(
                "{k} quantisation tables given for a {n}-component image"
            ))),
        },
    }
}

/// Component planes padded to whole blocks by edge replication.
fn planes(input: EncodeInput) -> (usize, usize, Vec<Vec<f64>>) {
    let (w, h) = match input {
        EncodeInput::Grey(g) => (g.width, g.height),
        EncodeInput::Rgb(c) => (c.width, c.height),
    };
    let (pw, ph) = (w.div_ceil(8) * 8, h.div_ceil(8) * 8);
    let at = |x: usize, y: usize| x.min(w - 1) + y.min(h - 1) * w;
    let out = match input {
        EncodeInput::Grey(g) => {
            let mut p = Vec::with_capacity(pw * ph);
            for y in 0..ph {
                p.extend((0..pw).map(|x| g.data[at(x, y)] as f64));
            }
            vec![p]
        }
        EncodeInput::Rgb(c) => {
            let mut ycc = vec![Vec::with_capacity(pw * ph); 3];
            for y in 0..ph {
                for x in 0..pw {
                    let i = at(x, y) * 3;
                    let (r, g, b) = (c.data[i] as f64, c.data[i + 1] as f64, c.data[i + 2] as f64);
                    ycc[0].push(0.299 * r + 0.587 * g + 0.114 * b);
                    ycc[1].push(-0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b + 128.0);
                    ycc[2].push(0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b + 128.0);
                }
            }
            ycc
        }
    };
    (pw / 8, ph / 8, out)
}

/// Level shift, DCT and quantisation (round half away from zero).
pub(crate) fn forward_blocks(plane: &[f64], bw: usize, bh: usize, q: &QuantMatrix) -> Vec<[i32; 64]> {
    let stride = bw * 8;
    let mut out = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut blk = [0.0; 64];
            for y in 0..8 {
                for x in 0..8 {
                    blk[y * 8 + x] = plane[(by * 8 + y) * stride + bx * 8 + x] - 128.0;
                }
            }
            let f = fdct8x8(&blk);
            out.push(std::array::from_fn(|i| (f[i] / q.entries()[i] as f64).round() as i32));
        }
    }
    out
}

/// Encodes an 8-bit grey or RGB image as baseline JFIF; colour is YCbCr 4:4:4.
///
/// Dimensions that are not multiples of 8 are padded internally by edge
/// replication; the frame header carries the true size.
pub fn encode_jpeg(input: EncodeInput, quant: &QuantChoice) -> Result<Vec<u8>, JpegError> {
    let (w, h, ncomp) = match input {
        EncodeInput::Grey(g) => (g.width, g.height, 1),
        EncodeInput::Rgb(c) => (c.width, c.height, 3),
    };
    if w == 0 || h == 0 || w > 65535 || h > 65535 {
        return Err(JpegError::Argument(format!("cannot encode a {w}x{h} image")));
    }
    let tables = resolve_tables(quant, ncomp)?;
    let (bw, bh, planes) = planes(input);
    let components = planes
        .iter()
        .zip(&tables)
        .enumerate()
        .map(|(i, (p, q))| ComponentCoefficients {
            id: i as u8 + 1,
            h: 1,
            v: 1,
            blocks_w: bw,
            blocks_h: bh,
            blocks: forward_blocks(p, bw, bh, q),
        })
        .collect();
    encode_coefficients(&CoefficientImage {
        width: w,
        height: h,
        components,
        quant: tables,
    })
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&(payload.len() as u16 + 2).to_be_bytes());
    out.extend_from_slice(payload);
}

/// Writes already-quantised coefficients as a baseline stream with the
/// standard Huffman tables. Only unsubsampled 1- or 3-component images.
pub fn encode_coefficients(img: &CoefficientImage) -> Result<Vec<u8>, JpegError> {
    let ncomp = img.components.len();
    if ncomp != 1 && ncomp != 3 {
        return Err(JpegError::Unsupported(format!("{ncomp}-component images")));
    }
    if img.quant.len() != ncomp {
        return Err(JpegError::Argument("one quantisation table per component required".into()));
    }
    let (bw, bh) = (img.width.div_ceil(8), img.height.div_ceil(8));
    for c in &img.components {
        if (c.h, c.v) != (1, 1) {
            return Err(JpegError::Unsupported("chroma subsampling on output".into()));
        }
        if c.blocks_w != bw || c.blocks_h != bh || c.blocks.len() != bw * bh {
            return Err(JpegError::Argument(format!(
                "component {} has {}x{} blocks, expected {bw}x{bh}",
                c.id, c.blocks_w, c.blocks_h
            )));
        }
    }

    // distinct tables get consecutive slots
    let mut slots: Vec<QuantMatrix> = Vec::new();
    let slot_of: Vec<u8> = img
        .quant
        .iter()
        .map(|q| match slots.iter().position(|s| s == q) {
            Some(i) => i as u8,
            None => {
                slots.push(*q);
                slots.len() as u8 - 1
            }
        })
        .collect();

    let mut out = vec![0xFF, 0xD8];
    segment(&mut out, 0xE0, b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00");
    for (i, q) in slots.iter().enumerate() {
        let mut p = vec![i as u8];
        p.extend(ZIGZAG.iter().map(|&n| q.entries()[n] as u8));
        segment(&mut out, 0xDB, &p);
    }
    let mut sof = vec![8];
    sof.extend_from_slice(&(img.height as u16).to_be_bytes());
    sof.extend_from_slice(&(img.width as u16).to_be_bytes());
    sof.push(ncomp as u8);
    for (c, &t) in img.components.iter().zip(&slot_of) {
        sof.extend_from_slice(&[c.id, 0x11, t]);
    }
    segment(&mut out, 0xC0, &sof);

    let mut specs = vec![(0x00, &DC_LUMA_BITS, &DC_LUMA_VALUES[..]), (0x10, &AC_LUMA_BITS, &AC_LUMA_VALUES[..])];
    if ncomp == 3 {
        specs.push((0x01, &DC_CHROMA_BITS, &DC_CHROMA_VALUES[..]));
        specs.push((0x11, &AC_CHROMA_BITS, &AC_CHROMA_VALUES[..]));
    }
    for (tc_th, bits, values) in &specs {
        let mut p = vec![*tc_th];
        p.extend_from_slice(*bits);
        p.extend_from_slice(values);
        segment(&mut out, 0xC4, &p);
    }

    let mut sos = vec![ncomp as u8];
    for (i, c) in img.components.iter().enumerate() {
        let t = if i == 0 { 0x00 } else { 0x11 };
        sos.extend_from_slice(&[c.id, t]);
    }
    sos.extend_from_slice(&[0, 63, 0]);
    segment(&mut out, 0xDA, &sos);

    let spec = |b: &[u8; 16], v: &[u8]| HuffSpec::new(b, v).map(|s| EncodeTable::new(&s));
    let luma = (spec(&DC_LUMA_BITS, &DC_LUMA_VALUES)?, spec(&AC_LUMA_BITS, &AC_LUMA_VALUES)?);
    let chroma = (spec(&DC_CHROMA_BITS, &DC_CHROMA_VALUES)?, spec(&AC_CHROMA_BITS, &AC_CHROMA_VALUES)?);
    let mut w = BitWriter::after(out);
    let mut preds = vec![0i32; ncomp];
    for b in 0..bw * bh {
        for (i, c) in img.components.iter().enumerate() {
            let (dc, ac) = if i == 0 { &luma } else { &chroma };
            let zz: [i32; 64] = std::array::from_fn(|k| c.blocks[b][ZIGZAG[k]]);
            encode_block(&mut w, &zz, &mut preds[i], dc, ac)?;
        }
    }
    w.flush();
    let mut out = w.out;
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::{decode_jpeg, extract_quant_tables, DecodedImage};

    #[test]
    fn minimal_grey_stream_layout() {
        let img = GreyImage8::from_fn(8, 8, |_, _| 128);
        let blob = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(75)).unwrap();
        assert_eq!(&blob[..4], &[0xFF, 0xD8, 0xFF, 0xE0]);
        assert_eq!(&blob[6..11], b"JFIF\0");
        assert_eq!(&blob[blob.len() - 2..], &[0xFF, 0xD9]);
        // DC diff 0 (code 00) then EOB (code 1010), padded with ones
        let sos = blob.windows(2).position(|w| w == [0xFF, 0xDA]).unwrap();
        assert_eq!(&blob[sos + 10..], &[0b0010_1011, 0xFF, 0xD9]);
    }

    #[test]
    fn odd_sizes_are_padded() {
        let img = GreyImage8::from_fn(13, 5, |x, y| (x * 17 + y * 3) as u8);
        let blob = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(100)).unwrap();
        let (DecodedImage::Grey(out), st) = decode_jpeg(&blob).unwrap() else { panic!() };
        assert_eq!((out.width, out.height), (13, 5));
        assert_eq!((st.frame.width, st.frame.height), (13, 5));
        assert!(out.data.iter().zip(&img.data).all(|(a, b)| a.abs_diff(*b) <= 2));
    }

    #[test]
    fn explicit_table_counts_checked() {
        let q = std_quant_matrix(80, TableKind::Luma).unwrap();
        let grey = GreyImage8::new(8, 8);
        let rgb = RgbImage8::new(8, 8);
        assert!(encode_jpeg(EncodeInput::Grey(&grey), &QuantChoice::Explicit(vec![q, q])).is_err());
        assert!(encode_jpeg(EncodeInput::Rgb(&rgb), &QuantChoice::Explicit(vec![q])).is_err());
        assert!(encode_jpeg(EncodeInput::Grey(&GreyImage8::new(0, 8)), &QuantChoice::Quality(75)).is_err());
        assert!(encode_jpeg(EncodeInput::Grey(&grey), &QuantChoice::Quality(0)).is_err());
        let blob = encode_jpeg(EncodeInput::Rgb(&rgb), &QuantChoice::Explicit(vec![q, q, q])).unwrap();
        // identical tables share one slot
        assert_eq!(blob.windows(2).filter(|w| *w == [0xFF, 0xDB]).count(), 1);
        assert_eq!(extract_quant_tables(&blob).unwrap(), vec![q, q, q]);
    }
}
