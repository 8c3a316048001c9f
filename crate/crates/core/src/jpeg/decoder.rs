use crate::rawio::{GreyImage8, RgbImage8};

use super::dct::{idct8x8, idct_islow, ISLOW_SHIFT};
use super::encoder::{CoefficientImage, ComponentCoefficients};
use super::huffman::{decode_block, BitReader, DecodeTable, HuffSpec};
use super::quant::QuantMatrix;
use super::tables::ZIGZAG;
use super::JpegError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameComponent {
    pub id: u8,
    pub h: u8,
    pub v: u8,
    /// Quantisation table slot.
    pub tq: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameInfo {
    /// SOF marker code (0xC0 baseline, 0xC1 extended sequential).
    pub sof: u8,
    pub width: usize,
    pub height: usize,
    pub components: Vec<FrameComponent>,
}

impl FrameInfo {
    pub fn max_sampling(&self) -> (usize, usize) {
        self.components
            .iter()
            .fold((1, 1), |(h, v), c| (h.max(c.h as usize), v.max(c.v as usize)))
    }

    pub fn is_444(&self) -> bool {
        self.components.iter().all(|c| c.h == self.components[0].h && c.v == self.components[0].v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTable {
    /// 0 = DC, 1 = AC.
    pub class: u8,
    pub id: u8,
    pub bits: [u8; 16],
    pub values: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanComponent {
    /// Index into the frame's component list.
    pub component: usize,
    pub dc_table: u8,
    pub ac_table: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanInfo {
    pub components: Vec<ScanComponent>,
    /// Byte range of the entropy-coded segment (restart markers included).
    pub data_offset: usize,
    pub data_len: usize,
    pub restart_interval: u16,
    tables: Vec<(HuffSpec, HuffSpec)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerInfo {
    pub code: u8,
    /// Offset of the 0xFF byte.
    pub offset: usize,
    /// Segment length field (0 for standalone markers).
    pub length: usize,
}

/// Everything above the entropy-coded data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JpegStructure {
    pub frame: FrameInfo,
    /// Table in force for each frame component when its scan began.
    pub quant_tables: Vec<QuantMatrix>,
    /// Every DHT definition in stream order.
    pub huffman_tables: Vec<HuffmanTable>,
    pub scans: Vec<ScanInfo>,
    pub markers: Vec<MarkerInfo>,
    pub restart_interval: u16,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodedImage {
    Grey(GreyImage8),
    Rgb(RgbImage8),
}

impl DecodedImage {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            DecodedImage::Grey(g) => (g.width, g.height),
            DecodedImage::Rgb(c) => (c.width, c.height),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            DecodedImage::Grey(_) => 1,
            DecodedImage::Rgb(_) => 3,
        }
    }
}

/// Real-valued grey decompression, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct UnroundedImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

fn be16(b: &[u8], i: usize) -> usize {
    u16::from_be_bytes([b[i], b[i + 1]]) as usize
}

fn parse_frame(sof: u8, seg: &[u8]) -> Result<FrameInfo, JpegError> {
    if seg.len() < 6 {
        return Err(JpegError::Format("short frame header".into()));
    }
    if seg[0] != 8 {
        return Err(JpegError::Unsupported(format!("{}-bit sample precision", seg[0])));
    }
    let (height, width, n) = (be16(seg, 1), be16(seg, 3), seg[5] as usize);
    if height == 0 {
        return Err(JpegError::Unsupported("height defined by a DNL marker".into()));
    }
    if width == 0 || n == 0 || seg.len() != 6 + 3 * n {
        return Err(JpegError::Format("inconsistent frame header".into()));
    }
    let components: Vec<FrameComponent> = seg[6..]
        .chunks_exact(3)
        .map(|c| FrameComponent {
            id: c[0],
            h: c[1] >> 4,
            v: c[1] & 15,
            tq: c[2],
        })
        .collect();
    if components.iter().any(|c| !(1..=4).contains(&c.h) || !(1..=4).contains(&c.v) || c.tq > 3) {
        return Err(JpegError::Format("invalid sampling factor or table slot".into()));
    }
    Ok(FrameInfo {
        sof,
        width,
        height,
        components,
    })
}

fn parse_dqt(seg: &[u8], slots: &mut [Option<QuantMatrix>; 4]) -> Result<(), JpegError> {
    let mut i = 0;
    while i < seg.len() {
        let (pq, tq) = (seg[i] >> 4, (seg[i] & 15) as usize);
        let size = if pq == 0 { 64 } else { 128 };
        if pq > 1 || tq > 3 || i + 1 + size > seg.len() {
            return Err(JpegError::Format("malformed DQT segment".into()));
        }
        let mut natural = [0u16; 64];
        for (k, &n) in ZIGZAG.iter().enumerate() {
            natural[n] = if pq == 0 {
                seg[i + 1 + k] as u16
            } else {
                be16(seg, i + 1 + 2 * k) as u16
            };
        }
        slots[tq] = Some(QuantMatrix::new(natural).map_err(|e| JpegError::Format(e.to_string()))?);
        i += 1 + size;
    }
    Ok(())
}

fn parse_dht(seg: &[u8], slots: &mut [[Option<HuffSpec>; 4]; 2], all: &mut Vec<HuffmanTable>) -> Result<(), JpegError> {
    let mut i = 0;
    while i < seg.len() {
        if i + 17 > seg.len() {
            return Err(JpegError::Format("malformed DHT segment".into()));
        }
        let (tc, th) = (seg[i] >> 4, seg[i] & 15);
        if tc > 1 || th > 3 {
            return Err(JpegError::Format(format!("invalid Huffman table class/slot {:#04x}", seg[i])));
        }
        let bits: [u8; 16] = seg[i + 1..i + 17].try_into().expect("16 bytes");
        let n: usize = bits.iter().map(|&b| b as usize).sum();
        if i + 17 + n > seg.len() {
            return Err(JpegError::Format("DHT segment shorter than its code counts".into()));
        }
        let values = &seg[i + 17..i + 17 + n];
        slots[tc as usize][th as usize] = Some(HuffSpec::new(&bits, values)?);
        all.push(HuffmanTable {
            class: tc,
            id: th,
            bits,
            values: values.to_vec(),
        });
        i += 17 + n;
    }
    Ok(())
}

/// Parses markers and headers without decoding entropy-coded data.
pub fn parse_structure(blob: &[u8]) -> Result<JpegStructure, JpegError> {
    if blob.len() < 2 || blob[0] != 0xFF || blob[1] != 0xD8 {
        return Err(JpegError::Format("missing SOI marker; not a JPEG stream".into()));
    }
    let missing_eoi = || JpegError::Truncated("stream ends before the EOI marker".into());
    let mut markers = vec![MarkerInfo {
        code: 0xD8,
        offset: 0,
        length: 0,
    }];
    let mut frame: Option<FrameInfo> = None;
    let mut qslots: [Option<QuantMatrix>; 4] = [None; 4];
    let mut hslots: [[Option<HuffSpec>; 4]; 2] = Default::default();
    let mut huffman_tables = Vec::new();
    let mut quant: Vec<Option<QuantMatrix>> = Vec::new();
    let mut scans = Vec::new();
    let mut restart_interval = 0u16;
    let mut pos = 2;

    loop {
        if pos >= blob.len() {
            return Err(missing_eoi());
        }
        if blob[pos] != 0xFF {
            return Err(JpegError::Format(format!("expected a marker at offset {pos}")));
        }
        while pos < blob.len() && blob[pos] == 0xFF {
            pos += 1;
        }
        if pos >= blob.len() {
            return Err(missing_eoi());
        }
        let offset = pos - 1;
        let code = blob[pos];
        pos += 1;
        match code {
            0xD9 => {
                markers.push(MarkerInfo {
                    code,
                    offset,
                    length: 0,
                });
                break;
            }
            0x01 | 0xD0..=0xD7 => {
                markers.push(MarkerInfo {
                    code,
                    offset,
                    length: 0,
                });
                continue;
            }
            0xD8 => return Err(JpegError::Format(format!("second SOI at offset {offset}"))),
            0x00 => return Err(JpegError::Format(format!("stuffed byte outside a scan at offset {offset}"))),
            _ => {}
        }
        if pos + 2 > blob.len() {
            return Err(missing_eoi());
        }
        let length = be16(blob, pos);
        if length < 2 {
            return Err(JpegError::Format(format!("segment length {length} at offset {offset}")));
        }
        if pos + length > blob.len() {
            return Err(JpegError::Truncated(format!("segment {code:#04x} at offset {offset} runs past the end")));
        }
        let seg = &blob[pos + 2..pos + length];
        markers.push(MarkerInfo { code, offset, length });
        pos += length;

        match code {
            0xC0 | 0xC1 => {
                if frame.is_some() {
                    return Err(JpegError::Unsupported("multiple frames".into()));
                }
                let f = parse_frame(code, seg)?;
                quant = vec![None; f.components.len()];
                frame = Some(f);
            }
            0xC2 | 0xC6 => return Err(JpegError::Unsupported("progressive DCT".into())),
            0xC3 | 0xC7 => return Err(JpegError::Unsupported("lossless coding".into())),
            0xC5 => return Err(JpegError::Unsupported("hierarchical coding".into())),
            0xC9..=0xCB | 0xCD..=0xCF | 0xCC => {
                return Err(JpegError::Unsupported("arithmetic coding".into()))
            }
            0xC4 => parse_dht(seg, &mut hslots, &mut huffman_tables)?,
            0xDB => parse_dqt(seg, &mut qslots)?,
            0xDD => {
                if seg.len() != 2 {
                    return Err(JpegError::Format("malformed DRI segment".into()));
                }
                restart_interval = be16(seg, 0) as u16;
            }
            0xDA => {
                let f = frame
                    .as_ref()
                    .ok_or_else(|| JpegError::Format("scan before frame header".into()))?;
                let ns = *seg.first().unwrap_or(&0) as usize;
                if ns == 0 || ns > 4 || seg.len() != 4 + 2 * ns {
                    return Err(JpegError::Format("malformed scan header".into()));
                }
                let (ss, se, a) = (seg[1 + 2 * ns], seg[2 + 2 * ns], seg[3 + 2 * ns]);
                if ss != 0 || se != 63 || a != 0 {
                    return Err(JpegError::Unsupported("spectral selection or successive approximation".into()));
                }
                let mut comps = Vec::with_capacity(ns);
                let mut tables = Vec::with_capacity(ns);
                for c in seg[1..1 + 2 * ns].chunks_exact(2) {
                    let idx = f
                        .components
                        .iter()
                        .position(|fc| fc.id == c[0])
                        .ok_or_else(|| JpegError::Format(format!("scan names unknown component {}", c[0])))?;
                    let (td, ta) = (c[1] >> 4, c[1] & 15);
                    let pick = |class: usize, id: u8| {
                        hslots[class]
                            .get(id as usize)
                            .cloned()
                            .flatten()
                            .ok_or_else(|| JpegError::Format(format!("scan uses undefined Huffman table {class}/{id}")))
                    };
                    tables.push((pick(0, td)?, pick(1, ta)?));
                    let tq = f.components[idx].tq as usize;
                    if quant[idx].is_none() {
                        quant[idx] = Some(qslots[tq].ok_or_else(|| {
                            JpegError::Format(format!("no DQT table in slot {tq} for component {}", c[0]))
                        })?);
                    }
                    comps.push(ScanComponent {
                        component: idx,
                        dc_table: td,
                        ac_table: ta,
                    });
                }
                if ns > 1 {
                    let blocks: usize = comps
                        .iter()
                        .map(|c| f.components[c.component].h as usize * f.components[c.component].v as usize)
                        .sum();
                    if blocks > 10 {
                        return Err(JpegError::Format("more than 10 blocks per MCU".into()));
                    }
                }
                // entropy-coded data runs to the next non-RST marker
                let start = pos;
                loop {
                    if pos + 1 >= blob.len() {
                        return Err(missing_eoi());
                    }
                    if blob[pos] == 0xFF {
                        let n = blob[pos + 1];
                        if n == 0x00 || (0xD0..=0xD7).contains(&n) {
                            pos += 2;
                            continue;
                        }
                        if n != 0xFF {
                            break;
                        }
                    }
                    pos += 1;
                }
                scans.push(ScanInfo {
                    components: comps,
                    data_offset: start,
                    data_len: pos - start,
                    restart_interval,
                    tables,
                });
            }
            _ => {} // APPn, COM, DNL-free extensions
        }
    }

    let frame = frame.ok_or_else(|| JpegError::Format("no frame header".into()))?;
    if scans.is_empty() {
        return Err(JpegError::Format("no scan".into()));
    }
    // components never scanned still report their slot's table, if any
    let quant_tables = quant
        .iter()
        .zip(&frame.components)
        .map(|(q, c)| {
            q.or(qslots[c.tq as usize])
                .ok_or_else(|| JpegError::Format(format!("missing DQT table for component {}", c.id)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JpegStructure {
        frame,
        quant_tables,
        huffman_tables,
        scans,
        markers,
        restart_interval,
    })
}

/// Quantisation table of each frame component, natural order.
pub fn extract_quant_tables(blob: &[u8]) -> Result<Vec<QuantMatrix>, JpegError> {
    Ok(parse_structure(blob)?.quant_tables)
}

/// Entropy-decodes every scan into quantised coefficients (natural order).
pub fn decode_coefficients(blob: &[u8]) -> Result<(CoefficientImage, JpegStructure), JpegError> {
    let st = parse_structure(blob)?;
    let f = &st.frame;
    let (hmax, vmax) = f.max_sampling();
    let mcux = f.width.div_ceil(8 * hmax);
    let mcuy = f.height.div_ceil(8 * vmax);
    let mut comps: Vec<ComponentCoefficients> = f
        .components
        .iter()
        .map(|c| {
            let (bw, bh) = (mcux * c.h as usize, mcuy * c.v as usize);
            ComponentCoefficients {
                id: c.id,
                h: c.h,
                v: c.v,
                blocks_w: bw,
                blocks_h: bh,
                blocks: vec![[0; 64]; bw * bh],
            }
        })
        .collect();

    for scan in &st.scans {
        let tables: Vec<(DecodeTable, DecodeTable)> = scan
            .tables
            .iter()
            .map(|(dc, ac)| (DecodeTable::new(dc), DecodeTable::new(ac)))
            .collect();
        let mut reader = BitReader::new(&blob[scan.data_offset..scan.data_offset + scan.data_len]);
        let mut preds = vec![0i32; scan.components.len()];
        let mut zz = [0i32; 64];

        // (component slot in scan, block x, block y) for each block of each MCU
        let mut mcu_blocks: Vec<Vec<(usize, usize, usize)>> = Vec::new();
        if scan.components.len() == 1 {
            let fc = &f.components[scan.components[0].component];
            let cw = (f.width * fc.h as usize).div_ceil(hmax).div_ceil(8);
            let ch = (f.height * fc.v as usize).div_ceil(vmax).div_ceil(8);
            for by in 0..ch {
                for bx in 0..cw {
                    mcu_blocks.push(vec![(0, bx, by)]);
                }
            }
        } else {
            for my in 0..mcuy {
                for mx in 0..mcux {
                    let mut list = Vec::new();
                    for (s, sc) in scan.components.iter().enumerate() {
                        let fc = &f.components[sc.component];
                        for v in 0..fc.v as usize {
                            for h in 0..fc.h as usize {
                                list.push((s, mx * fc.h as usize + h, my * fc.v as usize + v));
                            }
                        }
                    }
                    mcu_blocks.push(list);
                }
            }
        }

        let ri = scan.restart_interval as usize;
        let mut rst = 0u8;
        let total = mcu_blocks.len();
        for (m, blocks) in mcu_blocks.iter().enumerate() {
            for &(s, bx, by) in blocks {
                zz.fill(0);
                let (dc, ac) = &tables[s];
                decode_block(&mut reader, &mut zz, &mut preds[s], dc, ac)?;
                let comp = &mut comps[scan.components[s].component];
                let blk = &mut comp.blocks[by * comp.blocks_w + bx];
                for (k, &n) in ZIGZAG.iter().enumerate() {
                    blk[n] = zz[k];
                }
            }
            if ri > 0 && (m + 1) % ri == 0 && m + 1 < total {
                reader.restart(rst)?;
                rst = (rst + 1) & 7;
                preds.fill(0);
            }
        }
    }

    let img = CoefficientImage {
        width: f.width,
        height: f.height,
        components: comps,
        quant: st.quant_tables.clone(),
    };
    Ok((img, st))
}

/// Inverse transform used when turning coefficients back into samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IdctKind {
    /// IJG fixed-point transform; integer output agrees with libjpeg.
    #[default]
    Islow,
    /// Double-precision orthonormal transform.
    Float,
}

/// Dequantised, inverse-transformed, level-shifted real samples of one
/// component over its full block grid.
fn component_samples(c: &ComponentCoefficients, q: &QuantMatrix, kind: IdctKind) -> Vec<f64> {
    let stride = c.blocks_w * 8;
    let scale = (1u64 << ISLOW_SHIFT) as f64;
    let mut out = vec![0.0; stride * c.blocks_h * 8];
    for by in 0..c.blocks_h {
        for bx in 0..c.blocks_w {
            let blk = c.block(bx, by);
            let s: [f64; 64] = match kind {
                IdctKind::Islow => idct_islow(blk, q.entries()).map(|x| x as f64 / scale),
                IdctKind::Float => idct8x8(&std::array::from_fn(|i| (blk[i] * q.entries()[i] as i32) as f64)),
            };
            for y in 0..8 {
                let row = &mut out[(by * 8 + y) * stride + bx * 8..][..8];
                for (o, v) in row.iter_mut().zip(&s[y * 8..y * 8 + 8]) {
                    *o = v + 128.0;
                }
            }
        }
    }
    out
}

/// 8-bit samples of one component, exactly as libjpeg's islow path: final
/// descale rounds half up, then the level shift and clamp.
fn component_bytes(c: &ComponentCoefficients, q: &QuantMatrix) -> Vec<u8> {
    let stride = c.blocks_w * 8;
    let half = 1i64 << (ISLOW_SHIFT - 1);
    let mut out = vec![0u8; stride * c.blocks_h * 8];
    for by in 0..c.blocks_h {
        for bx in 0..c.blocks_w {
            let x = idct_islow(c.block(bx, by), q.entries());
            for y in 0..8 {
                let row = &mut out[(by * 8 + y) * stride + bx * 8..][..8];
                for (o, v) in row.iter_mut().zip(&x[y * 8..y * 8 + 8]) {
                    *o = (((v + half) >> ISLOW_SHIFT) + 128).clamp(0, 255) as u8;
                }
            }
        }
    }
    out
}

/// JFIF YCbCr to RGB in libjpeg's 16-bit fixed point.
fn ycc_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    const HALF: i64 = 1 << 15;
    let (cb, cr) = (cb as i64 - 128, cr as i64 - 128);
    let y = y as i64;
    let r = y + ((91881 * cr + HALF) >> 16);
    let g = y + ((-22554 * cb + HALF - 46802 * cr) >> 16);
    let b = y + ((116130 * cb + HALF) >> 16);
    [r, g, b].map(|v| v.clamp(0, 255) as u8)
}

/// Baseline decode to 8-bit samples. Subsampled chroma is upsampled by
/// replication; three-component frames are taken as JFIF YCbCr.
pub fn decode_jpeg(blob: &[u8]) -> Result<(DecodedImage, JpegStructure), JpegError> {
    let (coeffs, st) = decode_coefficients(blob)?;
    let f = &st.frame;
    let (w, h) = (f.width, f.height);
    let (hmax, vmax) = f.max_sampling();
    if coeffs.components.len() != 1 && coeffs.components.len() != 3 {
        return Err(JpegError::Unsupported(format!("{}-component frames", coeffs.components.len())));
    }
    let planes: Vec<Vec<u8>> = coeffs
        .components
        .iter()
        .zip(&coeffs.quant)
        .map(|(c, q)| {
            let samples = component_bytes(c, q);
            let stride = c.blocks_w * 8;
            let (ch, cv) = (c.h as usize, c.v as usize);
            let mut plane = Vec::with_capacity(w * h);
            for y in 0..h {
                let row = &samples[(y * cv / vmax) * stride..];
                plane.extend((0..w).map(|x| row[x * ch / hmax]));
            }
            plane
        })
        .collect();

    let image = if planes.len() == 1 {
        DecodedImage::Grey(GreyImage8 {
            width: w,
            height: h,
            data: planes.into_iter().next().expect("one plane"),
        })
    } else {
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            data.extend(ycc_to_rgb(planes[0][i], planes[1][i], planes[2][i]));
        }
        DecodedImage::Rgb(RgbImage8 {
            width: w,
            height: h,
            data,
        })
    };
    Ok((image, st))
}

/// Grey decompression without the final rounding and clamping: the exact
/// value the decoder's inverse transform produces before it is cut to 8 bits.
pub fn decode_unrounded(blob: &[u8]) -> Result<UnroundedImage, JpegError> {
    decode_unrounded_with(blob, IdctKind::Islow)
}

pub fn decode_unrounded_with(blob: &[u8], kind: IdctKind) -> Result<UnroundedImage, JpegError> {
    let (coeffs, st) = decode_coefficients(blob)?;
    if coeffs.components.len() != 1 {
        return Err(JpegError::Unsupported("unrounded decoding of colour streams".into()));
    }
    let c = &coeffs.components[0];
    let samples = component_samples(c, &coeffs.quant[0], kind);
    let stride = c.blocks_w * 8;
    let (w, h) = (st.frame.width, st.frame.height);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        data.extend_from_slice(&samples[y * stride..y * stride + w]);
    }
    Ok(UnroundedImage {
        width: w,
        height: h,
        data,
    })
}
