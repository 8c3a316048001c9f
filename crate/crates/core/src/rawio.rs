//! Portable sensor-data model.
//!
//! Camera RAW containers are replaced by a 16-bit binary greymap (`P5`,
//! max value 65535, big-endian samples) holding the Bayer mosaic, plus a
//! sidecar `<name>.cfa` text file with `pattern=` and `white_level=` lines.
//! The module also carries the RGB/grey raster types used by the rest of
//! the pipeline and the 8-bit PPM/PGM writers for intermediates.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RawIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed greymap: {0}")]
    Format(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("sidecar metadata: {0}")]
    Metadata(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RawIoError + '_ {
    move |source| RawIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Colour channel of an RGB triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Red = 0,
    Green = 1,
    Blue = 2,
}

/// The four phases of a 2×2 Bayer tile, named by the top row then the bottom row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    pub const ALL: [BayerPattern; 4] = [
        BayerPattern::Rggb,
        BayerPattern::Bggr,
        BayerPattern::Grbg,
        BayerPattern::Gbrg,
    ];

    /// Channel sampled at pixel (x, y).
    pub fn channel_at(self, x: usize, y: usize) -> Channel {
        use Channel::*;
        let tile = match self {
            BayerPattern::Rggb => [[Red, Green], [Green, Blue]],
            BayerPattern::Bggr => [[Blue, Green], [Green, Red]],
            BayerPattern::Grbg => [[Green, Red], [Blue, Green]],
            BayerPattern::Gbrg => [[Green, Blue], [Red, Green]],
        };
        tile[y & 1][x & 1]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BayerPattern::Rggb => "RGGB",
            BayerPattern::Bggr => "BGGR",
            BayerPattern::Grbg => "GRBG",
            BayerPattern::Gbrg => "GBRG",
        }
    }
}

impl fmt::Display for BayerPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BayerPattern {
    type Err = RawIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BayerPattern::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| RawIoError::Metadata(format!("unknown bayer pattern {s:?}")))
    }
}

/// Single-channel linear Bayer mosaic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CfaImage {
    width: usize,
    height: usize,
    pattern: BayerPattern,
    white_level: u16,
    samples: Vec<u16>,
}

impl CfaImage {
    pub fn new(
        width: usize,
        height: usize,
        pattern: BayerPattern,
        white_level: u16,
        samples: Vec<u16>,
    ) -> Result<Self, RawIoError> {
        check_even_dims(width, height)?;
        if samples.len() != width * height {
            return Err(RawIoError::Invariant(format!(
                "{} samples for a {width}x{height} mosaic",
                samples.len()
            )));
        }
        if white_level == 0 {
            return Err(RawIoError::Invariant("white level must be positive".into()));
        }
        if let Some(s) = samples.iter().find(|&&s| s > white_level) {
            return Err(RawIoError::Invariant(format!(
                "sample {s} exceeds white level {white_level}"
            )));
        }
        Ok(CfaImage {
            width,
            height,
            pattern,
            white_level,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pattern(&self) -> BayerPattern {
        self.pattern
    }

    pub fn white_level(&self) -> u16 {
        self.white_level
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    /// Number of sites per channel, in R, G, B order.
    pub fn channel_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for y in 0..self.height {
            for x in 0..self.width {
                counts[self.pattern.channel_at(x, y) as usize] += 1;
            }
        }
        counts
    }
}

fn check_even_dims(width: usize, height: usize) -> Result<(), RawIoError> {
    if width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0 {
        return Err(RawIoError::Invariant(format!(
            "mosaic dimensions must be even and at least 2, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Three-plane 16-bit linear RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage16 {
    pub width: usize,
    pub height: usize,
    pub white_level: u16,
    /// R, G, B planes, each row-major `width * height`.
    pub planes: [Vec<u16>; 3],
}

impl RgbImage16 {
    pub fn new(width: usize, height: usize, white_level: u16) -> Self {
        let n = width * height;
        RgbImage16 {
            width,
            height,
            white_level,
            planes: [vec![0; n], vec![0; n], vec![0; n]],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        white_level: u16,
        mut f: impl FnMut(usize, usize) -> [u16; 3],
    ) -> Self {
        let mut img = RgbImage16::new(width, height, white_level);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    img.planes[c][y * width + x] = px[c];
                }
            }
        }
        img
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u16; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }
}

/// Interleaved 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage8 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage8 {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage8 {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        RgbImage8 {
            width,
            height,
            data,
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// 8-bit single-channel image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreyImage8 {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GreyImage8 {
    pub fn new(width: usize, height: usize) -> Self {
        GreyImage8 {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GreyImage8 {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Path of the sidecar record belonging to a mosaic file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("cfa")
}

pub fn read_cfa(path: &Path) -> Result<CfaImage, RawIoError> {
    let sidecar = sidecar_path(path);
    let meta = match fs::read_to_string(&sidecar) {
        Ok(text) => text,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(RawIoError::Metadata(format!(
                "missing sidecar {}",
                sidecar.display()
            )))
        }
        Err(e) => return Err(io_err(&sidecar)(e)),
    };
    let (pattern, white_level) = parse_sidecar(&meta)?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (width, height, samples) = parse_pgm16(&bytes)?;
    CfaImage::new(width, height, pattern, white_level, samples)
}

pub fn write_cfa(img: &CfaImage, path: &Path) -> Result<(), RawIoError> {
    let mut out = format!("P5\n{} {}\n65535\n", img.width, img.height).into_bytes();
    out.reserve(img.samples.len() * 2);
    for s in &img.samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    fs::write(path, out).map_err(io_err(path))?;
    let sidecar = sidecar_path(path);
    let meta = format!("pattern={}\nwhite_level={}\n", img.pattern, img.white_level);
    fs::write(&sidecar, meta).map_err(io_err(&sidecar))
}

fn parse_sidecar(text: &str) -> Result<(BayerPattern, u16), RawIoError> {
    let mut pattern = None;
    let mut white = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| RawIoError::Metadata(format!("expected key=value, got {line:?}")))?;
        match key.trim() {
            "pattern" => pattern = Some(value.parse::<BayerPattern>()?),
            "white_level" => {
                white = Some(value.trim().parse::<u16>().map_err(|e| {
                    RawIoError::Metadata(format!("bad white_level {value:?}: {e}"))
                })?)
            }
            other => return Err(RawIoError::Metadata(format!("unknown key {other:?}"))),
        }
    }
    match (pattern, white) {
        (Some(p), Some(w)) => Ok((p, w)),
        (None, _) => Err(RawIoError::Metadata("sidecar lacks pattern".into())),
        (_, None) => Err(RawIoError::Metadata("sidecar lacks white_level".into())),
    }
}

/// Splits a binary PNM header into its magic and the three numeric fields,
/// returning the offset of the first raster byte.
fn parse_pnm_header(bytes: &[u8]) -> Result<([u8; 2], [usize; 3], usize), RawIoError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(RawIoError::Format("missing PNM magic".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(RawIoError::Format("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(RawIoError::Format("expected a decimal header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| RawIoError::Format(format!("header field: {e}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((magic, fields, pos + 1)),
        _ => Err(RawIoError::Format("header must end with one whitespace byte".into())),
    }
}

fn parse_pgm16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>), RawIoError> {
    let (magic, [width, height, maxval], offset) = parse_pnm_header(bytes)?;
    if &magic != b"P5" {
        return Err(RawIoError::Format("not a binary greymap (P5)".into()));
    }
    if !(256..=65535).contains(&maxval) {
        return Err(RawIoError::Format(format!(
            "expected a 16-bit greymap, max value is {maxval}"
        )));
    }
    let payload = &bytes[offset..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| RawIoError::Format("dimensions overflow".into()))?;
    if payload.len() < n * 2 {
        return Err(RawIoError::Format(format!(
            "payload holds {} bytes, {} expected",
            payload.len(),
            n * 2
        )));
    }
    let samples = payload[..n * 2]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((width, height, samples))
}

/// Procedural linear-light test scene: a smooth gradient, a handful of
/// flat-coloured discs and bars, a fine sinusoidal texture and mild noise,
/// all drawn from a keyed stream so `(width, height, seed)` fixes the image.
pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> RgbImage16 {
    use rand::Rng;
    let mut rng = crate::rng::stream("synthetic-scene", seed, &format!("{width}x{height}"));
    let (wf, hf) = (width as f64, height as f64);
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.15..0.5));
    let tilt: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.2..0.2));
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..6)
        .map(|_| {
            let r = rng.random_range(0.05..0.25) * wf.min(hf);
            (rng.random_range(0.0..wf), rng.random_range(0.0..hf), r, std::array::from_fn(|_| rng.random_range(0.05..0.95)))
        })
        .collect();
    let bars: Vec<(f64, f64, [f64; 3])> = (0..3)
        .map(|_| {
            let x0 = rng.random_range(0.0..wf);
            (x0, x0 + rng.random_range(0.02..0.1) * wf, std::array::from_fn(|_| rng.random_range(0.05..0.95)))
        })
        .collect();
    let freq = (rng.random_range(0.05..0.4), rng.random_range(0.05..0.4));
    let amp = rng.random_range(0.01..0.06);
    RgbImage16::from_fn(width, height, u16::MAX, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut px: [f64; 3] = std::array::from_fn(|c| base[c] + tilt[c] * (xf / wf - yf / hf));
        for &(cx, cy, r, col) in &discs {
            if (xf - cx).powi(2) + (yf - cy).powi(2) < r * r {
                px = col;
            }
        }
        for &(x0, x1, col) in &bars {
            if xf >= x0 && xf < x1 {
                px = std::array::from_fn(|c| 0.5 * (px[c] + col[c]));
            }
        }
        let texture = amp * (xf * freq.0).sin() * (yf * freq.1).cos();
        std::array::from_fn(|c| {
            let noise = rng.random_range(-0.01..0.01);
            ((px[c] + texture + noise).clamp(0.0, 1.0) * 60_000.0) as u16
        })
    })
}

/// Places each pixel's channel value at the site the pattern assigns to it.
pub fn simulate_cfa(rgb: &RgbImage16, pattern: BayerPattern) -> Result<CfaImage, RawIoError> {
    check_even_dims(rgb.width, rgb.height)?;
    let mut samples = Vec::with_capacity(rgb.width * rgb.height);
    for y in 0..rgb.height {
        for x in 0..rgb.width {
            let c = pattern.channel_at(x, y) as usize;
            samples.push(rgb.planes[c][y * rgb.width + x]);
        }
    }
    Ok(CfaImage {
        width: rgb.width,
        height: rgb.height,
        pattern,
        white_level: u16::MAX,
        samples,
    })
}

/// Writes a binary `P6` pixmap (max value 255).
pub fn write_ppm(img: &RgbImage8, path: &Path) -> Result<(), RawIoError> {
    write_pnm(path, b"P6", img.width, img.height, &img.data)
}

/// Writes a binary `P5` greymap (max value 255).
pub fn write_pgm(img: &GreyImage8, path: &Path) -> Result<(), RawIoError> {
    write_pnm(path, b"P5", img.width, img.height, &img.data)
}

fn write_pnm(path: &Path, magic: &[u8], w: usize, h: usize, data: &[u8]) -> Result<(), RawIoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = io::BufWriter::new(file);
    out.write_all(magic)
        .and_then(|_| write!(out, "\n{w} {h}\n255\n"))
        .and_then(|_| out.write_all(data))
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

/// Reads an 8-bit binary `P5` or `P6` file.
pub fn read_pnm8(path: &Path) -> Result<Pnm8, RawIoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (magic, [width, height, maxval], offset) = parse_pnm_header(&bytes)?;
    if maxval != 255 {
        return Err(RawIoError::Format(format!("expected max value 255, got {maxval}")));
    }
    let channels = match &magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(RawIoError::Format("unsupported PNM variant".into())),
    };
    let n = width * height * channels;
    let data = bytes
        .get(offset..offset + n)
        .ok_or_else(|| RawIoError::Format("truncated raster".into()))?
        .to_vec();
    Ok(if channels == 1 {
        Pnm8::Grey(GreyImage8 {
            width,
            height,
            data,
        })
    } else {
        Pnm8::Rgb(RgbImage8 {
            width,
            height,
            data,
        })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pnm8 {
    Grey(GreyImage8),
    Rgb(RgbImage8),
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant_rgb(w: usize, h: usize, px: [u16; 3]) -> RgbImage16 {
        RgbImage16::from_fn(w, h, u16::MAX, |_, _| px)
    }

    #[test]
    fn reads_constant_mosaic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.pgm");
        let img = CfaImage::new(4, 4, BayerPattern::Rggb, 4095, vec![1000; 16]).unwrap();
        write_cfa(&img, &path).unwrap();
        let back = read_cfa(&path).unwrap();
        assert_eq!(back.samples(), &[1000; 16][..]);
        assert_eq!(back.pattern(), BayerPattern::Rggb);
    }

    #[test]
    fn rejects_odd_width_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("odd.pgm");
        let mut bytes = b"P5\n3 4\n65535\n".to_vec();
        bytes.extend(std::iter::repeat_n(0u8, 24));
        fs::write(&path, bytes).unwrap();
        fs::write(sidecar_path(&path), "pattern=RGGB\nwhite_level=65535\n").unwrap();
        assert!(matches!(read_cfa(&path), Err(RawIoError::Invariant(_))));
    }

    #[test]
    fn missing_sidecar_is_metadata_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lonely.pgm");
        fs::write(&path, b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_cfa(&path), Err(RawIoError::Metadata(_))));
    }

    #[test]
    fn malformed_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, b"P2\n2 2\n65535\n1 2 3 4").unwrap();
        fs::write(sidecar_path(&path), "pattern=RGGB\nwhite_level=65535\n").unwrap();
        assert!(matches!(read_cfa(&path), Err(RawIoError::Format(_))));
        fs::write(&path, b"P5\n2 2\n65535\n\0\0").unwrap();
        assert!(matches!(read_cfa(&path), Err(RawIoError::Format(_))));
    }

    #[test]
    fn payload_is_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.pgm");
        let img = CfaImage::new(2, 2, BayerPattern::Rggb, 4095, vec![100, 200, 300, 400]).unwrap();
        write_cfa(&img, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let payload = &bytes[bytes.len() - 8..];
        assert_eq!(payload, &[0, 100, 0, 200, 1, 44, 1, 144]);
        assert_eq!(bytes.len() - 8, b"P5\n2 2\n65535\n".len());
        let meta = fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(meta.contains("white_level=4095"));
        assert_eq!(read_cfa(&path).unwrap().white_level(), 4095);
    }

    #[test]
    fn sample_above_white_level_rejected() {
        assert!(CfaImage::new(2, 2, BayerPattern::Rggb, 10, vec![0, 0, 11, 0]).is_err());
    }

    #[test]
    fn simulate_places_channels_by_pattern() {
        let rgb = constant_rgb(2, 2, [10, 20, 30]);
        let cfa = simulate_cfa(&rgb, BayerPattern::Rggb).unwrap();
        assert_eq!(cfa.samples(), &[10, 20, 20, 30]);
        assert_eq!(cfa.white_level(), 65535);
        let cfa = simulate_cfa(&rgb, BayerPattern::Gbrg).unwrap();
        assert_eq!(cfa.samples(), &[20, 30, 10, 20]);
    }

    #[test]
    fn simulate_grey_is_constant() {
        let rgb = constant_rgb(6, 4, [777; 3]);
        for p in BayerPattern::ALL {
            assert!(simulate_cfa(&rgb, p).unwrap().samples().iter().all(|&s| s == 777));
        }
    }

    #[test]
    fn simulate_rejects_odd() {
        assert!(simulate_cfa(&constant_rgb(3, 2, [1; 3]), BayerPattern::Rggb).is_err());
    }

    #[test]
    fn pnm8_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = RgbImage8::from_fn(5, 3, |x, y| [x as u8, y as u8, 7]);
        let grey = GreyImage8::from_fn(4, 2, |x, y| (x * 10 + y) as u8);
        write_ppm(&rgb, &dir.path().join("a.ppm")).unwrap();
        write_pgm(&grey, &dir.path().join("a.pgm")).unwrap();
        assert_eq!(read_pnm8(&dir.path().join("a.ppm")).unwrap(), Pnm8::Rgb(rgb));
        assert_eq!(read_pnm8(&dir.path().join("a.pgm")).unwrap(), Pnm8::Grey(grey));
    }

    fn arb_mosaic() -> impl Strategy<Value = CfaImage> {
        (1usize..=32, 1usize..=32, 0usize..4, 1u16..=u16::MAX).prop_flat_map(|(hw, hh, p, wl)| {
            proptest::collection::vec(0..=wl, hw * 2 * hh * 2).prop_map(move |samples| {
                CfaImage::new(hw * 2, hh * 2, BayerPattern::ALL[p], wl, samples).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn cfa_file_round_trip(img in arb_mosaic()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.pgm");
            write_cfa(&img, &path).unwrap();
            prop_assert_eq!(read_cfa(&path).unwrap(), img);
        }

        #[test]
        fn channel_counts_are_bayer(hw in 1usize..40, hh in 1usize..40, p in 0usize..4) {
            let (w, h) = (hw * 2, hh * 2);
            let img = CfaImage::new(w, h, BayerPattern::ALL[p], 1, vec![0; w * h]).unwrap();
            prop_assert_eq!(img.channel_counts(), [w * h / 4, w * h / 2, w * h / 4]);
        }
    }

    #[test]
    fn random_64_mosaic_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(64);
        let samples: Vec<u16> = (0..64 * 64).map(|_| rng.random()).collect();
        let img = CfaImage::new(64, 64, BayerPattern::Bggr, u16::MAX, samples).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.pgm");
        write_cfa(&img, &path).unwrap();
        assert_eq!(read_cfa(&path).unwrap(), img);
    }

    #[test]
    fn synthetic_scenes_are_keyed() {
        let a = synthetic_scene(64, 48, 1);
        assert_eq!(a, synthetic_scene(64, 48, 1));
        assert_ne!(a, synthetic_scene(64, 48, 2));
        assert_eq!((a.width, a.height), (64, 48));
        assert!(a.planes.iter().all(|p| p.iter().any(|&v| v > 0) && p.iter().all(|&v| v <= 60_000)));
    }
}
