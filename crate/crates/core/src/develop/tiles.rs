use crate::rawio::{GreyImage8, RgbImage16, RgbImage8};

use super::{DevelopError, Stage};

/// Luma weights in units of 1/10000.
const GREY_WEIGHTS: [u32; 3] = [2989, 5870, 1140];

/// `round(0.2989 R + 0.5870 G + 0.1140 B)`, half away from zero, clamped.
pub fn grey_value(rgb: [u8; 3]) -> u8 {
    let acc: u32 = rgb.iter().zip(GREY_WEIGHTS).map(|(&c, w)| c as u32 * w).sum();
    ((acc + 5000) / 10000).min(255) as u8
}

pub fn to_grey(img: &RgbImage8) -> GreyImage8 {
    GreyImage8 {
        width: img.width,
        height: img.height,
        data: img
            .data
            .chunks_exact(3)
            .map(|p| grey_value([p[0], p[1], p[2]]))
            .collect(),
    }
}

/// `round(v * 255 / white_level)` per sample.
pub fn quantize_to_8bit(img: &RgbImage16) -> RgbImage8 {
    let white = img.white_level as u64;
    let scale = |v: u16| ((2 * v.min(img.white_level) as u64 * 255 + white) / (2 * white)) as u8;
    let n = img.width * img.height;
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        data.extend(img.planes.iter().map(|p| scale(p[i])));
    }
    RgbImage8 {
        width: img.width,
        height: img.height,
        data,
    }
}

/// 8-bit interleaved raster that can be cut into rectangular pieces.
pub trait Raster8: Sized {
    const CHANNELS: usize;
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn data(&self) -> &[u8];
    fn from_parts(width: usize, height: usize, data: Vec<u8>) -> Self;
}

impl Raster8 for GreyImage8 {
    const CHANNELS: usize = 1;
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn data(&self) -> &[u8] {
        &self.data
    }
    fn from_parts(width: usize, height: usize, data: Vec<u8>) -> Self {
        GreyImage8 { width, height, data }
    }
}

impl Raster8 for RgbImage8 {
    const CHANNELS: usize = 3;
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn data(&self) -> &[u8] {
        &self.data
    }
    fn from_parts(width: usize, height: usize, data: Vec<u8>) -> Self {
        RgbImage8 { width, height, data }
    }
}

pub const TILE_GRID: usize = 4;
pub const TILE_SIDE: usize = 256;

/// Sixteen tiles of one parent, row-major: tile `k` sits at grid cell
/// `(k / 4, k % 4)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileSet<I> {
    pub parent_id: String,
    pub tiles: Vec<I>,
}

impl<I: Raster8> TileSet<I> {
    pub fn tile_side(&self) -> usize {
        self.tiles.first().map_or(0, Raster8::width)
    }

    /// Pastes the tiles back into the parent image.
    pub fn assemble(&self) -> I {
        let side = self.tile_side();
        let full = side * TILE_GRID;
        let c = I::CHANNELS;
        let mut data = vec![0u8; full * full * c];
        for (k, tile) in self.tiles.iter().enumerate() {
            let (ty, tx) = (k / TILE_GRID, k % TILE_GRID);
            for row in 0..side {
                let dst = ((ty * side + row) * full + tx * side) * c;
                data[dst..dst + side * c].copy_from_slice(&tile.data()[row * side * c..(row + 1) * side * c]);
            }
        }
        I::from_parts(full, full, data)
    }
}

/// Cuts a square image whose side is a multiple of 4 into a 4x4 grid.
pub fn split_grid<I: Raster8>(img: &I, parent_id: &str) -> Result<TileSet<I>, DevelopError> {
    let (w, h) = (img.width(), img.height());
    if w != h || w == 0 || w % TILE_GRID != 0 {
        return Err(DevelopError::new(
            Stage::Tile,
            format!("cannot cut a {w}x{h} image into a 4x4 grid of squares"),
        ));
    }
    let side = w / TILE_GRID;
    let c = I::CHANNELS;
    let tiles = (0..TILE_GRID * TILE_GRID)
        .map(|k| {
            let (ty, tx) = (k / TILE_GRID, k % TILE_GRID);
            let mut data = Vec::with_capacity(side * side * c);
            for row in 0..side {
                let src = ((ty * side + row) * w + tx * side) * c;
                data.extend_from_slice(&img.data()[src..src + side * c]);
            }
            I::from_parts(side, side, data)
        })
        .collect();
    Ok(TileSet {
        parent_id: parent_id.to_string(),
        tiles,
    })
}

/// Splits a 1024x1024 image into sixteen 256x256 tiles.
pub fn tile16<I: Raster8>(img: &I, parent_id: &str) -> Result<TileSet<I>, DevelopError> {
    let full = TILE_SIDE * TILE_GRID;
    if img.width() != full || img.height() != full {
        return Err(DevelopError::new(
            Stage::Tile,
            format!("expected a {full}x{full} image, got {}x{}", img.width(), img.height()),
        ));
    }
    split_grid(img, parent_id)
}
