//! The per-image development chain: demosaic, resize/crop, unsharp mask or
//! wavelet denoise, optional micro-contrast, 8-bit quantisation, then the
//! colour and grey 4x4 tilings. Everything stays 16-bit until quantisation.

mod demosaic;
mod denoise;
mod filters;
mod resize;
mod tiles;

use std::fmt;

use thiserror::Error;

use crate::paramsample::DevRecipe;
use crate::rawio::{CfaImage, GreyImage8, RgbImage8};

pub use demosaic::demosaic;
pub use denoise::{pyramid_denoise, LEVELS as DENOISE_LEVELS};
pub use filters::{gaussian_blur, mean_local_variance, micro_contrast, unsharp_mask, unsharp_mask_plane, USM_RADIUS};
pub use resize::{crop_geometry, resize_crop, resize_crop_with, CropGeometry, ResizePolicy, Resized};
pub use tiles::{grey_value, quantize_to_8bit, split_grid, tile16, to_grey, Raster8, TileSet, TILE_GRID, TILE_SIDE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Recipe,
    Demosaic,
    Resize,
    Sharpen,
    Denoise,
    MicroContrast,
    Quantize,
    Tile,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Recipe => "recipe",
            Stage::Demosaic => "demosaic",
            Stage::Resize => "resize",
            Stage::Sharpen => "unsharp-mask",
            Stage::Denoise => "denoise",
            Stage::MicroContrast => "micro-contrast",
            Stage::Quantize => "quantize",
            Stage::Tile => "tile",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{stage} stage: {message}")]
pub struct DevelopError {
    pub stage: Stage,
    pub message: String,
}

impl DevelopError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        DevelopError {
            stage,
            message: message.into(),
        }
    }
}

/// Output of [`develop_image`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Developed {
    /// Full-size 8-bit colour image before tiling.
    pub colour_full: RgbImage8,
    pub grey_full: GreyImage8,
    pub colour: TileSet<RgbImage8>,
    pub grey: TileSet<GreyImage8>,
    pub upscaled: bool,
}

pub fn develop_image(cfa: &CfaImage, recipe: &DevRecipe, image_id: &str) -> Result<Developed, DevelopError> {
    recipe.validate(None).map_err(|m| DevelopError::new(Stage::Recipe, m))?;
    if recipe.target_side % (TILE_GRID * 8) != 0 {
        return Err(DevelopError::new(
            Stage::Recipe,
            format!("target side {} does not give whole 8x8 blocks per tile", recipe.target_side),
        ));
    }

    let rgb = demosaic(cfa, recipe.demosaic);
    let Resized { image: mut rgb, upscaled } = resize_crop(&rgb, recipe.resize_kernel, recipe.target_side)?;

    if recipe.usm_enabled {
        let amount = recipe.usm_amount.unwrap_or(0.0);
        rgb = unsharp_mask(&rgb, amount, USM_RADIUS);
    } else {
        let intensity = recipe.denoise_intensity.unwrap_or(0.0);
        let detail = recipe.denoise_detail.unwrap_or(0);
        rgb = pyramid_denoise(&rgb, intensity, detail);
    }
    if recipe.microcontrast_enabled {
        rgb = micro_contrast(&rgb, recipe.mc_strength.unwrap_or(0.0), recipe.mc_uniformity.unwrap_or(0));
    }

    let colour_full = quantize_to_8bit(&rgb);
    let grey_full = to_grey(&colour_full);
    let colour = split_grid(&colour_full, image_id)?;
    let grey = split_grid(&grey_full, image_id)?;
    Ok(Developed {
        colour_full,
        grey_full,
        colour,
        grey,
        upscaled,
    })
}
