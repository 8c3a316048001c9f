//! Back-of-envelope storage accounting for a full corpus build.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::develop::TILE_SIDE;

/// Array payload of one decompressed 256x256 grey tile stored as doubles.
pub const DECOMPRESSED_TILE_BYTES: u64 = (TILE_SIDE * TILE_SIDE * 8) as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageFormat {
    /// Demosaicked RAW intermediate, 16-bit RGB TIFF.
    RawTiff16,
    JpegColourCover,
    JpegGreyCover,
    JpegGreyStego,
    MatGreyCover,
    MatGreyStego,
}

impl StorageFormat {
    pub const ALL: [StorageFormat; 6] = [
        StorageFormat::RawTiff16,
        StorageFormat::JpegColourCover,
        StorageFormat::JpegGreyCover,
        StorageFormat::JpegGreyStego,
        StorageFormat::MatGreyCover,
        StorageFormat::MatGreyStego,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StorageFormat::RawTiff16 => "raw-tiff16",
            StorageFormat::JpegColourCover => "jpeg-colour-cover",
            StorageFormat::JpegGreyCover => "jpeg-grey-cover",
            StorageFormat::JpegGreyStego => "jpeg-grey-stego",
            StorageFormat::MatGreyCover => "mat-grey-cover",
            StorageFormat::MatGreyStego => "mat-grey-stego",
        }
    }

    /// Image counts of the largest corpus: every RAW image once, 2M tiles in
    /// each JPEG and MAT format.
    pub fn full_scale_counts() -> BTreeMap<StorageFormat, u64> {
        StorageFormat::ALL
            .into_iter()
            .map(|f| (f, if f == StorageFormat::RawTiff16 { 127_420 } else { 2_000_000 }))
            .collect()
    }
}

impl std::str::FromStr for StorageFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StorageFormat::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown storage format {s:?}"))
    }
}

/// Bytes per image for each format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageModel {
    pub raw_tiff16: u64,
    pub jpeg_colour: u64,
    pub jpeg_grey_cover: u64,
    pub jpeg_grey_stego: u64,
}

impl StorageModel {
    /// A 3000x5000 sensor demosaicked to three 16-bit channels.
    pub const RAW_TIFF16_BYTES: u64 = 3_000 * 5_000 * 3 * 2;

    /// Raw size from [`Self::RAW_TIFF16_BYTES`]; JPEG sizes are measured
    /// means supplied by the caller.
    pub fn with_jpeg_means(jpeg_colour: u64, jpeg_grey_cover: u64, jpeg_grey_stego: u64) -> Self {
        StorageModel {
            raw_tiff16: Self::RAW_TIFF16_BYTES,
            jpeg_colour,
            jpeg_grey_cover,
            jpeg_grey_stego,
        }
    }

    pub fn bytes_per_image(&self, f: StorageFormat) -> u64 {
        match f {
            StorageFormat::RawTiff16 => self.raw_tiff16,
            StorageFormat::JpegColourCover => self.jpeg_colour,
            StorageFormat::JpegGreyCover => self.jpeg_grey_cover,
            StorageFormat::JpegGreyStego => self.jpeg_grey_stego,
            StorageFormat::MatGreyCover | StorageFormat::MatGreyStego => DECOMPRESSED_TILE_BYTES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StorageRow {
    pub format: StorageFormat,
    pub count: u64,
    pub bytes_each: u64,
    pub bytes: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StorageReport {
    pub rows: Vec<StorageRow>,
    pub total: u128,
}

impl StorageReport {
    pub fn bytes(&self, f: StorageFormat) -> u128 {
        self.rows.iter().filter(|r| r.format == f).map(|r| r.bytes).sum()
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<20}{:>12}{:>14}{:>12}{:>8}\n", "format", "images", "bytes each", "TB", "share");
        for r in &self.rows {
            let share = if self.total == 0 { 0.0 } else { 100.0 * r.bytes as f64 / self.total as f64 };
            let _ = writeln!(
                out,
                "{:<20}{:>12}{:>14}{:>12.3}{:>7.1}%",
                r.format.as_str(),
                r.count,
                r.bytes_each,
                r.bytes as f64 / 1e12,
                share
            );
        }
        let _ = writeln!(out, "{:<20}{:>38.3}", "total", self.total as f64 / 1e12);
        out
    }
}

/// Sizes every listed format at `count * bytes_per_image`.
pub fn estimate_storage(counts: &BTreeMap<StorageFormat, u64>, model: &StorageModel) -> StorageReport {
    let rows: Vec<StorageRow> = counts
        .iter()
        .map(|(&format, &count)| {
            let bytes_each = model.bytes_per_image(format);
            StorageRow {
                format,
                count,
                bytes_each,
                bytes: count as u128 * bytes_each as u128,
            }
        })
        .collect();
    let total = rows.iter().map(|r| r.bytes).sum();
    StorageReport { rows, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> StorageModel {
        StorageModel::with_jpeg_means(30_000, 20_000, 20_500)
    }

    #[test]
    fn decompressed_tiles() {
        let one = estimate_storage(&BTreeMap::from([(StorageFormat::MatGreyCover, 1)]), &model());
        assert_eq!(one.total, 524_288);
        let four_m = estimate_storage(
            &BTreeMap::from([(StorageFormat::MatGreyCover, 2_000_000), (StorageFormat::MatGreyStego, 2_000_000)]),
            &model(),
        );
        assert_eq!(four_m.total, 4_000_000 * 256 * 256 * 8);
        assert_eq!(format!("{:.2}", four_m.total as f64 / 1e12), "2.10");
    }

    #[test]
    fn empty_counts() {
        assert_eq!(estimate_storage(&BTreeMap::new(), &model()).total, 0);
        let zero = estimate_storage(&BTreeMap::from([(StorageFormat::RawTiff16, 0)]), &model());
        assert_eq!(zero.total, 0);
    }

    #[test]
    fn full_scale_is_near_thirteen_terabytes() {
        let r = estimate_storage(&StorageFormat::full_scale_counts(), &model());
        let tb = r.total as f64 / 1e12;
        assert!((tb - 13.0).abs() / 13.0 < 0.10, "{tb}");
        assert!(r.to_table().contains("mat-grey-stego"));
        for f in StorageFormat::ALL {
            assert_eq!(f.as_str().parse::<StorageFormat>().unwrap(), f);
        }
    }
}
