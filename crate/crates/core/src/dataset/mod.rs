//! Corpus bookkeeping: source catalogs, the isolated test partition, nested
//! training subsets, manifests, and the export/storage side of the corpus.

mod catalog;
mod embed;
mod manifest;
mod mat;
mod split;
mod storage;

use thiserror::Error;

pub use catalog::{build_catalog, default_source_map, CatalogEntry, Source, SourceCatalog};
pub use embed::{nonzero_ac_count, toy_embed};
pub use manifest::{digest_hex, Manifest, ManifestRecord, Role, TileRecord};
pub use mat::{export_decompressed, mat_file_len, read_mat_f64, write_mat_f64, MatArray, MAT_NAME};
pub use split::{nested_subsets, partition_test, ratio_report, size_label, RatioReport, RatioRow, SplitPlan, TestPartition};
pub use storage::{estimate_storage, StorageFormat, StorageModel, StorageReport, StorageRow, DECOMPRESSED_TILE_BYTES};

use crate::jpeg::JpegError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("catalog error: {0}")]
    Catalog(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("MAT format error: {0}")]
    Mat(String),
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
