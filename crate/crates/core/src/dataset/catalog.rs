use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;

/// The six RAW databases the corpus is developed from. Declaration order is
/// the tie-break order used by every apportionment in this module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "ALASKA2")]
    Alaska2,
    #[serde(rename = "BOSS")]
    Boss,
    #[serde(rename = "StegoAppDB")]
    StegoAppDb,
    Wesaturate,
    #[serde(rename = "RAISE")]
    Raise,
    Dresden,
}

impl Source {
    pub const ALL: [Source; 6] = [
        Source::Alaska2,
        Source::Boss,
        Source::StegoAppDb,
        Source::Wesaturate,
        Source::Raise,
        Source::Dresden,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Alaska2 => "ALASKA2",
            Source::Boss => "BOSS",
            Source::StegoAppDb => "StegoAppDB",
            Source::Wesaturate => "Wesaturate",
            Source::Raise => "RAISE",
            Source::Dresden => "Dresden",
        }
    }

    /// RAW image count of the full database.
    pub fn full_count(self) -> usize {
        match self {
            Source::Alaska2 => 80_005,
            Source::Boss => 10_000,
            Source::StegoAppDb => 24_120,
            Source::Wesaturate => 3_648,
            Source::Raise => 8_156,
            Source::Dresden => 1_491,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    /// Case-insensitive; "StegoApp" is accepted for StegoAppDB.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let l = s.to_ascii_lowercase();
        Source::ALL
            .into_iter()
            .find(|src| src.as_str().to_ascii_lowercase() == l)
            .or((l == "stegoapp").then_some(Source::StegoAppDb))
            .ok_or_else(|| format!("unknown source {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub image_id: String,
    pub source: Source,
    pub cfa_path: PathBuf,
}

/// Entries sorted by id, ids unique.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceCatalog {
    entries: Vec<CatalogEntry>,
    counts: BTreeMap<Source, usize>,
}

impl SourceCatalog {
    pub fn from_entries(mut entries: Vec<CatalogEntry>) -> Result<Self, DatasetError> {
        entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].image_id == w[1].image_id) {
            return Err(DatasetError::Catalog(format!(
                "duplicate image id {} ({} and {})",
                w[0].image_id,
                w[0].cfa_path.display(),
                w[1].cfa_path.display()
            )));
        }
        let mut counts = BTreeMap::new();
        for e in &entries {
            *counts.entry(e.source).or_insert(0) += 1;
        }
        Ok(SourceCatalog { entries, counts })
    }

    /// A path-less catalog with `n` entries per listed source, ids
    /// `<SOURCE>_<index:06>`.
    pub fn synthetic(counts: &[(Source, usize)]) -> Self {
        let entries = counts
            .iter()
            .flat_map(|&(source, n)| {
                (0..n).map(move |i| CatalogEntry {
                    image_id: format!("{source}_{i:06}"),
                    source,
                    cfa_path: PathBuf::new(),
                })
            })
            .collect();
        // ids are unique by construction unless a source is listed twice
        Self::from_entries(entries).expect("synthetic catalog lists a source twice")
    }

    /// Synthetic catalog with the full database sizes (127,420 images).
    pub fn full_scale() -> Self {
        Self::synthetic(&Source::ALL.map(|s| (s, s.full_count())))
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Per-source counts; sources without images are absent.
    pub fn counts(&self) -> &BTreeMap<Source, usize> {
        &self.counts
    }

    pub fn count(&self, source: Source) -> usize {
        self.counts.get(&source).copied().unwrap_or(0)
    }

    pub fn get(&self, image_id: &str) -> Option<&CatalogEntry> {
        self.entries
            .binary_search_by(|e| e.image_id.as_str().cmp(image_id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Directory name → source, using the canonical source names.
pub fn default_source_map() -> BTreeMap<String, Source> {
    Source::ALL.into_iter().map(|s| (s.as_str().to_string(), s)).collect()
}

/// Enumerates `<root>/<dir>/*.pgm` for every directory in `source_map`.
/// Missing directories contribute nothing; the image id is
/// `<SOURCE>_<file stem>`.
pub fn build_catalog(root: &Path, source_map: &BTreeMap<String, Source>) -> Result<SourceCatalog, DatasetError> {
    let mut entries = Vec::new();
    for (dir, &source) in source_map {
        let dir = root.join(dir);
        if !dir.is_dir() {
            continue;
        }
        let listing = std::fs::read_dir(&dir).map_err(|e| DatasetError::io(&dir, e))?;
        for item in listing {
            let path = item.map_err(|e| DatasetError::io(&dir, e))?.path();
            let is_cfa = path.is_file() && path.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm"));
            if !is_cfa {
                continue;
            }
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| DatasetError::Catalog(format!("non-UTF-8 file name {}", path.display())))?;
            entries.push(CatalogEntry {
                image_id: format!("{source}_{stem}"),
                source,
                cfa_path: path.clone(),
            });
        }
    }
    SourceCatalog::from_entries(entries)
}
