use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use devcorpus_core::dataset::{default_source_map, Source, StorageFormat};
use devcorpus_core::paramsample::Profile;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DEVCORPUS_WORKERS";

/// Invalid configuration; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub profile: Profile,
    /// Resolved at load time from flag, file, environment, then CPU count.
    pub workers: Option<usize>,
    pub input: PathBuf,
    pub output: PathBuf,
    pub split_sizes: Vec<usize>,
    pub test_size: usize,
    pub excluded: Vec<Source>,
    pub quality: u8,
    pub embed_rate: Option<f64>,
    /// Chance that a test-profile image is sharpened instead of denoised.
    pub usm_probability: f64,
    pub usm_amount_range: (f64, f64),
    /// Side of the developed square before tiling.
    pub target_side: usize,
    pub colour_tiles: bool,
    /// Input subdirectory → source. Defaults to the canonical source names.
    pub sources: BTreeMap<String, Source>,
    /// Per-format image counts for `estimate-storage`; full scale if empty.
    pub storage: BTreeMap<StorageFormat, u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            profile: Profile::Learning,
            workers: None,
            input: PathBuf::from("raw"),
            output: PathBuf::from("out"),
            split_sizes: Vec::new(),
            test_size: 0,
            excluded: vec![Source::Dresden],
            quality: 75,
            embed_rate: None,
            usm_probability: 0.5,
            usm_amount_range: (0.5, 2.0),
            target_side: 1024,
            colour_tiles: true,
            sources: default_source_map(),
            storage: BTreeMap::new(),
        }
    }
}

/// Flag values that win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub profile: Option<Profile>,
    pub quality: Option<u8>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Reads `path` (if any), applies overrides, resolves the worker count
    /// and validates.
    pub fn load(path: Option<&Path>, o: &Overrides) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = o.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = o.profile {
            cfg.profile = v;
        }
        if let Some(v) = o.quality {
            cfg.quality = v;
        }
        if let Some(v) = &o.out {
            cfg.output = v.clone();
        }
        if let Some(v) = &o.input {
            cfg.input = v.clone();
        }
        cfg.workers = Some(match o.workers.or(cfg.workers) {
            Some(w) => w,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| config_err(format!("{WORKERS_ENV}={v:?} is not a worker count")))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        });
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.workers == Some(0) {
            return Err(config_err("workers must be at least 1"));
        }
        if !(1..=100).contains(&self.quality) {
            return Err(config_err(format!("quality {} outside 1..=100", self.quality)));
        }
        if let Some(r) = self.embed_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(config_err(format!("embed_rate {r} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.usm_probability) {
            return Err(config_err(format!("usm_probability {} outside [0, 1]", self.usm_probability)));
        }
        let (lo, hi) = self.usm_amount_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(config_err(format!("usm_amount_range ({lo}, {hi}) is not an ordered non-negative range")));
        }
        if self.target_side == 0 || self.target_side % 32 != 0 {
            return Err(config_err(format!(
                "target_side {} must be a positive multiple of 32",
                self.target_side
            )));
        }
        if self.split_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("split_sizes must be strictly ascending"));
        }
        Ok(())
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    /// Everything that influences output bytes; goes into the manifest
    /// header. Paths and the worker count are left out on purpose.
    pub fn provenance(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("tool".into(), format!("devcorpus {}", env!("CARGO_PKG_VERSION")).into());
        m.insert("master_seed".into(), self.master_seed.into());
        m.insert("profile".into(), self.profile.to_string().into());
        m.insert("quality".into(), self.quality.into());
        m.insert("target_side".into(), self.target_side.into());
        m.insert("colour_tiles".into(), self.colour_tiles.into());
        m.insert("embed_rate".into(), self.embed_rate.map_or(Value::Null, Value::from));
        m.insert("usm_probability".into(), self.usm_probability.into());
        m.insert("usm_amount_range".into(), vec![self.usm_amount_range.0, self.usm_amount_range.1].into());
        m.insert("test_size".into(), self.test_size.into());
        m.insert("split_sizes".into(), self.split_sizes.clone().into());
        m.insert(
            "excluded".into(),
            self.excluded.iter().map(|s| Value::from(s.as_str())).collect::<Vec<_>>().into(),
        );
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let cfg = RunConfig::from_toml(
            r#"
            master_seed = 9
            profile = "test"
            workers = 3
            input = "in"
            output = "o"
            split_sizes = [10, 20]
            test_size = 5
            excluded = ["Dresden", "BOSS"]
            quality = 80
            embed_rate = 0.2
            target_side = 256
            usm_probability = 0.25
            usm_amount_range = [1.0, 1.5]
            colour_tiles = false
            [sources]
            alaska = "ALASKA2"
            [storage]
            mat-grey-cover = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.profile, Profile::Test);
        assert_eq!((cfg.usm_probability, cfg.usm_amount_range), (0.25, (1.0, 1.5)));
        assert_eq!(cfg.excluded, [Source::Dresden, Source::Boss]);
        assert_eq!(cfg.sources["alaska"], Source::Alaska2);
        assert_eq!(cfg.storage[&StorageFormat::MatGreyCover], 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn flags_win_and_bad_values_are_config_errors() {
        let o = Overrides {
            seed: Some(5),
            workers: Some(2),
            quality: Some(90),
            ..Default::default()
        };
        let cfg = RunConfig::load(None, &o).unwrap();
        assert_eq!((cfg.master_seed, cfg.worker_count(), cfg.quality), (5, 2, 90));

        let bad = Overrides {
            workers: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::load(None, &bad).unwrap_err().downcast_ref::<ConfigError>().is_some());
        assert!(RunConfig::from_toml("unknown_key = 1").is_err());
        assert!(RunConfig::from_toml("profile = \"other\"").is_err());
        let mut c = RunConfig::default();
        c.target_side = 100;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.usm_probability = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn provenance_ignores_workers_and_paths() {
        let mut a = RunConfig::default();
        let mut b = RunConfig::default();
        a.workers = Some(1);
        b.workers = Some(16);
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.provenance(), b.provenance());
    }
}
