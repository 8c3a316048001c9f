//! Line-delimited JSON manifest: a header line, then one record per source
//! image sorted by id. Field order is the struct declaration order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{DatasetError, Source};
use crate::jpeg::{extract_quant_tables, parse_structure};
use crate::paramsample::DevRecipe;

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `train-<label>` for the smallest training subset holding the image,
/// `train-pool` for pool images outside every subset, or `test`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Role {
    Train(String),
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Train(label) => write!(f, "train-{label}"),
            Role::Test => f.write_str("test"),
        }
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("train-") {
            Some(label) if !label.is_empty() => Ok(Role::Train(label.to_string())),
            _ if s == "test" => Ok(Role::Test),
            _ => Err(format!("unknown role {s:?}")),
        }
    }
}

impl TryFrom<String> for Role {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Role> for String {
    fn from(r: Role) -> String {
        r.to_string()
    }
}

/// One 256x256 tile. Paths are relative to the output root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRecord {
    pub tile_id: String,
    pub width: usize,
    pub height: usize,
    pub cover_path: String,
    pub cover_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colour_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colour_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stego_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stego_digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image_id: String,
    pub source: Source,
    pub role: Role,
    pub recipe: DevRecipe,
    pub upscaled: bool,
    pub tiles: Vec<TileRecord>,
    /// SHA-256 over the concatenated tile digests (cover, colour, stego).
    pub digest: String,
}

impl ManifestRecord {
    pub fn content_digest(tiles: &[TileRecord]) -> String {
        let mut h = Sha256::new();
        for t in tiles {
            for d in [Some(&t.cover_digest), t.colour_digest.as_ref(), t.stego_digest.as_ref()].into_iter().flatten() {
                h.update(d.as_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    /// Run configuration and anything else worth recording about the run.
    pub header: Map<String, Value>,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn finalize(&mut self) {
        self.records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    }

    pub fn to_jsonl(&self) -> String {
        let mut header = Map::new();
        header.insert("kind".into(), "header".into());
        header.extend(self.header.clone());
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines.next().ok_or_else(|| DatasetError::Manifest("empty manifest".into()))?;
        let mut header: Map<String, Value> =
            serde_json::from_str(first).map_err(|e| DatasetError::Manifest(format!("header: {e}")))?;
        if header.remove("kind") != Some(Value::from("header")) {
            return Err(DatasetError::Manifest("first line is not a header".into()));
        }
        let records = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| DatasetError::Manifest(format!("record {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        Ok(Manifest { header, records })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| DatasetError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        Self::from_jsonl(&text)
    }

    pub fn digest(&self) -> String {
        digest_hex(self.to_jsonl().as_bytes())
    }

    /// Checks every file digest and that each stego tile has the same
    /// dimensions and quantisation tables as its cover.
    pub fn verify(&self, root: &Path) -> Result<(), DatasetError> {
        let read = |rel: &str, digest: &str| -> Result<Vec<u8>, DatasetError> {
            let p = root.join(rel);
            let bytes = std::fs::read(&p).map_err(|e| DatasetError::io(&p, e))?;
            if digest_hex(&bytes) != digest {
                return Err(DatasetError::Manifest(format!("{rel}: content digest mismatch")));
            }
            Ok(bytes)
        };
        for r in &self.records {
            if ManifestRecord::content_digest(&r.tiles) != r.digest {
                return Err(DatasetError::Manifest(format!("{}: record digest mismatch", r.image_id)));
            }
            for t in &r.tiles {
                let cover = read(&t.cover_path, &t.cover_digest)?;
                if let (Some(p), Some(d)) = (&t.colour_path, &t.colour_digest) {
                    read(p, d)?;
                }
                match (&t.stego_path, &t.stego_digest) {
                    (Some(p), Some(d)) => {
                        let stego = read(p, d)?;
                        let (cs, ss) = (parse_structure(&cover)?, parse_structure(&stego)?);
                        let same_geometry = (cs.frame.width, cs.frame.height) == (ss.frame.width, ss.frame.height);
                        if !same_geometry || extract_quant_tables(&cover)? != extract_quant_tables(&stego)? {
                            return Err(DatasetError::Manifest(format!(
                                "{}: stego differs from its cover in geometry or tables",
                                t.tile_id
                            )));
                        }
                    }
                    (None, None) => {}
                    _ => return Err(DatasetError::Manifest(format!("{}: stego path without digest", t.tile_id))),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::toy_embed;
    use crate::jpeg::{encode_jpeg, EncodeInput, QuantChoice};
    use crate::paramsample::{sample_recipe, Profile, SeedSpec};
    use crate::rawio::GreyImage8;

    fn fixture(root: &Path, stego: bool) -> Manifest {
        let img = GreyImage8::from_fn(32, 32, |x, y| ((x * 5 + y * 3) % 200) as u8);
        let cover = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(75)).unwrap();
        std::fs::create_dir_all(root.join("test/cover")).unwrap();
        std::fs::create_dir_all(root.join("test/stego")).unwrap();
        std::fs::write(root.join("test/cover/X_00.jpg"), &cover).unwrap();
        let mut tile = TileRecord {
            tile_id: "X_00".into(),
            width: 32,
            height: 32,
            cover_path: "test/cover/X_00.jpg".into(),
            cover_digest: digest_hex(&cover),
            colour_path: None,
            colour_digest: None,
            stego_path: None,
            stego_digest: None,
        };
        if stego {
            let s = toy_embed(&cover, 0.3, 1).unwrap();
            std::fs::write(root.join("test/stego/X_00.jpg"), &s).unwrap();
            tile.stego_path = Some("test/stego/X_00.jpg".into());
            tile.stego_digest = Some(digest_hex(&s));
        }
        let tiles = vec![tile];
        let mut header = Map::new();
        header.insert("master_seed".into(), 3.into());
        Manifest {
            header,
            records: vec![ManifestRecord {
                image_id: "X".into(),
                source: Source::Boss,
                role: Role::Test,
                recipe: sample_recipe(&SeedSpec::new(3, "X"), Profile::Test),
                upscaled: false,
                digest: ManifestRecord::content_digest(&tiles),
                tiles,
            }],
        }
    }

    #[test]
    fn roles_round_trip() {
        for r in [Role::Test, Role::Train("10k".into()), Role::Train("pool".into())] {
            assert_eq!(r.to_string().parse::<Role>().unwrap(), r);
        }
        assert!("train-".parse::<Role>().is_err());
        assert_eq!(serde_json::to_string(&Role::Train("2M".into())).unwrap(), "\"train-2M\"");
    }

    #[test]
    fn jsonl_round_trip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), true);
        let text = m.to_jsonl();
        assert!(text.starts_with("{\"kind\":\"header\""));
        assert_eq!(Manifest::from_jsonl(&text).unwrap(), m);
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("{\"image_id\":\"X\",\"source\":\"BOSS\",\"role\":\"test\",\"recipe\":"));
        m.verify(dir.path()).unwrap();
    }

    #[test]
    fn verify_catches_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), true);
        std::fs::write(dir.path().join("test/stego/X_00.jpg"), b"x").unwrap();
        assert!(m.verify(dir.path()).is_err());

        let m = fixture(dir.path(), false);
        let mut bad = m.clone();
        bad.records[0].digest = "00".into();
        assert!(bad.verify(dir.path()).is_err());
        m.verify(dir.path()).unwrap();
    }

    #[test]
    fn verify_rejects_mismatched_stego_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = fixture(dir.path(), true);
        let img = GreyImage8::from_fn(32, 32, |x, _| x as u8);
        let other = encode_jpeg(EncodeInput::Grey(&img), &QuantChoice::Quality(90)).unwrap();
        std::fs::write(dir.path().join("test/stego/X_00.jpg"), &other).unwrap();
        m.records[0].tiles[0].stego_digest = Some(digest_hex(&other));
        m.records[0].digest = ManifestRecord::content_digest(&m.records[0].tiles);
        assert!(matches!(m.verify(dir.path()), Err(DatasetError::Manifest(_))));
    }

    #[test]
    fn headerless_text_is_rejected() {
        assert!(Manifest::from_jsonl("").is_err());
        assert!(Manifest::from_jsonl("{\"image_id\":\"X\"}\n").is_err());
    }
}
