use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use devcorpus_core::dataset::{
    build_catalog, digest_hex, estimate_storage, export_decompressed, nested_subsets, partition_test, ratio_report,
    toy_embed, CatalogEntry, Manifest, ManifestRecord, RatioReport, Role, Source, SourceCatalog, SplitPlan,
    StorageFormat, StorageModel, StorageReport, TestPartition, TileRecord,
};
use devcorpus_core::develop::develop_image;
use devcorpus_core::jpeg::{
    encode_jpeg, estimate_qf, parse_structure, recompress, EncodeInput, QuantChoice, TableKind,
};
use devcorpus_core::paramsample::{sample_recipe_with, DevRecipe, Profile, SamplerConfig, SeedSpec};
use devcorpus_core::rawio::{read_cfa, simulate_cfa, synthetic_scene, write_cfa, BayerPattern};
use devcorpus_core::rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::Reporter;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
const STATE_DIR: &str = ".state/develop";

/// Writes through a temporary sibling and a rename, so an interrupted run
/// never leaves a truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn thread_pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Per-item failures, listed for the exit summary.
pub type Failures = Vec<(String, String)>;

pub fn load_catalog(cfg: &RunConfig) -> anyhow::Result<SourceCatalog> {
    build_catalog(&cfg.input, &cfg.sources).with_context(|| format!("cataloguing {}", cfg.input.display()))
}

/// The split plan the configuration asks for, or `None` when no test set
/// and no subset sizes are configured.
pub fn plan_split(cfg: &RunConfig, catalog: &SourceCatalog) -> anyhow::Result<Option<SplitPlan>> {
    if cfg.test_size == 0 && cfg.split_sizes.is_empty() {
        return Ok(None);
    }
    let excluded: BTreeSet<Source> = cfg.excluded.iter().copied().collect();
    let partition = partition_test(catalog, cfg.test_size, &excluded, cfg.master_seed)?;
    Ok(Some(nested_subsets(&partition, &cfg.split_sizes, cfg.master_seed)?))
}

fn role_of(plan: Option<&SplitPlan>, image_id: &str) -> Role {
    match plan {
        Some(p) if p.test_ids.contains(image_id) => Role::Test,
        Some(p) => Role::Train(p.first_subset_of(image_id).unwrap_or("pool").to_string()),
        None => Role::Train("pool".into()),
    }
}

pub fn recipe_for(cfg: &RunConfig, image_id: &str) -> DevRecipe {
    let sampler = SamplerConfig {
        target_side: cfg.target_side,
        quality_factor: cfg.quality,
        usm_probability: cfg.usm_probability,
        usm_amount_range: cfg.usm_amount_range,
    };
    sample_recipe_with(&SeedSpec::new(cfg.master_seed, image_id), cfg.profile, &sampler)
}

fn state_path(cfg: &RunConfig, image_id: &str) -> PathBuf {
    cfg.output.join(STATE_DIR).join(format!("{image_id}.json"))
}

/// A completion marker is honoured only if it describes the same work and
/// every file it lists still has its recorded digest.
fn completed_record(cfg: &RunConfig, image_id: &str, role: &Role, recipe: &DevRecipe) -> Option<ManifestRecord> {
    let text = std::fs::read_to_string(state_path(cfg, image_id)).ok()?;
    let rec: ManifestRecord = serde_json::from_str(&text).ok()?;
    if rec.image_id != image_id || &rec.role != role || &rec.recipe != recipe {
        return None;
    }
    let intact = |rel: &Option<String>, digest: &Option<String>| match (rel, digest) {
        (Some(r), Some(d)) => std::fs::read(cfg.output.join(r)).is_ok_and(|b| &digest_hex(&b) == d),
        (None, None) => true,
        _ => false,
    };
    let all = rec.tiles.iter().all(|t| {
        intact(&Some(t.cover_path.clone()), &Some(t.cover_digest.clone()))
            && intact(&t.colour_path, &t.colour_digest)
            && intact(&t.stego_path, &t.stego_digest)
    });
    all.then_some(rec)
}

fn develop_one(cfg: &RunConfig, entry: &CatalogEntry, role: &Role) -> anyhow::Result<(ManifestRecord, bool)> {
    let id = &entry.image_id;
    let recipe = recipe_for(cfg, id);
    if let Some(rec) = completed_record(cfg, id, role, &recipe) {
        return Ok((rec, true));
    }
    let cfa = read_cfa(&entry.cfa_path)?;
    let dev = develop_image(&cfa, &recipe, id)?;
    let split = role.to_string();
    let q = QuantChoice::Quality(recipe.quality_factor);
    let mut tiles = Vec::with_capacity(dev.grey.tiles.len());
    for (k, grey) in dev.grey.tiles.iter().enumerate() {
        let tile_id = format!("{id}_{k:02}");
        let rel = |kind: &str| format!("{split}/{kind}/{tile_id}.jpg");
        let store = |kind: &str, bytes: &[u8]| -> anyhow::Result<(String, String)> {
            let r = rel(kind);
            write_atomic(&cfg.output.join(&r), bytes)?;
            Ok((r, digest_hex(bytes)))
        };
        let cover = encode_jpeg(EncodeInput::Grey(grey), &q)?;
        let (cover_path, cover_digest) = store("cover", &cover)?;
        let (colour_path, colour_digest) = if cfg.colour_tiles {
            let bytes = encode_jpeg(EncodeInput::Rgb(&dev.colour.tiles[k]), &q)?;
            let (p, d) = store("colour", &bytes)?;
            (Some(p), Some(d))
        } else {
            (None, None)
        };
        let (stego_path, stego_digest) = match cfg.embed_rate {
            Some(rate) => {
                let bytes = toy_embed(&cover, rate, cfg.master_seed)?;
                let (p, d) = store("stego", &bytes)?;
                (Some(p), Some(d))
            }
            None => (None, None),
        };
        tiles.push(TileRecord {
            tile_id,
            width: grey.width,
            height: grey.height,
            cover_path,
            cover_digest,
            colour_path,
            colour_digest,
            stego_path,
            stego_digest,
        });
    }
    let rec = ManifestRecord {
        image_id: id.clone(),
        source: entry.source,
        role: role.clone(),
        recipe,
        upscaled: dev.upscaled,
        digest: ManifestRecord::content_digest(&tiles),
        tiles,
    };
    write_atomic(&state_path(cfg, id), serde_json::to_string(&rec)?.as_bytes())?;
    Ok((rec, false))
}

#[derive(Debug)]
pub struct DevelopSummary {
    pub images: usize,
    pub developed: usize,
    pub reused: usize,
    pub failures: Failures,
    pub manifest_digest: String,
    pub seconds: f64,
}

/// Develops every catalogued image into grey (and colour, and toy stego)
/// tiles, then writes the manifest sorted by image id.
pub fn cmd_develop(cfg: &RunConfig, rep: &Reporter) -> anyhow::Result<DevelopSummary> {
    let start = Instant::now();
    let catalog = load_catalog(cfg)?;
    let plan = plan_split(cfg, &catalog)?;
    let progress = rep.progress(catalog.len());
    let results: Vec<Result<(ManifestRecord, bool), (String, String)>> = thread_pool(cfg.worker_count())?.install(|| {
        catalog
            .entries()
            .par_iter()
            .map(|e| {
                let r = develop_one(cfg, e, &role_of(plan.as_ref(), &e.image_id)).map_err(|err| (e.image_id.clone(), format!("{err:#}")));
                progress.tick();
                r
            })
            .collect()
    });

    let mut manifest = Manifest {
        header: cfg.provenance(),
        records: Vec::new(),
    };
    manifest.header.insert("catalog_size".into(), catalog.len().into());
    let (mut developed, mut reused, mut failures) = (0, 0, Vec::new());
    for r in results {
        match r {
            Ok((rec, was_reused)) => {
                if was_reused {
                    reused += 1;
                } else {
                    developed += 1;
                }
                manifest.records.push(rec);
            }
            Err(f) => {
                rep.warn(&format!("failed: {}: {}", f.0, f.1));
                failures.push(f);
            }
        }
    }
    manifest.finalize();
    std::fs::create_dir_all(&cfg.output)?;
    manifest.write(&cfg.output.join(MANIFEST_FILE))?;
    let seconds = start.elapsed().as_secs_f64();
    let summary = DevelopSummary {
        images: catalog.len(),
        developed,
        reused,
        failures,
        manifest_digest: manifest.digest(),
        seconds,
    };
    let rate = summary.developed as f64 / seconds.max(1e-9);
    rep.emit(
        || {
            format!(
                "developed {} images ({} reused, {} failed) in {seconds:.1} s, {rate:.2} images/s\nmanifest sha256 {}",
                summary.developed,
                summary.reused,
                summary.failures.len(),
                summary.manifest_digest
            )
        },
        || {
            json!({"event": "develop", "images": summary.images, "developed": summary.developed,
                   "reused": summary.reused, "failed": summary.failures.len(), "seconds": seconds,
                   "images_per_second": rate, "manifest_sha256": summary.manifest_digest})
        },
    );
    Ok(summary)
}

pub fn cmd_split(cfg: &RunConfig, rep: &Reporter) -> anyhow::Result<(SplitPlan, RatioReport)> {
    let catalog = load_catalog(cfg)?;
    let plan = plan_split(cfg, &catalog)?.unwrap_or_else(|| {
        nested_subsets(&TestPartition::all_train(&catalog), &[], cfg.master_seed).expect("empty size list is valid")
    });
    let report = ratio_report(&plan, &catalog);
    let dir = cfg.output.join("split");
    write_atomic(&dir.join("plan.json"), serde_json::to_string_pretty(&plan)?.as_bytes())?;
    write_atomic(&dir.join("ratio_report.txt"), report.to_table().as_bytes())?;
    let counts = |ids: &BTreeSet<String>| -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for id in ids {
            if let Some(e) = catalog.get(id) {
                *m.entry(e.source.as_str()).or_insert(0) += 1;
            }
        }
        m
    };
    rep.emit(
        || {
            let mut s = format!("test set: {} images {:?}\n", plan.test_ids.len(), counts(&plan.test_ids));
            s.push_str(&report.to_table());
            s
        },
        || {
            json!({"event": "split", "test": plan.test_ids.len(), "test_counts": counts(&plan.test_ids),
                   "subsets": plan.train_subsets.iter().map(|(l, ids)| json!({"label": l, "size": ids.len()})).collect::<Vec<_>>(),
                   "ratio_report": report})
        },
    );
    Ok((plan, report))
}

fn kind_name(k: TableKind) -> &'static str {
    match k {
        TableKind::Luma => "luma",
        TableKind::Chroma => "chroma",
    }
}

/// Prints every file's quantisation tables with the quality estimate.
/// Returns the failures.
pub fn cmd_inspect(paths: &[PathBuf], rep: &Reporter) -> Failures {
    let mut failures = Vec::new();
    for path in paths {
        let name = path.display().to_string();
        let parsed = std::fs::read(path).map_err(|e| e.to_string()).and_then(|b| parse_structure(&b).map_err(|e| e.to_string()));
        let st = match parsed {
            Ok(st) => st,
            Err(e) => {
                rep.warn(&format!("{name}: {e}"));
                failures.push((name, e));
                continue;
            }
        };
        let mut human = format!(
            "{name}: {}x{}, {} component(s), SOF{}",
            st.frame.width,
            st.frame.height,
            st.frame.components.len(),
            st.frame.sof - 0xC0
        );
        let mut tables = Vec::new();
        for (i, q) in st.quant_tables.iter().enumerate() {
            let kind = TableKind::for_component(i);
            let est = estimate_qf(q, kind);
            let verdict = if est.is_standard {
                format!("standard, Q={}", est.q_estimated)
            } else {
                format!("non-standard, nearest Q={}", est.q_estimated)
            };
            human.push_str(&format!("\n  component {i} ({}): {verdict} (distance {:.4})", kind_name(kind), est.distance));
            for r in 0..8 {
                human.push_str("\n    ");
                human.push_str(&(0..8).map(|c| format!("{:4}", q.get(r, c))).collect::<String>());
            }
            tables.push(json!({"component": i, "kind": kind_name(kind), "standard": est.is_standard,
                               "q_estimated": est.q_estimated, "distance": est.distance, "table": q.entries().to_vec()}));
        }
        rep.emit(
            || human,
            || json!({"event": "inspect", "file": name, "width": st.frame.width, "height": st.frame.height, "tables": tables}),
        );
    }
    failures
}

/// Applies `f(input bytes, output path)` to every file in parallel; the
/// output path is `out_dir/<file name>` with `ext` if given.
fn map_files(
    paths: &[PathBuf],
    out_dir: &Path,
    ext: Option<&str>,
    workers: usize,
    verb: &str,
    rep: &Reporter,
    f: impl Fn(&[u8], &Path) -> anyhow::Result<()> + Sync,
) -> anyhow::Result<Failures> {
    std::fs::create_dir_all(out_dir)?;
    let results: Vec<(String, anyhow::Result<PathBuf>)> = thread_pool(workers)?.install(|| {
        paths
            .par_iter()
            .map(|p| {
                let r = (|| {
                    let name = p.file_name().ok_or_else(|| anyhow!("no file name"))?;
                    let mut dst = out_dir.join(name);
                    if let Some(e) = ext {
                        dst.set_extension(e);
                    }
                    let bytes = std::fs::read(p)?;
                    f(&bytes, &dst)?;
                    Ok(dst)
                })();
                (p.display().to_string(), r)
            })
            .collect()
    });
    let mut failures = Vec::new();
    for (src, r) in results {
        match r {
            Ok(dst) => rep.emit(
                || format!("{src} -> {}", dst.display()),
                || json!({"event": verb, "input": src, "output": dst.display().to_string()}),
            ),
            Err(e) => {
                rep.warn(&format!("{src}: {e:#}"));
                failures.push((src, format!("{e:#}")));
            }
        }
    }
    Ok(failures)
}

pub fn cmd_recompress(
    paths: &[PathBuf],
    target: u8,
    preserve: bool,
    out_dir: &Path,
    workers: usize,
    rep: &Reporter,
) -> anyhow::Result<Failures> {
    map_files(paths, out_dir, None, workers, "recompress", rep, |b, dst| {
        write_atomic(dst, &recompress(b, target, preserve)?)
    })
}

pub fn cmd_embed_toy(
    paths: &[PathBuf],
    rate: f64,
    seed: u64,
    out_dir: &Path,
    workers: usize,
    rep: &Reporter,
) -> anyhow::Result<Failures> {
    map_files(paths, out_dir, None, workers, "embed-toy", rep, |b, dst| write_atomic(dst, &toy_embed(b, rate, seed)?))
}

pub fn cmd_export_mat(paths: &[PathBuf], out_dir: &Path, workers: usize, rep: &Reporter) -> anyhow::Result<Failures> {
    map_files(paths, out_dir, Some("mat"), workers, "export-mat", rep, |b, dst| {
        Ok(export_decompressed(b, dst)?)
    })
}

fn mean(sizes: &[u64]) -> u64 {
    if sizes.is_empty() {
        0
    } else {
        (sizes.iter().sum::<u64>() as f64 / sizes.len() as f64).round() as u64
    }
}

/// Mean JPEG sizes (colour, grey cover, grey stego) over a developed output
/// tree described by its manifest.
pub fn measured_jpeg_means(root: &Path) -> anyhow::Result<(u64, u64, u64)> {
    let m = Manifest::read(&root.join(MANIFEST_FILE))?;
    let size = |rel: &str| std::fs::metadata(root.join(rel)).map(|m| m.len());
    let (mut colour, mut grey, mut stego) = (Vec::new(), Vec::new(), Vec::new());
    for t in m.records.iter().flat_map(|r| r.tiles.iter()) {
        grey.push(size(&t.cover_path)?);
        if let Some(p) = &t.colour_path {
            colour.push(size(p)?);
        }
        if let Some(p) = &t.stego_path {
            stego.push(size(p)?);
        }
    }
    if grey.is_empty() {
        return Err(anyhow!("{} lists no tiles", root.join(MANIFEST_FILE).display()));
    }
    let g = mean(&grey);
    Ok((mean(&colour), g, if stego.is_empty() { g } else { mean(&stego) }))
}

/// Mean JPEG sizes measured on a few synthetic scenes developed in memory.
pub fn fixture_jpeg_means(cfg: &RunConfig) -> anyhow::Result<(u64, u64, u64)> {
    let (mut colour, mut grey, mut stego) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..4u64 {
        let id = format!("fixture_{i}");
        let scene = synthetic_scene(1200, 900, cfg.master_seed.wrapping_add(i));
        let cfa = simulate_cfa(&scene, BayerPattern::ALL[i as usize % 4])?;
        let recipe = recipe_for(cfg, &id);
        let dev = develop_image(&cfa, &recipe, &id)?;
        let q = QuantChoice::Quality(recipe.quality_factor);
        for (g, c) in dev.grey.tiles.iter().zip(&dev.colour.tiles) {
            let cover = encode_jpeg(EncodeInput::Grey(g), &q)?;
            colour.push(encode_jpeg(EncodeInput::Rgb(c), &q)?.len() as u64);
            stego.push(toy_embed(&cover, cfg.embed_rate.unwrap_or(0.2), cfg.master_seed)?.len() as u64);
            grey.push(cover.len() as u64);
        }
    }
    Ok((mean(&colour), mean(&grey), mean(&stego)))
}

pub fn cmd_estimate_storage(cfg: &RunConfig, measured_from: Option<&Path>, rep: &Reporter) -> anyhow::Result<StorageReport> {
    let (colour, grey, stego) = match measured_from {
        Some(root) => measured_jpeg_means(root)?,
        None => fixture_jpeg_means(cfg)?,
    };
    let counts = if cfg.storage.is_empty() {
        StorageFormat::full_scale_counts()
    } else {
        cfg.storage.clone()
    };
    let report = estimate_storage(&counts, &StorageModel::with_jpeg_means(colour, grey, stego));
    rep.emit(
        || report.to_table(),
        || json!({"event": "estimate-storage", "rows": report.rows, "total_bytes": report.total}),
    );
    Ok(report)
}

/// Re-checks the manifest against the files on disk.
pub fn cmd_verify(cfg: &RunConfig, rep: &Reporter) -> anyhow::Result<()> {
    let m = Manifest::read(&cfg.output.join(MANIFEST_FILE))?;
    m.verify(&cfg.output)?;
    let tiles: usize = m.records.iter().map(|r| r.tiles.len()).sum();
    rep.emit(
        || format!("ok: {} images, {tiles} tiles, manifest sha256 {}", m.records.len(), m.digest()),
        || json!({"event": "verify", "ok": true, "images": m.records.len(), "tiles": tiles, "manifest_sha256": m.digest()}),
    );
    Ok(())
}

/// Writes a synthetic CFA tree `<root>/<SOURCE>/<nnnnn>.pgm` for trying the
/// pipeline without real RAW files.
pub fn cmd_fixture(
    root: &Path,
    counts: &[(Source, usize)],
    width: usize,
    height: usize,
    seed: u64,
    rep: &Reporter,
) -> anyhow::Result<usize> {
    let jobs: Vec<(Source, usize)> = counts.iter().flat_map(|&(s, n)| (0..n).map(move |i| (s, i))).collect();
    jobs.par_iter().try_for_each(|&(source, i)| -> anyhow::Result<()> {
        let id = format!("{source}_{i:05}");
        let key = rng::stream_key("fixture", seed, &id);
        let scene_seed = u64::from_le_bytes(key[..8].try_into().expect("8 bytes"));
        let pattern = BayerPattern::ALL[(scene_seed % 4) as usize];
        let cfa = simulate_cfa(&synthetic_scene(width, height, scene_seed), pattern)?;
        let dir = root.join(source.as_str());
        std::fs::create_dir_all(&dir)?;
        write_cfa(&cfa, &dir.join(format!("{i:05}.pgm")))?;
        Ok(())
    })?;
    rep.emit(
        || format!("wrote {} synthetic CFA images under {}", jobs.len(), root.display()),
        || json!({"event": "fixture", "images": jobs.len(), "root": root.display().to_string()}),
    );
    Ok(jobs.len())
}

/// Parses `SOURCE=N,SOURCE=N`.
pub fn parse_counts(s: &str) -> Result<Vec<(Source, usize)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("expected SOURCE=N, got {p:?}"))?;
            Ok((k.trim().parse()?, v.trim().parse().map_err(|_| format!("bad count in {p:?}"))?))
        })
        .collect()
}

pub fn profile_of(s: &str) -> Result<Profile, String> {
    s.parse()
}
