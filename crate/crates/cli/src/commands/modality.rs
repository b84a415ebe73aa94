use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use aesthete::modality::{apply, read_manifest, ImageBuffer, ModalityKind};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{require_dir, require_file, RunConfig};
use crate::io::{sha256_hex, write};

pub const CACHE_FILE: &str = "modality_cache.json";
pub const DIR_OUTPUT: &str = "modality";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub source: PathBuf,
    pub modality: ModalityKind,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CacheEntry {
    /// Hash of the modality name and the source bytes.
    input: String,
    /// Hash of the bytes written.
    output: String,
}

type Cache = BTreeMap<String, CacheEntry>;

enum Outcome {
    Skipped,
    Written(CacheEntry),
    Failed(String),
}

/// Manifest entries, or every PNG of `input_dir` crossed with `kinds`.
pub fn jobs(cfg: &RunConfig) -> Result<Vec<Job>> {
    let m = &cfg.modality;
    match (&m.manifest, &m.input_dir) {
        (Some(_), Some(_)) => bail!("set only one of modality.manifest and modality.input_dir"),
        (None, None) => bail!("modality.manifest or modality.input_dir is required"),
        (Some(manifest), None) => {
            require_file(manifest, "manifest")?;
            let base = manifest.parent().unwrap_or(Path::new(""));
            Ok(read_manifest(manifest)?
                .into_iter()
                .map(|e| Job {
                    source: base.join(e.source),
                    modality: e.modality,
                    output: cfg.output_dir.join(e.output),
                })
                .collect())
        }
        (None, Some(dir)) => {
            require_dir(dir, "modality input directory")?;
            if m.kinds.is_empty() {
                bail!("modality.kinds is empty");
            }
            let mut files: Vec<PathBuf> =
                std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
            files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")));
            files.sort();
            let mut out = Vec::new();
            for &kind in &m.kinds {
                for f in &files {
                    let name = f.file_name().expect("file path");
                    out.push(Job {
                        source: f.clone(),
                        modality: kind,
                        output: cfg.output_dir.join(DIR_OUTPUT).join(kind.name()).join(name),
                    });
                }
            }
            Ok(out)
        }
    }
}

fn process(job: &Job, cached: Option<&CacheEntry>) -> Result<Outcome> {
    let bytes = std::fs::read(&job.source).with_context(|| format!("reading {}", job.source.display()))?;
    let input = sha256_hex(&[job.modality.name().as_bytes(), &bytes]);
    if let Some(c) = cached {
        if c.input == input {
            if let Ok(existing) = std::fs::read(&job.output) {
                if sha256_hex(&[&existing]) == c.output {
                    return Ok(Outcome::Skipped);
                }
            }
        }
    }
    let img = ImageBuffer::load_png(&job.source)?;
    let png = apply(job.modality, &img)?.encode_png()?;
    write(&job.output, &png)?;
    Ok(Outcome::Written(CacheEntry { input, output: sha256_hex(&[&png]) }))
}

/// Transforms every job, skipping outputs whose source and bytes match the
/// cache. Failures are listed after all other jobs finish.
pub fn run(cfg: &RunConfig) -> Result<()> {
    let jobs = jobs(cfg)?;
    let missing: Vec<String> =
        jobs.iter().filter(|j| !j.source.is_file()).map(|j| j.source.display().to_string()).collect();
    if !missing.is_empty() {
        bail!("missing source images:\n  {}", missing.join("\n  "));
    }
    let mut seen = BTreeSet::new();
    for j in &jobs {
        if !seen.insert(&j.output) {
            bail!("output {} is listed twice", j.output.display());
        }
    }
    cfg.echo()?;

    let cache_path = cfg.output_dir.join(CACHE_FILE);
    let mut cache: Cache = match std::fs::read_to_string(&cache_path) {
        Ok(text) => serde_json::from_str(&text).unwrap_or_default(),
        Err(_) => Cache::new(),
    };
    // Keys relative to the output directory keep the cache relocatable.
    let key = |j: &Job| j.output.strip_prefix(&cfg.output_dir).unwrap_or(&j.output).display().to_string();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|j| process(j, cache.get(&key(j))).unwrap_or_else(|e| Outcome::Failed(format!("{e:#}"))))
        .collect();

    let mut written: BTreeMap<ModalityKind, usize> = BTreeMap::new();
    let (mut skipped, mut failures) = (0, Vec::new());
    for (j, o) in jobs.iter().zip(outcomes) {
        match o {
            Outcome::Skipped => skipped += 1,
            Outcome::Written(entry) => {
                *written.entry(j.modality).or_default() += 1;
                cache.insert(key(j), entry);
            }
            Outcome::Failed(msg) => {
                cache.remove(&key(j));
                failures.push(format!("{} ({}): {msg}", j.source.display(), j.modality));
            }
        }
    }
    write(&cache_path, serde_json::to_string_pretty(&cache)? + "\n")?;
    for (kind, n) in &written {
        println!("{kind}: {n} written");
    }
    println!("{skipped} up to date, {} failed", failures.len());
    if !failures.is_empty() {
        bail!("{} images failed:\n  {}", failures.len(), failures.join("\n  "));
    }
    Ok(())
}
