use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clinbias::embed_io::{load_store, StoreFormat, VectorStore};
use clinbias::gender::GenderPair;
use clinbias::linalg::{PowerIterationOptions, DEFAULT_SEED};
use sha2::{Digest, Sha256};

use crate::config::{config_error, require_file, resolve, resolve_paths, ConfigFile};
use crate::StoreArgs;

/// One input file (or built-in table) and its digest, for the run manifest.
#[derive(Debug, Clone)]
pub struct InputRecord {
    pub role: &'static str,
    pub path: Option<PathBuf>,
    pub sha256: String,
}

#[derive(Debug, Default)]
pub struct Inputs {
    pub records: Vec<InputRecord>,
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn infer_format(path: &Path) -> StoreFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => StoreFormat::Word2VecBinary,
        Some("ndjson" | "jsonl") => StoreFormat::ContextualNdjson,
        _ => StoreFormat::Word2VecText,
    }
}

pub struct LoadedStore {
    pub store: VectorStore,
    pub paths: Vec<PathBuf>,
    pub format: StoreFormat,
}

impl Inputs {
    /// Reads a small text input from `path`, or the built-in copy when no
    /// path is configured.
    pub fn table<T, E>(
        &mut self,
        role: &'static str,
        path: Option<&Path>,
        builtin: &'static str,
        parse: impl FnOnce(&[u8]) -> Result<T, E>,
    ) -> anyhow::Result<T>
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        let (bytes, path) = match path {
            Some(p) => {
                require_file(role, p)?;
                let bytes =
                    std::fs::read(p).with_context(|| format!("reading {role} {}", p.display()))?;
                (bytes, Some(p.to_path_buf()))
            }
            None => (builtin.as_bytes().to_vec(), None),
        };
        self.records.push(InputRecord {
            role,
            sha256: sha256_bytes(&bytes),
            path: path.clone(),
        });
        let shown = path.map_or_else(|| "built-in".to_string(), |p| p.display().to_string());
        parse(&bytes).with_context(|| format!("{role} {shown}"))
    }

    pub fn store(&mut self, args: &StoreArgs, cfg: &ConfigFile) -> anyhow::Result<LoadedStore> {
        let paths = resolve_paths(&args.store, cfg, "store");
        if paths.is_empty() {
            return Err(config_error("no vector store given (use --store)"));
        }
        let format = resolve(args.store_format, cfg, "store_format")?
            .unwrap_or_else(|| infer_format(&paths[0]));
        if paths.len() > 1 && format != StoreFormat::ContextualNdjson {
            return Err(config_error(
                "several --store files can only be merged for ndjson stores",
            ));
        }
        let mut merged: Option<VectorStore> = None;
        for p in &paths {
            require_file("store", p)?;
            let store =
                load_store(p, format).with_context(|| format!("loading store {}", p.display()))?;
            self.records.push(InputRecord {
                role: "store",
                path: Some(p.clone()),
                sha256: sha256_file(p)?,
            });
            merged = Some(match merged {
                None => store,
                Some(m) => m.merge(store).context("merging stores")?,
            });
        }
        Ok(LoadedStore {
            store: merged.expect("at least one store"),
            paths,
            format,
        })
    }

    pub fn pairs(
        &mut self,
        args: &StoreArgs,
        cfg: &ConfigFile,
    ) -> anyhow::Result<(Vec<GenderPair>, Option<PathBuf>)> {
        let path = resolve_path(args.pairs.clone(), cfg, "pairs");
        let pairs = self.table(
            "pairs",
            path.as_deref(),
            clinbias::reference::DEFINITIONAL_PAIRS_CSV,
            |b: &[u8]| clinbias::gender::read_gender_pairs(b),
        )?;
        Ok((pairs, path))
    }
}

pub fn resolve_path(flag: Option<PathBuf>, cfg: &ConfigFile, key: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.get(key).map(PathBuf::from))
}

pub fn power_options(args: &StoreArgs, cfg: &ConfigFile) -> anyhow::Result<PowerIterationOptions> {
    let seed = resolve(args.seed, cfg, "seed")?.unwrap_or(DEFAULT_SEED);
    Ok(PowerIterationOptions::with_seed(seed))
}
