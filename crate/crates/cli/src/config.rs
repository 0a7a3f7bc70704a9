//! Configuration loading and resolution.
//!
//! The config file is a single flat JSON document whose snake_case keys
//! mirror the kebab-case flag names. Resolution order is explicit flags,
//! then config-file keys, then built-in defaults. Each command resolves to
//! a plain struct whose JSON serialization (in field order) is the input of
//! the manifest digest, so the digest is recomputable from the resolved
//! values alone.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mzmetry::estimation::Target;

use crate::{AppError, CommonArgs, DiametersArgs, EstimateArgs, SurfaceArgs};

/// Thread-count key: either a positive integer or the string "auto".
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThreadsValue {
    Count(usize),
    Name(String),
}

/// The flat config-file schema. Unknown keys are rejected so typos fail
/// loudly instead of silently falling back to defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<ThreadsValue>,
    pub n: Option<f64>,
    pub r: Option<f64>,
    pub eta: Option<f64>,
    pub beta_range: Option<[f64; 2]>,
    pub phi_range: Option<[f64; 2]>,
    pub nodes: Option<usize>,
    pub channel: Option<u8>,
    pub p0: Option<f64>,
    pub n_log_range: Option<[f64; 2]>,
    pub per_decade: Option<usize>,
    pub target: Option<String>,
    pub delta: Option<f64>,
    pub trials: Option<u64>,
    pub experiments: Option<u64>,
    pub unsafe_offset: Option<bool>,
    pub group: Option<Vec<String>>,
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, AppError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("invalid config file {}: {e}", path.display())))
}

/// Settings shared by every subcommand after resolution.
#[derive(Debug)]
pub struct CommonResolved {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// None means "auto": leave the worker pool at its default size.
    pub threads: Option<usize>,
}

fn parse_thread_count(text: &str) -> Result<Option<usize>, AppError> {
    if text == "auto" {
        return Ok(None);
    }
    match text.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(Some(n)),
        _ => Err(AppError::Usage(format!(
            "threads must be a positive integer or 'auto', got '{text}'"
        ))),
    }
}

pub fn resolve_common(args: &CommonArgs, file: &FileConfig) -> Result<CommonResolved, AppError> {
    let threads = if let Some(text) = &args.threads {
        parse_thread_count(text)?
    } else {
        match &file.threads {
            None => None,
            Some(ThreadsValue::Name(text)) => parse_thread_count(text)?,
            Some(ThreadsValue::Count(n)) if *n >= 1 => Some(*n),
            Some(ThreadsValue::Count(n)) => {
                return Err(AppError::Usage(format!(
                    "threads must be a positive integer or 'auto', got {n}"
                )))
            }
        }
    };
    Ok(CommonResolved {
        seed: args.seed.or(file.seed).unwrap_or(1),
        out_dir: args
            .out_dir
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        threads,
    })
}

/// Caps the global worker pool when an explicit count was requested.
pub fn apply_thread_count(threads: Option<usize>) -> Result<(), AppError> {
    let Some(n) = threads else {
        return Ok(());
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| AppError::Run(format!("cannot configure {n} worker threads: {e}")))
}

/// Resolves the exclusive --N/--r pair to both values. When either flag is
/// present the flag pair wins outright; otherwise the config pair applies.
fn resolve_photon_pair(
    flag_n: Option<f64>,
    flag_r: Option<f64>,
    file: &FileConfig,
) -> Result<(f64, f64), AppError> {
    let (n_opt, r_opt) = if flag_n.is_some() || flag_r.is_some() {
        (flag_n, flag_r)
    } else {
        (file.n, file.r)
    };
    match (n_opt, r_opt) {
        (Some(_), Some(_)) => Err(AppError::Usage(
            "give exactly one of --N and --r (config keys n and r), not both".into(),
        )),
        (None, None) => Err(AppError::Usage(
            "one of --N or --r is required (config keys n and r)".into(),
        )),
        (Some(n), None) => {
            if !(n.is_finite() && n >= 0.0) {
                return Err(AppError::Usage(format!(
                    "mean photon number must be non-negative and finite, got {n}"
                )));
            }
            Ok((n, n.sqrt().asinh()))
        }
        (None, Some(r)) => {
            if !r.is_finite() {
                return Err(AppError::Usage(format!(
                    "squeeze parameter must be finite, got {r}"
                )));
            }
            Ok((r.sinh() * r.sinh(), r))
        }
    }
}

fn resolve_pair(
    flag: Option<&Vec<f64>>,
    file: Option<[f64; 2]>,
    default: [f64; 2],
) -> [f64; 2] {
    match flag {
        // clap's num_args = 2 guarantees the length.
        Some(v) => [v[0], v[1]],
        None => file.unwrap_or(default),
    }
}

/// Resolved surface run. Field order is the digest order.
#[derive(Debug, Serialize)]
pub struct SurfaceConfig {
    pub n: f64,
    pub r: f64,
    pub eta: f64,
    pub beta_range: [f64; 2],
    pub phi_range: [f64; 2],
    pub nodes: usize,
    pub channel: u8,
    pub seed: u64,
}

pub fn resolve_surface(
    args: &SurfaceArgs,
    file: &FileConfig,
    seed: u64,
) -> Result<SurfaceConfig, AppError> {
    let (n, r) = resolve_photon_pair(args.n_photons, args.squeeze_r, file)?;
    Ok(SurfaceConfig {
        n,
        r,
        eta: args.eta.or(file.eta).unwrap_or(1.0),
        beta_range: resolve_pair(
            args.beta_range.as_ref(),
            file.beta_range,
            [-FRAC_PI_2, FRAC_PI_2],
        ),
        phi_range: resolve_pair(
            args.phi_range.as_ref(),
            file.phi_range,
            [-FRAC_PI_2, FRAC_PI_2],
        ),
        nodes: args.nodes.or(file.nodes).unwrap_or(101),
        channel: args.channel.or(file.channel).unwrap_or(1),
        seed,
    })
}

/// Resolved diameter scan. Field order is the digest order.
#[derive(Debug, Serialize)]
pub struct DiametersConfig {
    pub p0: f64,
    pub eta: f64,
    pub n_log_range: [f64; 2],
    pub per_decade: usize,
    pub seed: u64,
}

pub fn resolve_diameters(
    args: &DiametersArgs,
    file: &FileConfig,
    seed: u64,
) -> Result<DiametersConfig, AppError> {
    Ok(DiametersConfig {
        p0: args.p0.or(file.p0).unwrap_or(0.9),
        eta: args.eta.or(file.eta).unwrap_or(1.0),
        n_log_range: resolve_pair(args.n_log_range.as_ref(), file.n_log_range, [1.0, 4.0]),
        per_decade: args.per_decade.or(file.per_decade).unwrap_or(8),
        seed,
    })
}

/// Resolved estimation campaign. Field order is the digest order; `target`
/// is stored in its canonical spelling.
#[derive(Debug, Serialize)]
pub struct EstimateConfig {
    pub n: f64,
    pub r: f64,
    pub eta: f64,
    pub target: String,
    pub delta: f64,
    pub trials: u64,
    pub experiments: u64,
    pub unsafe_offset: bool,
    pub seed: u64,
}

pub fn resolve_estimate(
    args: &EstimateArgs,
    file: &FileConfig,
    seed: u64,
) -> Result<EstimateConfig, AppError> {
    let (n, r) = resolve_photon_pair(args.n_photons, args.squeeze_r, file)?;
    let target_text = args
        .target
        .clone()
        .or_else(|| file.target.clone())
        .unwrap_or_else(|| "beta".into());
    let target = Target::from_str(&target_text)?;
    let delta = args.delta.or(file.delta).ok_or_else(|| {
        AppError::Usage("--delta is required (config key delta)".into())
    })?;
    Ok(EstimateConfig {
        n,
        r,
        eta: args.eta.or(file.eta).unwrap_or(1.0),
        target: target.as_str().into(),
        delta,
        trials: args.trials.or(file.trials).unwrap_or(10_000),
        experiments: args.experiments.or(file.experiments).unwrap_or(500),
        // The flag can only assert the override; absence falls back to the
        // config key.
        unsafe_offset: args.unsafe_offset || file.unsafe_offset.unwrap_or(false),
        seed,
    })
}

/// Hex SHA-256 of the resolved config's JSON serialization. Output location
/// and thread count are deliberately not part of the digest: they never
/// change the produced data.
pub fn digest<T: Serialize>(config: &T) -> Result<String, AppError> {
    let json = serde_json::to_string(config)
        .map_err(|e| AppError::Run(format!("cannot serialize resolved config: {e}")))?;
    Ok(format!("{:x}", Sha256::digest(json.as_bytes())))
}
