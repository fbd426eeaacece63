//! Parameter resolution: command-line flags overlaid on an optional key=value
//! config file, with desk-scale defaults (and an opt-in paper-scale preset).
//!
//! Config file grammar: one `key = value` pair per line; `#` starts a comment;
//! blank lines ignored; later assignments override earlier ones; keys are the
//! long flag names with `-` replaced by `_`. Explicit flags always win over
//! the config file.

use crate::error::{CliError, CliResult};
use num_complex::Complex64;
use qwalk_core::protocol::{CoinState, ProtocolSpec, WalkKind};
use qwalk_core::SampleSchedule;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

pub const DESK_TMAX: u64 = 2048;
pub const DESK_CONFIGS: usize = 200;
pub const DESK_WINDOW: f64 = 0.25;
pub const PAPER_TMAX: u64 = 10_000;
pub const PAPER_CONFIGS: usize = 1000;

/// Raw optional settings, from flags or a config file, prior to validation.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub p: Option<String>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub protocol: Option<String>,
    pub coin: Option<String>,
    pub seed: Option<u64>,
    pub seeds: Option<String>,
    pub seed_base: Option<u64>,
    pub configs: Option<usize>,
    pub tmax: Option<u64>,
    pub window: Option<f64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub snapshots: Option<String>,
    pub grid_theta: Option<usize>,
    pub grid_k: Option<usize>,
    pub input: Option<PathBuf>,
    pub fit_tmin: Option<u64>,
    pub fit_tmax: Option<u64>,
    pub paper_scale: bool,
}

impl Overrides {
    /// Fill any unset field from a parsed config file.
    pub fn absorb_config(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        let map = parse_config(&text)?;
        for (key, value) in &map {
            self.apply_key(key, value)?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> CliResult<()> {
        fn fill<T: std::str::FromStr>(
            slot: &mut Option<T>,
            key: &str,
            value: &str,
        ) -> CliResult<()> {
            if slot.is_none() {
                *slot = Some(value.parse().map_err(|_| {
                    CliError::input(format!("config key {key}: cannot parse {value:?}"))
                })?);
            }
            Ok(())
        }
        match key {
            "p" => fill(&mut self.p, key, value),
            "theta1" => fill(&mut self.theta1, key, value),
            "theta2" => fill(&mut self.theta2, key, value),
            "protocol" => fill(&mut self.protocol, key, value),
            "coin" => fill(&mut self.coin, key, value),
            "seed" => fill(&mut self.seed, key, value),
            "seeds" => fill(&mut self.seeds, key, value),
            "seed_base" => fill(&mut self.seed_base, key, value),
            "configs" => fill(&mut self.configs, key, value),
            "tmax" => fill(&mut self.tmax, key, value),
            "window" => fill(&mut self.window, key, value),
            "threads" => fill(&mut self.threads, key, value),
            "out_dir" => fill(&mut self.out_dir, key, value),
            "snapshots" => fill(&mut self.snapshots, key, value),
            "grid_theta" => fill(&mut self.grid_theta, key, value),
            "grid_k" => fill(&mut self.grid_k, key, value),
            "input" => fill(&mut self.input, key, value),
            "fit_tmin" => fill(&mut self.fit_tmin, key, value),
            "fit_tmax" => fill(&mut self.fit_tmax, key, value),
            "paper_scale" => {
                let v: bool = value.parse().map_err(|_| {
                    CliError::input(format!("config key paper_scale: cannot parse {value:?}"))
                })?;
                self.paper_scale = self.paper_scale || v;
                Ok(())
            }
            other => Err(CliError::input(format!("unknown config key {other:?}"))),
        }
    }
}

fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out: HashMap<String, (usize, String)> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::input(format!("config line {}: expected key = value", idx + 1))
        })?;
        // Later assignments override earlier ones.
        out.insert(
            key.trim().to_ascii_lowercase(),
            (idx, value.trim().to_string()),
        );
    }
    let mut pairs: Vec<(String, (usize, String))> = out.into_iter().collect();
    pairs.sort_by_key(|(_, (idx, _))| *idx);
    Ok(pairs.into_iter().map(|(k, (_, v))| (k, v)).collect())
}

/// Inclusive-exclusive seed range, the manifest's seed descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub base: u64,
    pub count: usize,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.base..self.base + self.count as u64).collect()
    }
}

pub fn parse_protocol(s: &str) -> CliResult<WalkKind> {
    match s {
        "chern3" => Ok(WalkKind::ThreeStepChern),
        "floquet2" => Ok(WalkKind::TwoStepFloquet),
        other => Err(CliError::usage(format!(
            "unknown protocol {other:?} (expected chern3 or floquet2)"
        ))),
    }
}

pub fn parse_coin(s: &str) -> CliResult<CoinState> {
    match s {
        "sy" => Ok(CoinState::SigmaYPlus),
        "sx" => Ok(CoinState::SigmaXPlus),
        other => {
            let rest = other.strip_prefix("custom:").ok_or_else(|| {
                CliError::usage(format!(
                    "unknown coin {other:?} (expected sy, sx, or custom:re,im,re,im)"
                ))
            })?;
            let parts: Vec<f64> = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| {
                    CliError::usage(format!("coin {other:?}: expected four real numbers"))
                })?;
            if parts.len() != 4 {
                return Err(CliError::usage(format!(
                    "coin {other:?}: expected four components, found {}",
                    parts.len()
                )));
            }
            let norm = parts.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(CliError::usage("coin custom: zero spinor".to_string()));
            }
            Ok(CoinState::Custom {
                up: Complex64::new(parts[0] / norm, parts[1] / norm),
                down: Complex64::new(parts[2] / norm, parts[3] / norm),
            })
        }
    }
}

fn parse_p_list(s: &str) -> CliResult<Vec<f64>> {
    let ps: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("cannot parse probability list {s:?}")))?;
    if ps.is_empty() {
        return Err(CliError::usage("empty probability list"));
    }
    for &p in &ps {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::usage(format!("p = {p} outside [0, 1]")));
        }
    }
    Ok(ps)
}

fn parse_u64_list(s: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| CliError::usage(format!("cannot parse time list {s:?}")))
        })
        .collect()
}

fn parse_seed_range(s: &str) -> CliResult<SeedRange> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| CliError::usage(format!("seeds {s:?}: expected START..END")))?;
    let base: u64 = a
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("seeds {s:?}: bad start")))?;
    let end: u64 = b
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("seeds {s:?}: bad end")))?;
    if end <= base {
        return Err(CliError::usage(format!("seeds {s:?}: END must exceed START")));
    }
    Ok(SeedRange {
        base,
        count: (end - base) as usize,
    })
}

fn build_spec(o: &Overrides) -> CliResult<ProtocolSpec> {
    let theta1 = o
        .theta1
        .ok_or_else(|| CliError::usage("--theta1 is required".to_string()))?;
    let theta2 = o
        .theta2
        .ok_or_else(|| CliError::usage("--theta2 is required".to_string()))?;
    let kind = parse_protocol(o.protocol.as_deref().unwrap_or("chern3"))?;
    let coin = parse_coin(o.coin.as_deref().unwrap_or("sy"))?;
    Ok(ProtocolSpec::new(kind, theta1, theta2, coin))
}

fn single_p(o: &Overrides) -> CliResult<f64> {
    let s = o
        .p
        .as_deref()
        .ok_or_else(|| CliError::usage("--p is required".to_string()))?;
    let list = parse_p_list(s)?;
    if list.len() != 1 {
        return Err(CliError::usage("this command takes a single --p".to_string()));
    }
    Ok(list[0])
}

pub fn out_dir(o: &Overrides) -> PathBuf {
    o.out_dir.clone().unwrap_or_else(|| PathBuf::from("qwalk_out"))
}

/// Resolved single-walk run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkParams {
    pub p: f64,
    pub spec: ProtocolSpec,
    pub seed: u64,
    pub t_max: u64,
    pub snapshots: Vec<u64>,
}

pub fn resolve_walk(o: &Overrides) -> CliResult<(WalkParams, PathBuf)> {
    let t_max = o.tmax.unwrap_or(if o.paper_scale { PAPER_TMAX } else { DESK_TMAX });
    let mut snapshots = match &o.snapshots {
        Some(s) => parse_u64_list(s)?,
        None => vec![t_max],
    };
    snapshots.sort_unstable();
    snapshots.dedup();
    if snapshots.is_empty() {
        return Err(CliError::usage("at least one snapshot time required".to_string()));
    }
    if *snapshots.last().unwrap() > t_max {
        return Err(CliError::usage(format!(
            "snapshot time {} exceeds --tmax {t_max}",
            snapshots.last().unwrap()
        )));
    }
    Ok((
        WalkParams {
            p: single_p(o)?,
            spec: build_spec(o)?,
            seed: o.seed.unwrap_or(0),
            t_max,
            snapshots,
        },
        out_dir(o),
    ))
}

/// Resolved ensemble sweep (one or more p values over a common seed range).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleRun {
    pub ps: Vec<f64>,
    pub spec: ProtocolSpec,
    pub seeds: SeedRange,
    pub t_max: u64,
    pub window: f64,
    pub schedule: SampleSchedule,
}

pub fn resolve_ensemble(o: &Overrides) -> CliResult<(EnsembleRun, PathBuf)> {
    let ps = parse_p_list(
        o.p.as_deref()
            .ok_or_else(|| CliError::usage("--p is required".to_string()))?,
    )?;
    let seeds = match (&o.seeds, o.configs) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage(
                "--seeds and --configs are mutually exclusive".to_string(),
            ))
        }
        (Some(s), None) => parse_seed_range(s)?,
        (None, configs) => SeedRange {
            base: o.seed_base.unwrap_or(0),
            count: configs.unwrap_or(if o.paper_scale { PAPER_CONFIGS } else { DESK_CONFIGS }),
        },
    };
    if seeds.count == 0 {
        return Err(CliError::usage("need at least one configuration".to_string()));
    }
    let window = o.window.unwrap_or(DESK_WINDOW);
    if window <= 0.0 {
        return Err(CliError::usage(format!("--window {window} must be positive")));
    }
    Ok((
        EnsembleRun {
            ps,
            spec: build_spec(o)?,
            seeds,
            t_max: o.tmax.unwrap_or(if o.paper_scale { PAPER_TMAX } else { DESK_TMAX }),
            window,
            schedule: SampleSchedule::default(),
        },
        out_dir(o),
    ))
}

/// Resolved phase-diagram computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChernParams {
    pub grid_theta: usize,
    pub grid_k: usize,
}

pub fn resolve_chern(o: &Overrides) -> CliResult<(ChernParams, PathBuf)> {
    Ok((
        ChernParams {
            grid_theta: o.grid_theta.unwrap_or(64),
            grid_k: o.grid_k.unwrap_or(64),
        },
        out_dir(o),
    ))
}

/// Resolved post-processing fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitParams {
    pub input: PathBuf,
    pub window: f64,
    pub fit_tmin: Option<u64>,
    pub fit_tmax: Option<u64>,
}

pub fn resolve_fit(o: &Overrides) -> CliResult<(FitParams, PathBuf)> {
    let input = o
        .input
        .clone()
        .ok_or_else(|| CliError::usage("--input <diffusion CSV> is required".to_string()))?;
    let window = o.window.unwrap_or(DESK_WINDOW);
    if window <= 0.0 {
        return Err(CliError::usage(format!("--window {window} must be positive")));
    }
    Ok((
        FitParams {
            input,
            window,
            fit_tmin: o.fit_tmin,
            fit_tmax: o.fit_tmax,
        },
        out_dir(o),
    ))
}
