//! Experiment configuration: JSON text to a validated [`Config`].

use std::fmt;

use dirheat_core::envelope::HTerms;
use dirheat_core::free_density::GlobalUpperFit;
use dirheat_core::{Band, BernsteinFunction, Domain};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Every recognised field. Absent fields take suite defaults at run time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kernel: Option<String>,
    pub kernels: Option<Vec<String>>,
    pub domain: Option<String>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub n_paths: Option<i64>,
    pub base_step: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub pairs: Option<Vec<(Vec<f64>, Vec<f64>)>>,
    pub x0: Option<Vec<f64>>,
    pub targets: Option<Vec<Vec<f64>>>,
    pub target_set: Option<String>,
    pub deltas: Option<Vec<f64>>,
    pub box_width: Option<f64>,
    pub lower_rate: Option<f64>,
    pub band: Option<(f64, f64)>,
    pub terms: Option<HTerms>,
    pub upper_constants: Option<(f64, f64, f64)>,
    pub cell_width: Option<f64>,
    pub tail: Option<f64>,
    pub slack: Option<f64>,
    pub k_sigma: Option<f64>,
    pub dims: Option<Vec<usize>>,
    pub alphas: Option<Vec<f64>>,
    pub lambdas: Option<Vec<f64>>,
    pub rel_tol: Option<f64>,
    pub n_starts: Option<usize>,
    pub radius: Option<f64>,
    pub time_scale: Option<f64>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        RawConfig { $($f: $top.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl RawConfig {
    /// Fields of `self`, falling back to `base` where absent.
    pub fn over(&self, base: &RawConfig) -> RawConfig {
        overlay!(
            self, base, kernel, kernels, domain, dim, seed, horizon, n_paths, base_step, times, radii, pairs, x0,
            targets, target_set, deltas, box_width, lower_rate, band, terms, upper_constants, cell_width, tail, slack,
            k_sigma, dims, alphas, lambdas, rel_tol, n_starts, radius, time_scale
        )
    }
}

pub const DEFAULT_KERNEL: &str = "stable:alpha=1";

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub kernel: BernsteinFunction,
    pub dim: usize,
    pub seed: u64,
    pub horizon: f64,
    /// Hex SHA-256 of the canonical JSON of the effective fields.
    pub hash: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.errors.join("; "))
    }
}

impl std::error::Error for ConfigError {}

/// Object entries in document order, duplicates included.
struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn positive(errors: &mut Vec<String>, name: &str, v: Option<f64>) {
    if let Some(v) = v {
        if !(v > 0.0 && v.is_finite()) {
            errors.push(format!("{name}: must be positive, got {v}"));
        }
    }
}

fn increasing(errors: &mut Vec<String>, name: &str, v: &Option<Vec<f64>>) {
    if let Some(v) = v {
        if v.is_empty() || v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
            errors.push(format!("{name}: must be non-empty, positive and strictly increasing"));
        }
    }
}

/// Parses and validates JSON text. Duplicate top-level fields resolve to
/// the last occurrence and leave a warning.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let one = |e: String| ConfigError { errors: vec![e] };
    let entries: Entries = serde_json::from_str(text).map_err(|e| one(format!("json: {e}")))?;
    let mut warnings = Vec::new();
    let mut map = Map::new();
    for (k, v) in entries.0 {
        if map.insert(k.clone(), v).is_some() {
            warnings.push(format!("duplicate field {k:?}: last value wins"));
        }
    }
    let canonical = Value::Object(map);
    let raw: RawConfig = serde_json::from_value(canonical.clone()).map_err(|e| one(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(canonical.to_string().as_bytes()));

    let mut errors = Vec::new();
    let seed = raw.seed;
    if seed.is_none() {
        errors.push("seed: required".into());
    }
    let kernel = match raw.kernel.as_deref().unwrap_or(DEFAULT_KERNEL).parse::<BernsteinFunction>() {
        Ok(k) => Some(k),
        Err(e) => {
            errors.push(format!("kernel: {e}"));
            None
        }
    };
    for spec in raw.kernels.iter().flatten() {
        if let Err(e) = spec.parse::<BernsteinFunction>() {
            errors.push(format!("kernels: {e}"));
        }
    }
    let dim = raw.dim.unwrap_or(1);
    if dim == 0 {
        errors.push("dim: must be at least 1".into());
    }
    for (name, spec) in [("domain", &raw.domain), ("target_set", &raw.target_set)] {
        if let (Some(s), true) = (spec, dim > 0) {
            if let Err(e) = Domain::parse(s, dim) {
                errors.push(format!("{name}: {e}"));
            }
        }
    }
    if let Some(n) = raw.n_paths {
        if n <= 0 {
            errors.push(format!("n_paths: must be positive, got {n}"));
        }
    }
    let horizon = raw.horizon.unwrap_or(1.0);
    positive(&mut errors, "horizon", Some(horizon));
    for (name, v) in [
        ("base_step", raw.base_step),
        ("box_width", raw.box_width),
        ("lower_rate", raw.lower_rate),
        ("cell_width", raw.cell_width),
        ("tail", raw.tail),
        ("k_sigma", raw.k_sigma),
        ("rel_tol", raw.rel_tol),
        ("radius", raw.radius),
        ("time_scale", raw.time_scale),
    ] {
        positive(&mut errors, name, v);
    }
    increasing(&mut errors, "times", &raw.times);
    increasing(&mut errors, "deltas", &raw.deltas);
    increasing(&mut errors, "lambdas", &raw.lambdas);
    if let Some((lo, hi)) = raw.band {
        if let Err(e) = Band::new(lo, hi) {
            errors.push(format!("band: {e}"));
        }
    }
    if let Some((c1, c2, c3)) = raw.upper_constants {
        if !(c1 >= 1.0 && c2 >= 1.0 && c3 >= 1.0) {
            errors.push("upper_constants: each must be at least 1".into());
        }
    }
    if let Some(s) = raw.slack {
        if !(0.0..1.0).contains(&s) {
            errors.push(format!("slack: must lie in [0, 1), got {s}"));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigError { errors });
    }
    Ok(Config {
        kernel: kernel.expect("validated"),
        dim,
        seed: seed.expect("validated"),
        horizon,
        hash,
        warnings,
        raw,
    })
}

impl Config {
    pub fn domain_or(&self, default: &str) -> Result<Domain, ConfigError> {
        let spec = self.raw.domain.as_deref().unwrap_or(default);
        Domain::parse(spec, self.dim).map_err(|e| ConfigError {
            errors: vec![format!("domain: {e}")],
        })
    }

    pub fn n_paths_or(&self, default: usize) -> usize {
        self.raw.n_paths.map(|n| n as usize).unwrap_or(default)
    }

    pub fn upper_constants(&self) -> Option<GlobalUpperFit> {
        self.raw.upper_constants.map(|(c1, c2, c3)| GlobalUpperFit { c1, c2, c3 })
    }

    pub fn band_or(&self, default: Band) -> Band {
        self.raw.band.map(|(lo, hi)| Band { lo, hi }).unwrap_or(default)
    }
}
