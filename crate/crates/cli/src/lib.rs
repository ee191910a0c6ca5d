//! Config-driven orchestration of the campaigns and the file formats of
//! the `dirheat` binary.

pub mod config;

use std::fmt;

use clap::ValueEnum;
use dirheat_core::envelope::{h_with, EnvelopeParams};
use dirheat_core::harness::{self, Band, RatioOptions, RatioReport};
use dirheat_core::simulate::{heat_kernel_estimate, CellGrid, KilledPathConfig};
use dirheat_core::{BernsteinFunction, Domain, Error, JumpKernel};
use serde_json::Value;

pub use config::{parse_config, Config, ConfigError, RawConfig};

/// Package version plus the short git revision it was built from.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "-g", env!("DIRHEAT_GIT_REV"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    KernelScaling,
    LaplaceRoundtrip,
    GaussianOracle,
    Sandwich,
    SurvivalExponent,
    Eigen,
    LevySystem,
    CrossComponent,
    Green,
    GreenOracle,
    Factorization,
    ExitTime,
}

impl Suite {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Io(String),
    Compute(Error),
}

impl RunError {
    /// 3 for bad input, 4 for I/O and numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 3,
            RunError::Io(_) => 4,
            RunError::Compute(e) => match e {
                Error::Quadrature(_) | Error::KernelCheck(_) => 4,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
            RunError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Compute(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// The nine start/target pairs of the default interval campaigns.
pub fn default_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    [
        (0.0, 0.0),
        (0.0, 0.25),
        (0.0, -0.5),
        (-0.5, -0.5),
        (-0.5, -0.8),
        (-0.5, -0.2),
        (0.5, 0.9),
        (0.5, 0.7),
        (0.5, 0.2),
    ]
    .into_iter()
    .map(|(x, y)| (vec![x], vec![y]))
    .collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn catalog_specs() -> Vec<String> {
    [
        "stable:alpha=0.5",
        "stable:alpha=1",
        "stable:alpha=1.5",
        "relativistic:alpha=1,m=1",
        "relativistic:alpha=1.5,m=2",
        "stablemix:w1=0.5,a1=0.8;w2=1,a2=1.4",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Defaults applied under the fields a config leaves out.
pub fn suite_defaults(suite: Suite) -> RawConfig {
    let interval = Some("intervals:(-1,1)".to_string());
    let base = RawConfig {
        domain: interval.clone(),
        x0: Some(vec![0.0]),
        ..Default::default()
    };
    let s = match suite {
        Suite::KernelScaling => RawConfig {
            alphas: Some(vec![0.5, 1.0, 1.5]),
            dims: Some(vec![1, 2, 3]),
            radii: Some(log_grid(1e-2, 10.0, 31)),
            rel_tol: Some(1e-6),
            ..Default::default()
        },
        Suite::LaplaceRoundtrip => RawConfig {
            kernels: Some(catalog_specs()),
            lambdas: Some(log_grid(0.1, 10.0, 21)),
            rel_tol: Some(1e-6),
            ..Default::default()
        },
        Suite::GaussianOracle => RawConfig {
            times: Some(vec![0.1, 0.5, 1.0]),
            n_paths: Some(100_000),
            base_step: Some(5e-5),
            k_sigma: Some(3.0),
            ..Default::default()
        },
        Suite::Sandwich => RawConfig {
            times: Some(vec![0.05, 0.1, 0.5]),
            pairs: Some(default_pairs()),
            n_paths: Some(1_000_000),
            base_step: Some(1e-3),
            box_width: Some(0.02),
            lower_rate: Some(0.5),
            band: Some((0.01, 100.0)),
            ..Default::default()
        },
        Suite::SurvivalExponent => RawConfig {
            times: Some(vec![0.25]),
            deltas: Some(log_grid(0.02, 0.2, 6)),
            n_paths: Some(40_000),
            base_step: Some(1e-4),
            ..Default::default()
        },
        Suite::Eigen => RawConfig {
            times: Some((0..=10).map(|i| 1.0 + 0.1 * i as f64).collect()),
            n_paths: Some(100_000),
            base_step: Some(1e-3),
            slack: Some(0.1),
            ..Default::default()
        },
        Suite::LevySystem => RawConfig {
            domain: Some("ball:r=0.5,center=(0)".into()),
            target_set: Some("ball:r=0.25,center=(2)".into()),
            n_paths: Some(100_000),
            base_step: Some(1e-3),
            k_sigma: Some(3.0),
            ..Default::default()
        },
        Suite::CrossComponent => RawConfig {
            domain: Some("balls:r=1,centers=(0);(4)".into()),
            targets: Some(vec![vec![4.0], vec![3.5]]),
            times: Some(vec![0.02, 0.05, 0.1, 0.2, 0.5]),
            n_paths: Some(1_000_000),
            base_step: Some(1e-3),
            box_width: Some(0.1),
            lower_rate: Some(0.5),
            band: Some((0.02, 50.0)),
            ..Default::default()
        },
        Suite::Green => RawConfig {
            cell_width: Some(0.05),
            n_paths: Some(50_000),
            base_step: Some(1e-3),
            band: Some((0.01, 100.0)),
            tail: Some(1e-4),
            ..Default::default()
        },
        Suite::GreenOracle => RawConfig {
            dims: Some(vec![1, 2, 3]),
            lower_rate: Some(0.25),
            band: Some((0.02, 50.0)),
            ..Default::default()
        },
        Suite::Factorization => RawConfig {
            times: Some(vec![0.05, 0.1, 0.5]),
            pairs: Some(default_pairs()),
            n_paths: Some(300_000),
            base_step: Some(1e-3),
            box_width: Some(0.02),
            band: Some((0.01, 100.0)),
            ..Default::default()
        },
        Suite::ExitTime => RawConfig {
            radius: Some(0.5),
            time_scale: Some(0.25),
            n_starts: Some(5),
            n_paths: Some(20_000),
            base_step: Some(1e-4),
            ..Default::default()
        },
    };
    s.over(&base)
}

/// Suite parameters: the config's fields over the suite defaults.
struct Resolved {
    raw: RawConfig,
    kernel: BernsteinFunction,
    dim: usize,
    seed: u64,
    horizon: f64,
}

impl Resolved {
    fn new(suite: Suite, cfg: &Config) -> Self {
        Self {
            raw: cfg.raw.over(&suite_defaults(suite)),
            kernel: cfg.kernel.clone(),
            dim: cfg.dim,
            seed: cfg.seed,
            horizon: cfg.horizon,
        }
    }

    fn field<T: Clone>(&self, v: &Option<T>, name: &str) -> Result<T> {
        v.clone().ok_or_else(|| RunError::Usage(format!("{name}: required for this command")))
    }

    fn domain(&self) -> Result<Domain> {
        Ok(Domain::parse(&self.field(&self.raw.domain, "domain")?, self.dim)?)
    }

    fn jump_kernel(&self) -> Result<JumpKernel> {
        Ok(JumpKernel::new(self.dim, self.kernel.clone())?)
    }

    fn n_paths(&self) -> Result<usize> {
        Ok(self.field(&self.raw.n_paths, "n_paths")? as usize)
    }

    fn times_within_horizon(&self) -> Result<Vec<f64>> {
        let times = self.field(&self.raw.times, "times")?;
        if times.iter().any(|&t| t > self.horizon) {
            return Err(RunError::Usage(format!("times must not exceed the horizon {}", self.horizon)));
        }
        Ok(times)
    }

    fn band(&self) -> Result<Band> {
        let (lo, hi) = self.field(&self.raw.band, "band")?;
        Ok(Band::new(lo, hi)?)
    }

    fn ratio_options(&self) -> Result<RatioOptions> {
        let mut o = RatioOptions::new(self.seed);
        o.base_step = self.field(&self.raw.base_step, "base_step")?;
        o.box_width = self.field(&self.raw.box_width, "box_width")?;
        o.lower_rate = self.raw.lower_rate.unwrap_or(o.lower_rate);
        o.band = self.band()?;
        o.terms = self.raw.terms.unwrap_or_default();
        Ok(o)
    }
}

/// Starts at distances `deltas` from the boundary point nearest `x0`,
/// along the inward direction through `x0`.
fn boundary_starts(domain: &Domain, x0: &[f64], deltas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let b = domain
        .nearest_boundary_point(x0)
        .ok_or_else(|| RunError::Usage("domain has no boundary point near x0".into()))?;
    let len = dirheat_core::geometry::distance(x0, &b);
    if deltas.iter().any(|&d| d >= len) {
        return Err(RunError::Usage("every delta must be below delta_D(x0)".into()));
    }
    Ok(deltas
        .iter()
        .map(|&d| b.iter().zip(x0).map(|(bi, xi)| bi + d * (xi - bi) / len).collect())
        .collect())
}

/// Runs one verification suite.
pub fn run_suite(suite: Suite, cfg: &Config) -> Result<RatioReport> {
    let r = Resolved::new(suite, cfg);
    let raw = &r.raw;
    let report = match suite {
        Suite::KernelScaling => harness::kernel_scaling_report(
            &r.field(&raw.alphas, "alphas")?,
            &r.field(&raw.dims, "dims")?,
            &r.field(&raw.radii, "radii")?,
            r.field(&raw.rel_tol, "rel_tol")?,
        )?,
        Suite::LaplaceRoundtrip => {
            let entries = r
                .field(&raw.kernels, "kernels")?
                .iter()
                .map(|s| s.parse::<BernsteinFunction>())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            harness::laplace_roundtrip_report(&entries, &r.field(&raw.lambdas, "lambdas")?, r.field(&raw.rel_tol, "rel_tol")?)?
        }
        Suite::GaussianOracle => harness::gaussian_oracle_report(
            &r.field(&raw.times, "times")?,
            r.n_paths()?,
            r.field(&raw.base_step, "base_step")?,
            r.seed,
            r.field(&raw.k_sigma, "k_sigma")?,
        )?,
        Suite::Sandwich => harness::sandwich_report(
            &r.domain()?,
            &r.jump_kernel()?,
            &r.times_within_horizon()?,
            &r.field(&raw.pairs, "pairs")?,
            r.n_paths()?,
            &r.ratio_options()?,
            cfg.upper_constants(),
        )?,
        Suite::SurvivalExponent => {
            let domain = r.domain()?;
            let starts = boundary_starts(&domain, &r.field(&raw.x0, "x0")?, &r.field(&raw.deltas, "deltas")?)?;
            harness::survival_exponent_report(
                &domain,
                &r.kernel,
                &starts,
                r.field(&raw.times, "times")?[0],
                r.n_paths()?,
                r.field(&raw.base_step, "base_step")?,
                r.seed,
                1.0,
                0.15,
            )?
        }
        Suite::Eigen => harness::eigen_report(
            &r.domain()?,
            &r.kernel,
            &r.field(&raw.x0, "x0")?,
            &r.field(&raw.times, "times")?,
            r.n_paths()?,
            r.field(&raw.base_step, "base_step")?,
            r.seed,
            r.field(&raw.slack, "slack")?,
        )?,
        Suite::LevySystem => {
            let a = Domain::parse(&r.field(&raw.target_set, "target_set")?, r.dim)?;
            harness::levy_system_report(
                &r.jump_kernel()?,
                &r.domain()?,
                &r.field(&raw.x0, "x0")?,
                &a,
                r.n_paths()?,
                r.field(&raw.base_step, "base_step")?,
                r.seed,
                r.field(&raw.k_sigma, "k_sigma")?,
            )?
        }
        Suite::CrossComponent => harness::cross_component_report(
            &r.domain()?,
            &r.jump_kernel()?,
            &r.times_within_horizon()?,
            &r.field(&raw.x0, "x0")?,
            &r.field(&raw.targets, "targets")?,
            r.n_paths()?,
            &r.ratio_options()?,
        )?,
        Suite::Green => harness::green_report(
            &r.domain()?,
            &r.kernel,
            &r.field(&raw.x0, "x0")?,
            r.field(&raw.cell_width, "cell_width")?,
            r.n_paths()?,
            r.field(&raw.base_step, "base_step")?,
            r.seed,
            r.band()?,
            r.field(&raw.tail, "tail")?,
        )?,
        Suite::GreenOracle => harness::green_oracle_report(
            &r.field(&raw.dims, "dims")?,
            r.field(&raw.lower_rate, "lower_rate")?,
            r.band()?,
        )?,
        Suite::Factorization => harness::factorization_report(
            &r.domain()?,
            &r.jump_kernel()?,
            &r.times_within_horizon()?,
            &r.field(&raw.pairs, "pairs")?,
            r.n_paths()?,
            &r.ratio_options()?,
        )?,
        Suite::ExitTime => harness::exit_time_report(
            &r.kernel,
            &r.field(&raw.x0, "x0")?,
            r.field(&raw.radius, "radius")?,
            r.field(&raw.time_scale, "time_scale")?,
            r.field(&raw.n_starts, "n_starts")?,
            r.n_paths()?,
            r.field(&raw.base_step, "base_step")?,
            r.seed,
        )?,
    };
    Ok(report)
}

/// Reproducibility block written at the top of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Header {
    pub fn for_config(cfg: &Config) -> Self {
        Self {
            config_hash: cfg.hash.clone(),
            seed: cfg.seed,
            version: VERSION.to_string(),
        }
    }

    fn json(&self) -> Value {
        serde_json::json!({
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
        })
    }

    fn csv_comment(&self) -> String {
        format!(
            "# config_hash={}\n# seed={}\n# version={}\n",
            self.config_hash, self.seed, self.version
        )
    }
}

/// Pretty JSON with sorted keys, a `header` object and a final newline.
pub fn to_json<T: serde::Serialize>(value: &T, header: &Header) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| RunError::Io(e.to_string()))?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("header".into(), header.json());
        }
        None => v = serde_json::json!({ "header": header.json(), "value": v }),
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| RunError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `rows` (header row included) preceded by the comment block.
pub fn to_csv(rows: &str, header: &Header) -> String {
    let mut s = header.csv_comment();
    s.push_str(rows);
    s
}

/// `r,j` rows of the jump kernel over `radii`.
pub fn dump_j(cfg: &Config) -> Result<String> {
    let k = JumpKernel::new(cfg.dim, cfg.kernel.clone())?;
    let radii = cfg.raw.radii.clone().unwrap_or_else(|| log_grid(1e-3, 1e2, 51));
    let mut out = String::from("r,j\n");
    for r in radii {
        out.push_str(&format!("{r},{}\n", k.j(r)?));
    }
    Ok(out)
}

/// `t,r,p,stderr` rows of the free transition density.
pub fn dump_p(cfg: &Config) -> Result<String> {
    let k = JumpKernel::new(cfg.dim, cfg.kernel.clone())?;
    let e = harness::free_evaluator(&k, cfg.seed)?;
    let times = cfg.raw.times.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.5]);
    let radii = cfg.raw.radii.clone().unwrap_or_else(|| (0..=20).map(|i| 0.1 * i as f64).collect());
    let mut out = String::from("t,r,p,stderr\n");
    for &t in &times {
        for &r in &radii {
            let p = e.p(t, r)?;
            out.push_str(&format!("{t},{r},{},{}\n", p.estimate, p.stderr));
        }
    }
    Ok(out)
}

/// `t,x,y,h_lo,h_hi` rows of the lower and upper envelope forms.
pub fn envelope_dump(cfg: &Config) -> Result<String> {
    let r = Resolved::new(Suite::Sandwich, cfg);
    let domain = r.domain()?;
    let k = r.jump_kernel()?;
    let times = r.field(&r.raw.times, "times")?;
    let lower = r.field(&r.raw.lower_rate, "lower_rate")?;
    let upper = match cfg.upper_constants() {
        Some(u) => u,
        None => harness::fit_upper_constants(&k, &times, domain.characteristics().diam, cfg.seed)?,
    };
    let p = EnvelopeParams::from_global(lower, 1.0, upper.c1, upper.c2, upper.c3)?;
    let terms = r.raw.terms.unwrap_or_default();
    let coords = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
    let mut out = String::from("t,x,y,h_lo,h_hi\n");
    for &t in &times {
        for (x, y) in r.field(&r.raw.pairs, "pairs")? {
            let lo = h_with(&domain, &k, t, &x, &y, lower, 1.0, terms);
            let hi = h_with(&domain, &k, t, &x, &y, p.big_c4, p.big_c5, terms);
            out.push_str(&format!("{t},{},{},{lo},{hi}\n", coords(&x), coords(&y)));
        }
    }
    Ok(out)
}

/// `t,y,p_hat,stderr` rows of the killed-process histogram from `x0` on a
/// grid over the domain's bounding box.
pub fn simulate(cfg: &Config) -> Result<String> {
    let r = Resolved::new(Suite::Sandwich, cfg);
    let domain = r.domain()?;
    let (lo, hi) = domain
        .bounding_box()
        .ok_or_else(|| RunError::Usage("simulate needs a bounded domain".into()))?;
    let width = cfg.raw.cell_width.unwrap_or(0.05);
    let n = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / width).round().max(1.0) as usize).collect();
    let grid = CellGrid::new(lo, hi, n)?;
    let times = r.times_within_horizon()?;
    let kc = KilledPathConfig::new(
        domain,
        r.field(&r.raw.x0, "x0")?,
        *times.last().expect("validated non-empty"),
        r.field(&r.raw.base_step, "base_step")?,
        cfg.n_paths_or(100_000),
        cfg.seed,
    )?;
    let hist = heat_kernel_estimate(&kc, &cfg.kernel, &times, &grid)?;
    let coords = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
    let mut out = String::from("t,y,p_hat,stderr\n");
    for (ti, &t) in times.iter().enumerate() {
        for c in 0..grid.len() {
            let e = hist.density(ti, c);
            out.push_str(&format!("{t},{},{},{}\n", coords(&grid.center(c)), e.estimate, e.stderr));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_are_kebab_case() {
        assert_eq!(Suite::CrossComponent.name(), "cross-component");
        assert_eq!(Suite::from_str("green-oracle", false).unwrap(), Suite::GreenOracle);
    }

    #[test]
    fn config_fields_override_suite_defaults() {
        let cfg = parse_config(r#"{"seed": 1, "n_paths": 50}"#).unwrap();
        let r = Resolved::new(Suite::Sandwich, &cfg);
        assert_eq!(r.raw.n_paths, Some(50));
        assert_eq!(r.raw.box_width, Some(0.02));
        assert_eq!(r.raw.pairs.as_ref().unwrap().len(), 9);
    }

    #[test]
    fn boundary_starts_lie_at_the_requested_distance() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let s = boundary_starts(&d, &[0.5], &[0.02, 0.1]).unwrap();
        for (x, want) in s.iter().zip([0.02, 0.1]) {
            assert!((d.delta(x) - want).abs() < 1e-12);
        }
        assert!(boundary_starts(&d, &[0.5], &[0.7]).is_err());
    }

    #[test]
    fn times_beyond_the_horizon_are_usage_errors() {
        let cfg = parse_config(r#"{"seed": 1, "times": [0.5, 2.0]}"#).unwrap();
        let e = run_suite(Suite::Sandwich, &cfg).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn json_has_sorted_keys_and_header() {
        let cfg = parse_config(r#"{"seed": 3}"#).unwrap();
        let s = to_json(&serde_json::json!({"b": 1, "a": 2}), &Header::for_config(&cfg)).unwrap();
        let (a, b, h) = (s.find("\"a\"").unwrap(), s.find("\"b\"").unwrap(), s.find("\"header\"").unwrap());
        assert!(a < b && b < h);
        assert!(s.ends_with("}\n") && !s.contains('\r'));
    }
}
