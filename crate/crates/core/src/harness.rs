//! Verification campaigns. Each campaign runs its simulations or
//! quadratures, fits the free constants of the bound under test and
//! returns a [`RatioReport`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bernstein::{BernsteinFunction, ScalingRegime};
use crate::envelope::{factorization_upper, g, green_time_integral_oracle, h_with, lambda1_bracket, HTerms};
use crate::error::{Error, Result};
use crate::free_density::{DensityMethod, FreeDensityEvaluator, GlobalUpperFit};
use crate::geometry::{distance, Domain, Shape};
use crate::levy_kernel::{stable_j_closed_form, JumpKernel};
use crate::simulate::{
    exit_distribution_check, exit_time_lowerbound_check, green_estimate, heat_kernel_estimate, survival_curve,
    survival_probability, BoxSet, CellGrid, KilledPathConfig, McEstimate, BIAS_NOTE,
};

/// Relative standard error above which an estimate is too noisy to judge.
pub const MAX_RELATIVE_STDERR: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Closed acceptance interval `[lo, hi]` for ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const SANDWICH: Band = Band { lo: 0.01, hi: 100.0 };
    pub const CROSS_COMPONENT: Band = Band { lo: 0.02, hi: 50.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Parameter(format!("invalid band [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

impl Default for Band {
    fn default() -> Self {
        Band::SANDWICH
    }
}

/// Which ratios of a grid point are held to the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gate {
    #[default]
    Both,
    /// Upper-bound campaigns: only `ratio_hi <= band.hi` is required.
    UpperOnly,
}

/// One `(t, x, y)` of a ratio campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p_hat: f64,
    pub stderr: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

impl RatioPoint {
    fn new(t: f64, x: &[f64], y: &[f64], est: McEstimate, h_lo: f64, h_hi: f64) -> Self {
        Self {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
            p_hat: est.estimate,
            stderr: est.stderr,
            h_lo,
            h_hi,
            ratio_lo: est.estimate / h_lo,
            ratio_hi: est.estimate / h_hi,
        }
    }

    /// The estimate is resolved well enough to be judged.
    pub fn is_resolved(&self) -> bool {
        self.p_hat > 0.0 && self.stderr <= MAX_RELATIVE_STDERR * self.p_hat
    }
}

/// A scalar verdict, e.g. a fitted slope against its target interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
    pub status: Status,
    /// Non-gating checks are reported but do not affect the report status.
    pub gating: bool,
}

impl Check {
    fn interval(name: impl Into<String>, value: f64, stderr: f64, lo: f64, hi: f64) -> Self {
        let status = if value >= lo && value <= hi { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            value,
            stderr,
            lo,
            hi,
            status,
            gating: true,
        }
    }

    fn inconclusive(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            stderr: f64::NAN,
            lo,
            hi,
            status: Status::Inconclusive,
            gating: true,
        }
    }

    fn diagnostic(mut self) -> Self {
        self.gating = false;
        self
    }
}

/// A point of a one-dimensional series, e.g. survival against time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub suite: String,
    pub status: Status,
    pub ratios: RatioRange,
    pub fitted_constants: BTreeMap<String, f64>,
    pub band: Band,
    pub gate: Gate,
    pub grid: Vec<RatioPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
    pub notes: Vec<String>,
    /// Wall-clock seconds; left empty unless the caller asks for timing,
    /// so that reports stay byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl RatioReport {
    pub fn new(suite: impl Into<String>, band: Band) -> Self {
        Self {
            suite: suite.into(),
            status: Status::Inconclusive,
            ratios: RatioRange {
                min: f64::NAN,
                max: f64::NAN,
            },
            fitted_constants: BTreeMap::new(),
            band,
            gate: Gate::Both,
            grid: Vec::new(),
            checks: Vec::new(),
            series: Vec::new(),
            notes: Vec::new(),
            runtime_s: None,
        }
    }

    fn fit(&mut self, name: &str, value: f64) {
        self.fitted_constants.insert(name.to_string(), value);
    }

    fn gated_ratios(&self, p: &RatioPoint) -> Vec<f64> {
        match self.gate {
            Gate::Both => vec![p.ratio_lo, p.ratio_hi],
            Gate::UpperOnly => vec![p.ratio_hi],
        }
    }

    fn point_in_band(&self, p: &RatioPoint) -> bool {
        match self.gate {
            Gate::Both => self.band.contains(p.ratio_lo) && self.band.contains(p.ratio_hi),
            Gate::UpperOnly => p.ratio_hi <= self.band.hi,
        }
    }

    /// Sets `ratios` and `status`. A resolved point or gating check outside
    /// its interval fails the report; otherwise any unresolved point or
    /// inconclusive check makes it inconclusive.
    fn finish(mut self) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.grid {
            for r in self.gated_ratios(p) {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        if self.grid.is_empty() {
            for c in self.checks.iter().filter(|c| c.gating && c.value.is_finite()) {
                lo = lo.min(c.value);
                hi = hi.max(c.value);
            }
        }
        self.ratios = if lo <= hi {
            RatioRange { min: lo, max: hi }
        } else {
            RatioRange {
                min: f64::NAN,
                max: f64::NAN,
            }
        };
        let gating: Vec<&Check> = self.checks.iter().filter(|c| c.gating).collect();
        let failed = self.grid.iter().any(|p| p.is_resolved() && !self.point_in_band(p))
            || gating.iter().any(|c| c.status == Status::Fail);
        let unresolved = self.grid.iter().any(|p| !p.is_resolved())
            || gating.iter().any(|c| c.status == Status::Inconclusive)
            || (self.grid.is_empty() && gating.is_empty());
        self.status = if failed {
            Status::Fail
        } else if unresolved {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        self
    }

    /// For a two-sided report, `c_lo <= c_hi * max(h_hi / h_lo)` over the
    /// grid; this follows from the fitted constants being grid extrema.
    pub fn is_internally_consistent(&self) -> bool {
        let (Some(&c_lo), Some(&c_hi)) = (self.fitted_constants.get("c_lo"), self.fitted_constants.get("c_hi")) else {
            return true;
        };
        let spread = self
            .grid
            .iter()
            .filter(|p| p.h_lo > 0.0)
            .map(|p| p.h_hi / p.h_lo)
            .fold(0.0, f64::max);
        c_lo <= c_hi * spread * (1.0 + 1e-12)
    }

    /// Plot-ready rows `t,x,y,p_hat,stderr,h_lo,h_hi,ratio_lo,ratio_hi`;
    /// coordinates of a point are joined by `;`.
    pub fn csv_rows(&self) -> String {
        let coords = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        let mut out = String::from("t,x,y,p_hat,stderr,h_lo,h_hi,ratio_lo,ratio_hi\n");
        for p in &self.grid {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.t,
                coords(&p.x),
                coords(&p.y),
                p.p_hat,
                p.stderr,
                p.h_lo,
                p.h_hi,
                p.ratio_lo,
                p.ratio_hi
            ));
        }
        out
    }
}

/// Settings shared by the heat kernel ratio campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioOptions {
    pub base_step: f64,
    /// Side of the boxes around each target `y`.
    pub box_width: f64,
    /// Gaussian rate `c` of the lower form `h_{D,c,1}`.
    pub lower_rate: f64,
    pub band: Band,
    pub terms: HTerms,
    pub seed: u64,
}

impl RatioOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            base_step: 1e-3,
            box_width: 0.02,
            lower_rate: 0.5,
            band: Band::SANDWICH,
            terms: HTerms::Both,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0 && self.box_width > 0.0 && self.lower_rate > 0.0) {
            return Err(Error::Parameter("base_step, box_width and lower_rate must be positive".into()));
        }
        Band::new(self.band.lo, self.band.hi).map(|_| ())
    }
}

type PairEstimates = Vec<(f64, Vec<f64>, Vec<f64>, McEstimate)>;

/// Estimates `p_D(t, x, y)` for every time and pair, one simulation per
/// distinct start with `budget` split evenly between starts. Pairs whose
/// target sits closer than two box widths to the boundary are dropped.
fn estimate_pairs(
    domain: &Domain,
    f: &BernsteinFunction,
    times: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
    budget: usize,
    opts: &RatioOptions,
    notes: &mut Vec<String>,
) -> Result<PairEstimates> {
    let mut starts: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
    for (x, y) in pairs {
        if x.len() != domain.dim() || y.len() != domain.dim() {
            return Err(Error::Parameter("point dimension differs from the domain".into()));
        }
        if !domain.contains(x) || !domain.contains(y) {
            return Err(Error::Domain(format!("pair ({x:?}, {y:?}) leaves {domain}")));
        }
        if domain.delta(y) < 2.0 * opts.box_width {
            notes.push(format!("dropped y = {y:?}: closer than two box widths to the boundary"));
            continue;
        }
        match starts.iter_mut().find(|(s, _)| s == x) {
            Some((_, ys)) => ys.push(y.clone()),
            None => starts.push((x.clone(), vec![y.clone()])),
        }
    }
    if starts.is_empty() {
        return Ok(Vec::new());
    }
    let per_start = budget / starts.len();
    if per_start == 0 {
        notes.push("Monte Carlo budget is zero".into());
        return Ok(Vec::new());
    }
    let t_end = *times.last().expect("times checked non-empty");
    let mut out = Vec::new();
    for (i, (x, ys)) in starts.iter().enumerate() {
        let cfg = KilledPathConfig::new(
            domain.clone(),
            x.clone(),
            t_end,
            opts.base_step,
            per_start,
            opts.seed.wrapping_add(i as u64),
        )?;
        let boxes = BoxSet::new(ys.clone(), opts.box_width)?;
        let hist = heat_kernel_estimate(&cfg, f, times, &boxes)?;
        for (ti, &t) in times.iter().enumerate() {
            for (yi, y) in ys.iter().enumerate() {
                out.push((t, x.clone(), y.clone(), hist.density(ti, yi)));
            }
        }
    }
    notes.push(format!("{per_start} paths per start, base_step {}", opts.base_step));
    notes.push(BIAS_NOTE.into());
    Ok(out)
}

fn check_grid(times: &[f64], horizon: Option<f64>) -> Result<()> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be positive and strictly increasing".into()));
    }
    if let Some(h) = horizon {
        if *times.last().unwrap() > h {
            return Err(Error::Parameter(format!("time grid exceeds the horizon {h}")));
        }
    }
    Ok(())
}

/// Free-space evaluator used to fit global constants: exact quadrature
/// for stable entries, sampling otherwise.
pub fn free_evaluator(kernel: &JumpKernel, seed: u64) -> Result<FreeDensityEvaluator> {
    let f = kernel.bernstein().clone();
    let method = if f.stable_alpha().is_some() {
        DensityMethod::Quadrature
    } else {
        DensityMethod::MonteCarlo {
            n_samples: 200_000,
            seed,
        }
    };
    FreeDensityEvaluator::new(kernel.dim(), f, method)
}

/// Fits `(C1, C2, C3)` of the free-space upper envelope over
/// `times x [0, r_max]`.
pub fn fit_upper_constants(kernel: &JumpKernel, times: &[f64], r_max: f64, seed: u64) -> Result<GlobalUpperFit> {
    let e = free_evaluator(kernel, seed)?;
    let radii: Vec<f64> = (0..=20).map(|i| r_max * i as f64 / 20.0).collect();
    e.fit_global_upper(times, &radii, &[1.0, 2.0, 4.0, 8.0], &[1.0, 2.0])
}

/// Two-sided comparison of `p_D` with `h_{D,c,1}` below and
/// `h_{D,C4,C5}` above. `upper` defaults to a free-space fit.
pub fn sandwich_report(
    domain: &Domain,
    kernel: &JumpKernel,
    times: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
    mc_budget: usize,
    opts: &RatioOptions,
    upper: Option<GlobalUpperFit>,
) -> Result<RatioReport> {
    if !domain.is_bounded() {
        return Err(Error::Precondition("the sandwich campaign needs a bounded domain".into()));
    }
    check_grid(times, None)?;
    opts.validate()?;
    let upper = match upper {
        Some(u) => u,
        None => fit_upper_constants(kernel, times, domain.characteristics().diam, opts.seed)?,
    };
    let params = crate::envelope::EnvelopeParams::from_global(opts.lower_rate, 1.0, upper.c1, upper.c2, upper.c3)?;
    let mut report = RatioReport::new("sandwich", opts.band);
    report.fit("lower_rate", opts.lower_rate);
    report.fit("C1", upper.c1);
    report.fit("C2", upper.c2);
    report.fit("C3", upper.c3);
    report.fit("C4", params.big_c4);
    report.fit("C5", params.big_c5);
    let est = estimate_pairs(domain, kernel.bernstein(), times, pairs, mc_budget, opts, &mut report.notes)?;
    for (t, x, y, e) in est {
        let lo = h_with(domain, kernel, t, &x, &y, opts.lower_rate, 1.0, opts.terms);
        let hi = h_with(domain, kernel, t, &x, &y, params.big_c4, params.big_c5, opts.terms);
        report.grid.push(RatioPoint::new(t, &x, &y, e, lo, hi));
    }
    if !report.grid.is_empty() {
        let c_lo = report.grid.iter().map(|p| p.ratio_lo).fold(f64::INFINITY, f64::min);
        let c_hi = report.grid.iter().map(|p| p.ratio_hi).fold(0.0, f64::max);
        report.fit("c_lo", c_lo);
        report.fit("c_hi", c_hi);
    }
    if opts.terms != HTerms::Both {
        report.notes.push(format!("envelope terms: {:?}", opts.terms));
    }
    Ok(report.finish())
}

/// `p_D(t, x, y)` against `h` for `x` and `y` in different components,
/// where only the jump term can carry mass between them.
pub fn cross_component_report(
    domain: &Domain,
    kernel: &JumpKernel,
    times: &[f64],
    x: &[f64],
    ys: &[Vec<f64>],
    mc_budget: usize,
    opts: &RatioOptions,
) -> Result<RatioReport> {
    if !matches!(domain.shape(), Shape::DisjointBalls { .. }) {
        return Err(Error::Precondition("the cross-component campaign needs disjoint balls".into()));
    }
    check_grid(times, None)?;
    opts.validate()?;
    for y in ys {
        if domain.same_component(x, y)? {
            return Err(Error::Precondition(format!("{x:?} and {y:?} lie in the same component")));
        }
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = ys.iter().map(|y| (x.to_vec(), y.clone())).collect();
    let mut report = RatioReport::new("cross-component", opts.band);
    report.fit("lower_rate", opts.lower_rate);
    let est = estimate_pairs(domain, kernel.bernstein(), times, &pairs, mc_budget, opts, &mut report.notes)?;
    for (t, x, y, e) in est {
        let den = h_with(domain, kernel, t, &x, &y, opts.lower_rate, 1.0, opts.terms);
        report.grid.push(RatioPoint::new(t, &x, &y, e, den, den));
    }
    for (i, y) in ys.iter().enumerate() {
        let pts: Vec<(f64, f64, f64)> = report
            .grid
            .iter()
            .filter(|p| &p.y == y && p.is_resolved())
            .map(|p| (p.t.ln(), p.ratio_lo.ln(), (p.p_hat / p.stderr).powi(2)))
            .collect();
        if pts.len() >= 2 {
            let (m, se) = weighted_slope(&pts);
            report.fit(&format!("trend_slope_{i}"), m);
            report.checks.push(Check::interval(format!("flat trend in log t, y = {y:?}"), m, se, -0.3, 0.3).diagnostic());
        }
    }
    if opts.terms != HTerms::Both {
        report.notes.push(format!("envelope terms: {:?}", opts.terms));
    }
    Ok(report.finish())
}

/// Weighted least-squares slope of `(x, y, w)` and its standard error.
fn weighted_slope(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Decay rate of `P_x(tau_D > t)` over a large-time window against the
/// bracket `[phi(lambda_1^D)/2, phi(lambda_1^D)]`, widened by `slack`.
#[allow(clippy::too_many_arguments)]
pub fn eigen_report(
    domain: &Domain,
    f: &BernsteinFunction,
    x0: &[f64],
    times: &[f64],
    n_paths: usize,
    base_step: f64,
    seed: u64,
    slack: f64,
) -> Result<RatioReport> {
    if !domain.is_bounded() || !domain.is_connected() {
        return Err(Error::Precondition("the eigenvalue campaign needs a bounded connected domain".into()));
    }
    check_grid(times, None)?;
    let (lo, hi) = lambda1_bracket(domain, f)?;
    let (lo_ok, hi_ok) = ((1.0 - slack) * lo, (1.0 + slack) * hi);
    let mut report = RatioReport::new("eigen", Band::new(lo_ok, hi_ok)?);
    report.fit("bracket_lo", lo);
    report.fit("bracket_hi", hi);
    let name = "decay rate";
    if n_paths == 0 {
        report.checks.push(Check::inconclusive(name, lo_ok, hi_ok));
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let cfg = KilledPathConfig::new(domain.clone(), x0.to_vec(), *times.last().unwrap(), base_step, n_paths, seed)?;
    let curve = survival_curve(&cfg, f, times)?;
    let mut pts = Vec::new();
    for (&t, e) in times.iter().zip(&curve) {
        report.series.push(SeriesPoint {
            x: t,
            estimate: e.estimate,
            stderr: e.stderr,
        });
        if e.estimate > 0.0 && e.stderr <= MAX_RELATIVE_STDERR * e.estimate {
            pts.push((t, e.estimate.ln(), (e.estimate / e.stderr).powi(2)));
        }
    }
    if pts.len() < 3 {
        report.checks.push(Check::inconclusive(name, lo_ok, hi_ok));
        report.notes.push(format!("only {} usable survival points", pts.len()));
    } else {
        let (m, se) = weighted_slope(&pts);
        report.fit("lambda1_hat", -m);
        report.fit("lambda1_stderr", se);
        report.checks.push(Check::interval(name, -m, se, lo_ok, hi_ok));
    }
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// Slope of `log P_x(tau_D > t)` against `log delta_D(x)` over `starts`,
/// required to lie within `tol` of `expected`.
#[allow(clippy::too_many_arguments)]
pub fn survival_exponent_report(
    domain: &Domain,
    f: &BernsteinFunction,
    starts: &[Vec<f64>],
    t: f64,
    n_paths: usize,
    base_step: f64,
    seed: u64,
    expected: f64,
    tol: f64,
) -> Result<RatioReport> {
    if starts.len() < 2 {
        return Err(Error::Parameter("need at least two starts".into()));
    }
    let mut report = RatioReport::new("survival-exponent", Band::new(expected - tol, expected + tol)?);
    let (lo, hi) = (expected - tol, expected + tol);
    if n_paths == 0 {
        report.checks.push(Check::inconclusive("slope", lo, hi));
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let mut pts = Vec::new();
    let mut resolved = true;
    for (i, x) in starts.iter().enumerate() {
        let cfg = KilledPathConfig::new(domain.clone(), x.clone(), t, base_step, n_paths, seed.wrapping_add(i as u64))?;
        let e = survival_probability(&cfg, f)?;
        let delta = domain.delta(x);
        report.series.push(SeriesPoint {
            x: delta,
            estimate: e.estimate,
            stderr: e.stderr,
        });
        if e.estimate > 0.0 && e.stderr <= MAX_RELATIVE_STDERR * e.estimate {
            pts.push((delta.ln(), e.estimate.ln(), (e.estimate / e.stderr).powi(2)));
        } else {
            resolved = false;
        }
    }
    if !resolved || pts.len() < 2 {
        report.checks.push(Check::inconclusive("slope", lo, hi));
    } else {
        let (m, se) = weighted_slope(&pts);
        report.fit("slope", m);
        report.fit("slope_stderr", se);
        report.checks.push(Check::interval("slope", m, se, lo, hi));
    }
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// Both sides of the Lévy system identity for the exit of the ball `u`
/// into `a`, required to agree within `k_sigma` paired standard errors.
#[allow(clippy::too_many_arguments)]
pub fn levy_system_report(
    kernel: &JumpKernel,
    u: &Domain,
    x: &[f64],
    a: &Domain,
    n_paths: usize,
    base_step: f64,
    seed: u64,
    k_sigma: f64,
) -> Result<RatioReport> {
    let mut report = RatioReport::new("levy-system", Band::SANDWICH);
    if n_paths == 0 {
        report.checks.push(Check::inconclusive("lhs - rhs", f64::NAN, f64::NAN));
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let c = exit_distribution_check(kernel, u, x, a, n_paths, base_step, seed)?;
    report.fit("lhs", c.lhs.estimate);
    report.fit("lhs_stderr", c.lhs.stderr);
    report.fit("rhs", c.rhs.estimate);
    report.fit("rhs_stderr", c.rhs.stderr);
    let s = c.difference.stderr;
    let mut check = Check::interval("lhs - rhs", c.difference.estimate, s, -k_sigma * s, k_sigma * s);
    if !(c.lhs.estimate > 0.0) {
        check.status = Status::Inconclusive;
        report.notes.push("no path exited into A".into());
    }
    report.checks.push(check);
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// Occupation-density estimate of `G_D(x0, .)` against `g_D` on a cell
/// grid of side about `cell_width`. The time cap is set so that
/// `P(tau_D > t_max) <= tail`; cells too close to `x0` or to the boundary
/// are excluded.
#[allow(clippy::too_many_arguments)]
pub fn green_report(
    domain: &Domain,
    f: &BernsteinFunction,
    x0: &[f64],
    cell_width: f64,
    n_paths: usize,
    base_step: f64,
    seed: u64,
    band: Band,
    tail: f64,
) -> Result<RatioReport> {
    let d = domain.dim();
    if !domain.is_bounded() || !(1..=3).contains(&d) {
        return Err(Error::Precondition("the Green campaign needs a bounded domain in d <= 3".into()));
    }
    if !(cell_width > 0.0 && tail > 0.0 && tail < 1.0) {
        return Err(Error::Parameter("cell_width must be positive and tail in (0, 1)".into()));
    }
    let (lo, _) = lambda1_bracket(domain, f)?;
    let t_max = (1.0 / tail).ln() / lo;
    let mut report = RatioReport::new("green", band);
    report.fit("t_max", t_max);
    if n_paths == 0 {
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let (bl, bh) = domain.bounding_box().expect("bounded domain");
    let n: Vec<usize> = bl.iter().zip(&bh).map(|(l, h)| ((h - l) / cell_width).round().max(1.0) as usize).collect();
    let grid = CellGrid::new(bl, bh, n)?;
    let cfg = KilledPathConfig::new(domain.clone(), x0.to_vec(), t_max, base_step, n_paths, seed)?;
    let est = green_estimate(&cfg, f, &grid)?;
    let diam = grid.cell_diameter();
    let width = (0..d).map(|k| grid.width(k)).fold(0.0, f64::max);
    for (c, e) in est.density.iter().enumerate() {
        let y = grid.center(c);
        if !domain.contains(&y) || distance(x0, &y) <= 2.0 * diam || domain.delta(&y) < 2.0 * width {
            continue;
        }
        let gv = g(domain, x0, &y)?;
        report.grid.push(RatioPoint::new(t_max, x0, &y, *e, gv, gv));
    }
    if !report.grid.is_empty() {
        report.fit("c_lo", report.grid.iter().map(|p| p.ratio_lo).fold(f64::INFINITY, f64::min));
        report.fit("c_hi", report.grid.iter().map(|p| p.ratio_hi).fold(0.0, f64::max));
    }
    report.fit("mean_exit_time", est.mean_exit_time.estimate);
    report.fit("survived_at_cap", est.survived_at_cap.estimate);
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// Time integral of the heat kernel envelope against `g_D` by quadrature,
/// on the unit ball in each requested dimension.
pub fn green_oracle_report(dims: &[usize], c1: f64, band: Band) -> Result<RatioReport> {
    let mut report = RatioReport::new("green-oracle", band);
    report.fit("c1", c1);
    for &dim in dims {
        let domain = Domain::ball(vec![0.0; dim], 1.0)?;
        let horizon = domain.characteristics().diam.powi(2);
        for i in 0..8 {
            for j in 0..8 {
                let mut x = vec![0.0; dim];
                let mut y = vec![0.0; dim];
                x[0] = -0.95 + 0.25 * i as f64;
                y[0] = -0.9 + 0.25 * j as f64;
                if dim > 1 {
                    y[1] = 0.1;
                }
                if !(domain.contains(&x) && domain.contains(&y)) || x == y {
                    continue;
                }
                let v = green_time_integral_oracle(&domain, &x, &y, c1, horizon)?;
                let gv = g(&domain, &x, &y)?;
                let exact = McEstimate { estimate: v, stderr: 0.0 };
                report.grid.push(RatioPoint::new(horizon, &x, &y, exact, gv, gv));
            }
        }
    }
    Ok(report.finish())
}

/// Upper comparison of `p_D` with `(1∧δx/√t)(1∧δy/√t) p(t, |x-y|/4)`.
/// The kernel must satisfy the upper scaling condition at infinity.
pub fn factorization_report(
    domain: &Domain,
    kernel: &JumpKernel,
    times: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
    mc_budget: usize,
    opts: &RatioOptions,
) -> Result<RatioReport> {
    let fit = kernel.bernstein().check_scaling(ScalingRegime::PsiUp)?;
    if !fit.admissible() {
        return Err(Error::Precondition(format!(
            "upper scaling fails: delta = {}, C6 = {}",
            fit.delta, fit.a
        )));
    }
    check_grid(times, None)?;
    opts.validate()?;
    let free = free_evaluator(kernel, opts.seed)?;
    let mut report = RatioReport::new("factorization", opts.band);
    report.gate = Gate::UpperOnly;
    report.fit("psiup_delta", fit.delta);
    report.fit("psiup_c6", fit.a);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .iter()
        .filter(|(x, y)| domain.delta(x) > 0.0 && domain.delta(y) > 0.0)
        .cloned()
        .collect();
    let est = estimate_pairs(domain, kernel.bernstein(), times, &pairs, mc_budget, opts, &mut report.notes)?;
    for (t, x, y, e) in est {
        let den = factorization_upper(domain, &free, t, &x, &y, 1.0)?;
        report.grid.push(RatioPoint::new(t, &x, &y, e, den, den));
    }
    if !report.grid.is_empty() {
        report.fit("c_hi", report.grid.iter().map(|p| p.ratio_hi).fold(0.0, f64::max));
    }
    Ok(report.finish())
}

/// `P(tau > t)` for Brownian motion with generator `Δ` started at the
/// midpoint of an interval of half-width one.
pub fn brownian_interval_survival(t: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..200 {
        let m = (2 * k + 1) as f64;
        let term = 4.0 / (m * PI) * (-m * m * PI * PI * t / 4.0).exp();
        s += if k % 2 == 0 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    s
}

/// Killed-path survival of the drift-only process in `(-1, 1)` against the
/// eigenfunction series, each time within `k_sigma` standard errors.
pub fn gaussian_oracle_report(times: &[f64], n_paths: usize, base_step: f64, seed: u64, k_sigma: f64) -> Result<RatioReport> {
    check_grid(times, None)?;
    let mut report = RatioReport::new("gaussian-oracle", Band::SANDWICH);
    if n_paths == 0 {
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let domain = Domain::interval(-1.0, 1.0)?;
    let cfg = KilledPathConfig::new(domain, vec![0.0], *times.last().unwrap(), base_step, n_paths, seed)?;
    let curve = survival_curve(&cfg, &BernsteinFunction::drift_only(), times)?;
    for (&t, e) in times.iter().zip(&curve) {
        let exact = brownian_interval_survival(t);
        let z = (e.estimate - exact) / e.stderr;
        report.series.push(SeriesPoint {
            x: t,
            estimate: e.estimate,
            stderr: e.stderr,
        });
        report.fit(&format!("exact_t{t}"), exact);
        report.checks.push(Check::interval(format!("z-score at t = {t}"), z, 1.0, -k_sigma, k_sigma));
    }
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// `r^{d+alpha} j(r)` constant over `radii` within `rel_tol`, for each
/// stable index and dimension, and equal to the closed-form constant.
pub fn kernel_scaling_report(alphas: &[f64], dims: &[usize], radii: &[f64], rel_tol: f64) -> Result<RatioReport> {
    let mut report = RatioReport::new("kernel-scaling", Band::SANDWICH);
    for &alpha in alphas {
        for &d in dims {
            let k = JumpKernel::new(d, BernsteinFunction::stable(alpha)?)?;
            let vals: Vec<f64> = radii
                .iter()
                .map(|&r| k.j(r).map(|j| j * r.powf(d as f64 + alpha)))
                .collect::<Result<_>>()?;
            let reference = stable_j_closed_form(d, alpha, 1.0);
            let spread = vals.iter().map(|v| (v / vals[0] - 1.0).abs()).fold(0.0, f64::max);
            let off = vals.iter().map(|v| (v / reference - 1.0).abs()).fold(0.0, f64::max);
            report.checks.push(Check::interval(format!("scaling spread alpha={alpha} d={d}"), spread, 0.0, 0.0, rel_tol));
            report.checks.push(Check::interval(format!("closed form alpha={alpha} d={d}"), off, 0.0, 0.0, rel_tol));
        }
    }
    Ok(report.finish())
}

/// Numerical `int (1 - e^{-lambda t}) mu(t) dt` against `psi(lambda)` for
/// each entry, relative error at most `rel_tol`.
pub fn laplace_roundtrip_report(entries: &[BernsteinFunction], lambdas: &[f64], rel_tol: f64) -> Result<RatioReport> {
    let mut report = RatioReport::new("laplace-roundtrip", Band::SANDWICH);
    for f in entries {
        let mut worst = 0.0f64;
        for &l in lambdas {
            let num = f.laplace_exponent_numeric(l, 1e-10)?;
            worst = worst.max((num / f.psi(l)? - 1.0).abs());
        }
        report.checks.push(Check::interval(format!("round trip {f}"), worst, 0.0, 0.0, rel_tol));
    }
    Ok(report.finish())
}

/// `min_y P_y(tau_{B(z,2r)} > a r^2)` over `y in B(z, r)` bounded away
/// from zero.
#[allow(clippy::too_many_arguments)]
pub fn exit_time_report(
    f: &BernsteinFunction,
    z: &[f64],
    r: f64,
    a: f64,
    n_starts: usize,
    n_paths: usize,
    base_step: f64,
    seed: u64,
) -> Result<RatioReport> {
    let mut report = RatioReport::new("exit-time", Band::SANDWICH);
    if n_paths == 0 {
        report.checks.push(Check::inconclusive("min survival - 3 sigma", 0.0, 1.0));
        report.notes.push("Monte Carlo budget is zero".into());
        return Ok(report.finish());
    }
    let e = exit_time_lowerbound_check(f, z, r, a, n_starts, n_paths, base_step, seed)?;
    for (y, p) in e.starts.iter().zip(&e.per_start) {
        report.series.push(SeriesPoint {
            x: distance(y, z),
            estimate: p.estimate,
            stderr: p.stderr,
        });
    }
    report.fit("min_survival", e.min.estimate);
    let margin = e.min.estimate - 3.0 * e.min.stderr;
    let mut check = Check::interval("min survival - 3 sigma", margin, e.min.stderr, f64::MIN_POSITIVE, 1.0);
    check.status = if e.positive { Status::Pass } else { Status::Fail };
    report.checks.push(check);
    report.notes.push(BIAS_NOTE.into());
    Ok(report.finish())
}

/// Standing conditions on a kernel and a domain: shape of `phi`, weak
/// scaling fits, doubling constants of `mu` and `j`, and the domain's
/// characteristics.
pub fn conditions_report(f: &BernsteinFunction, domain: &Domain) -> Result<RatioReport> {
    let mut report = RatioReport::new("check-conditions", Band::SANDWICH);
    let record = |report: &mut RatioReport, name: &str, r: Result<f64>, lo: f64, hi: f64| match r {
        Ok(v) => report.checks.push(Check::interval(name, v, 0.0, lo, hi)),
        Err(e) => report.notes.push(format!("{name}: {e}")),
    };
    let shape = f.check_shape();
    record(&mut report, "shape", shape.as_ref().map(|_| 1.0).map_err(Clone::clone), 1.0, 1.0);
    if !f.is_drift_only() {
        for regime in ScalingRegime::ALL {
            let fit = f.check_scaling(regime)?;
            let name = serde_json::to_value(regime).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            report.fit(&format!("{name}_delta"), fit.delta);
            report.fit(&format!("{name}_a"), fit.a);
            let mut c = Check::interval(format!("{name} exponent in (0, 1)"), fit.delta, 0.0, 0.0, 1.0);
            if !fit.admissible() {
                c.status = Status::Fail;
            }
            report.checks.push(c.diagnostic());
        }
        record(&mut report, "mu doubling sup", f.check_mu_doubling(1.0), 1.0, f64::MAX);
        let k = JumpKernel::new(domain.dim(), f.clone())?;
        record(&mut report, "j near origin c(1)", k.check_j_near_origin(1.0), 0.0, f64::MAX);
        match k.check_doubling_and_shift(1.0) {
            Ok((c2, c3)) => {
                report.checks.push(Check::interval("j doubling sup", c2, 0.0, 1.0, f64::MAX));
                report.checks.push(Check::interval("j shift sup", c3, 0.0, 1.0, f64::MAX));
            }
            Err(e) => report.notes.push(format!("j doubling: {e}")),
        }
        record(&mut report, "levy moment", k.levy_moment(), 0.0, f64::MAX);
    }
    let ch = domain.characteristics();
    for (name, v) in [
        ("R0", ch.big_r0),
        ("Lambda0", ch.big_lambda0),
        ("r0", ch.r0),
        ("lambda0", ch.lambda0),
        ("diam", ch.diam),
    ] {
        report.fit(name, v);
    }
    if domain.is_bounded() {
        report.fit("lambda1_laplacian", domain.dirichlet_laplacian_lambda1()?);
    }
    Ok(report.finish())
}
