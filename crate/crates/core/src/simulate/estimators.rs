//! Estimators built on killed paths: survival, heat kernel histograms,
//! occupation densities, the Lévy system identity and exit-time bounds.

use serde::{Deserialize, Serialize};

use super::sampler::SubordinatorSampler;
use super::walker::{KilledPathConfig, Walker, DEFAULT_REFINE_FACTOR};
use super::{run_paths, Merge};
use crate::bernstein::BernsteinFunction;
use crate::error::{Error, Result};
use crate::geometry::{distance, Domain, Shape};
use crate::levy_kernel::JumpKernel;
use crate::quad::{integrate, Tolerance};

/// Stated alongside every killed-process estimate.
pub const BIAS_NOTE: &str = "exit is detected at step ends only, so survival and p_D are biased upward; \
the bias shrinks with base_step and with boundary refinement";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl McEstimate {
    /// Binomial proportion `k / n`.
    pub fn proportion(k: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                estimate: f64::NAN,
                stderr: f64::INFINITY,
            };
        }
        let p = k as f64 / n as f64;
        Self {
            estimate: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// Sample mean from running sums.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        if n < 2 {
            return Self {
                estimate: if n == 1 { sum } else { f64::NAN },
                stderr: f64::INFINITY,
            };
        }
        let n_f = n as f64;
        let mean = sum / n_f;
        let var = ((sum_sq - n_f * mean * mean) / (n_f - 1.0)).max(0.0);
        Self {
            estimate: mean,
            stderr: (var / n_f).sqrt(),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            estimate: self.estimate * c,
            stderr: self.stderr * c.abs(),
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.stderr / self.estimate.abs()
    }
}

/// Regular grid of axis-aligned cells over a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

impl CellGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.len() != n.len() {
            return Err(Error::Parameter("grid bounds and counts must share a dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) || n.contains(&0) {
            return Err(Error::Parameter("grid needs lo < hi and at least one cell per axis".into()));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn uniform_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    pub fn cell_diameter(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Flat index of the half-open cell containing `x`.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (k, xk) in x.iter().enumerate().take(self.dim()) {
            let pos = (xk - self.lo[k]) / self.width(k);
            if !(pos >= 0.0) || pos >= self.n[k] as f64 {
                return None;
            }
            idx = idx * self.n[k] + pos as usize;
        }
        Some(idx)
    }

    pub fn center(&self, cell: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let mut rest = cell;
        for k in (0..self.dim()).rev() {
            let i = rest % self.n[k];
            rest /= self.n[k];
            out[k] = self.lo[k] + (i as f64 + 0.5) * self.width(k);
        }
        out
    }
}

/// A finite family of measurable cells, possibly overlapping.
pub trait Cells: Sync {
    fn count(&self) -> usize;
    /// Calls `hit` with every cell containing `x`.
    fn visit<F: FnMut(usize)>(&self, x: &[f64], hit: F);
    fn volume(&self, cell: usize) -> f64;
    fn center(&self, cell: usize) -> Vec<f64>;
    fn dim(&self) -> usize;
}

impl Cells for CellGrid {
    fn count(&self) -> usize {
        self.len()
    }

    fn visit<F: FnMut(usize)>(&self, x: &[f64], mut hit: F) {
        if let Some(c) = self.cell_of(x) {
            hit(c);
        }
    }

    fn volume(&self, _cell: usize) -> f64 {
        self.cell_volume()
    }

    fn center(&self, cell: usize) -> Vec<f64> {
        CellGrid::center(self, cell)
    }

    fn dim(&self) -> usize {
        CellGrid::dim(self)
    }
}

/// Half-open cubes of a common side length centered at given points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub centers: Vec<Vec<f64>>,
    pub side: f64,
}

impl BoxSet {
    pub fn new(centers: Vec<Vec<f64>>, side: f64) -> Result<Self> {
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::Parameter("box centers must share a positive dimension".into()));
        }
        if !(side > 0.0) {
            return Err(Error::Parameter(format!("box side must be positive, got {side}")));
        }
        Ok(Self { centers, side })
    }
}

impl Cells for BoxSet {
    fn count(&self) -> usize {
        self.centers.len()
    }

    fn visit<F: FnMut(usize)>(&self, x: &[f64], mut hit: F) {
        let half = 0.5 * self.side;
        for (i, c) in self.centers.iter().enumerate() {
            if c.iter().zip(x).all(|(ci, xi)| *xi >= ci - half && *xi < ci + half) {
                hit(i);
            }
        }
    }

    fn volume(&self, _cell: usize) -> f64 {
        self.side.powi(self.centers[0].len() as i32)
    }

    fn center(&self, cell: usize) -> Vec<f64> {
        self.centers[cell].clone()
    }

    fn dim(&self) -> usize {
        self.centers[0].len()
    }
}

#[derive(Debug, Clone)]
struct Counts {
    hits: Vec<u64>,
    paths: u64,
}

impl Merge for Counts {
    fn merge(&mut self, other: Self) {
        self.hits.iter_mut().zip(other.hits).for_each(|(a, b)| *a += b);
        self.paths += other.paths;
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("times must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// `P_x0(tau_D > t)` for each `t` in `times`, all from the same paths.
pub fn survival_curve(cfg: &KilledPathConfig, f: &BernsteinFunction, times: &[f64]) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    check_times(times)?;
    let sampler = SubordinatorSampler::new(f);
    let walker = cfg.walker(&sampler);
    let counts = run_paths(
        cfg.n_paths,
        cfg.seed,
        0,
        || Counts {
            hits: vec![0; times.len()],
            paths: 0,
        },
        |acc, rng| {
            acc.paths += 1;
            let mut st = walker.start(&cfg.x0);
            for (i, &t) in times.iter().enumerate() {
                if !walker.advance(&mut st, t, rng, |_, _, _| {}) {
                    break;
                }
                acc.hits[i] += 1;
            }
        },
    );
    Ok(counts.hits.iter().map(|&k| McEstimate::proportion(k, counts.paths)).collect())
}

/// `P_x0(tau_D > t_end)` with binomial standard error.
pub fn survival_probability(cfg: &KilledPathConfig, f: &BernsteinFunction) -> Result<McEstimate> {
    Ok(survival_curve(cfg, f, &[cfg.t_end])?[0])
}

/// Histogram of surviving positions at a list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelHistogram {
    pub times: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub volumes: Vec<f64>,
    /// `counts[i][c]`: survivors in cell `c` at `times[i]`.
    pub counts: Vec<Vec<u64>>,
    pub survivors: Vec<u64>,
    pub n_paths: u64,
}

impl HeatKernelHistogram {
    /// Cell-averaged `p_D(t_i, x0, .)` over cell `c`.
    pub fn density(&self, time_index: usize, cell: usize) -> McEstimate {
        McEstimate::proportion(self.counts[time_index][cell], self.n_paths).scaled(1.0 / self.volumes[cell])
    }

    pub fn survival(&self, time_index: usize) -> McEstimate {
        McEstimate::proportion(self.survivors[time_index], self.n_paths)
    }

    /// `sum_c p(c) vol(c)`; equals the survival fraction when the cells
    /// partition the domain.
    pub fn mass(&self, time_index: usize) -> f64 {
        self.counts[time_index].iter().sum::<u64>() as f64 / self.n_paths as f64
    }
}

/// Histogram estimate of `p_D(t, x0, .)`: per-cell survivor count divided
/// by `n_paths * cell volume`.
pub fn heat_kernel_estimate<C: Cells>(
    cfg: &KilledPathConfig,
    f: &BernsteinFunction,
    times: &[f64],
    cells: &C,
) -> Result<HeatKernelHistogram> {
    cfg.validate()?;
    check_times(times)?;
    if cells.dim() != cfg.domain.dim() {
        return Err(Error::Parameter("cell and domain dimensions differ".into()));
    }
    let sampler = SubordinatorSampler::new(f);
    let walker = cfg.walker(&sampler);
    let nc = cells.count();
    let nt = times.len();
    let counts = run_paths(
        cfg.n_paths,
        cfg.seed,
        0,
        || Counts {
            hits: vec![0; nt * (nc + 1)],
            paths: 0,
        },
        |acc, rng| {
            acc.paths += 1;
            let mut st = walker.start(&cfg.x0);
            for (i, &t) in times.iter().enumerate() {
                if !walker.advance(&mut st, t, rng, |_, _, _| {}) {
                    break;
                }
                let row = i * (nc + 1);
                acc.hits[row + nc] += 1;
                cells.visit(&st.x, |c| acc.hits[row + c] += 1);
            }
        },
    );
    Ok(HeatKernelHistogram {
        times: times.to_vec(),
        centers: (0..nc).map(|c| cells.center(c)).collect(),
        volumes: (0..nc).map(|c| cells.volume(c)).collect(),
        counts: (0..nt).map(|i| counts.hits[i * (nc + 1)..i * (nc + 1) + nc].to_vec()).collect(),
        survivors: (0..nt).map(|i| counts.hits[i * (nc + 1) + nc]).collect(),
        n_paths: counts.paths,
    })
}

#[derive(Debug, Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    alive: u64,
    paths: u64,
}

impl Moments {
    fn new(k: usize) -> Self {
        Self {
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            alive: 0,
            paths: 0,
        }
    }

    fn add(&mut self, values: &[f64]) {
        for (k, v) in values.iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v * v;
        }
        self.paths += 1;
    }

    fn estimate(&self, k: usize) -> McEstimate {
        McEstimate::from_sums(self.sum[k], self.sum_sq[k], self.paths)
    }
}

impl Merge for Moments {
    fn merge(&mut self, other: Self) {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
        self.alive += other.alive;
        self.paths += other.paths;
    }
}

/// Occupation-density estimate of `G_D(x0, .)` truncated at `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub centers: Vec<Vec<f64>>,
    pub volumes: Vec<f64>,
    /// Expected time spent in each cell divided by the cell volume.
    pub density: Vec<McEstimate>,
    /// `E[tau_D ∧ t_max]`.
    pub mean_exit_time: McEstimate,
    /// `P(tau_D > t_max)`; the truncated tail.
    pub survived_at_cap: McEstimate,
    pub t_max: f64,
    pub n_paths: u64,
}

impl GreenEstimate {
    /// Total occupation summed over the cells.
    pub fn total_occupation(&self) -> f64 {
        self.density.iter().zip(&self.volumes).map(|(e, v)| e.estimate * v).sum()
    }
}

/// Expected occupation time of each cell before `tau_D ∧ cfg.t_end`,
/// divided by cell volume.
pub fn green_estimate<C: Cells>(cfg: &KilledPathConfig, f: &BernsteinFunction, cells: &C) -> Result<GreenEstimate> {
    cfg.validate()?;
    if !cfg.domain.is_bounded() {
        return Err(Error::Unsupported("Green function estimate needs a bounded domain".into()));
    }
    if cells.dim() != cfg.domain.dim() {
        return Err(Error::Parameter("cell and domain dimensions differ".into()));
    }
    let sampler = SubordinatorSampler::new(f);
    let walker = cfg.walker(&sampler);
    let nc = cells.count();
    let moments = run_paths(
        cfg.n_paths,
        cfg.seed,
        0,
        || Moments::new(nc + 1),
        |acc, rng| {
            let mut occ = vec![0.0; nc + 1];
            let mut st = walker.start(&cfg.x0);
            let alive = walker.advance(&mut st, cfg.t_end, rng, |_, x, h| {
                occ[nc] += h;
                cells.visit(x, |c| occ[c] += h);
            });
            acc.alive += alive as u64;
            acc.add(&occ);
        },
    );
    Ok(GreenEstimate {
        centers: (0..nc).map(|c| cells.center(c)).collect(),
        volumes: (0..nc).map(|c| cells.volume(c)).collect(),
        density: (0..nc).map(|c| moments.estimate(c).scaled(1.0 / cells.volume(c))).collect(),
        mean_exit_time: moments.estimate(nc),
        survived_at_cap: McEstimate::proportion(moments.alive, moments.paths),
        t_max: cfg.t_end,
        n_paths: moments.paths,
    })
}

/// Both sides of the Lévy system identity
/// `P_x(X_{tau_U} in A) = E_x int_0^{tau_U} int_A J(X_s, y) dy ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevySystemCheck {
    pub lhs: McEstimate,
    pub rhs: McEstimate,
    /// Per-path `lhs - rhs`; its standard error accounts for the coupling.
    pub difference: McEstimate,
    pub n_paths: u64,
}

impl LevySystemCheck {
    pub fn combined_stderr(&self) -> f64 {
        self.lhs.stderr.hypot(self.rhs.stderr)
    }

    /// `|lhs - rhs| <= k * sigma` with the paired standard error.
    pub fn agrees(&self, k: f64) -> bool {
        self.difference.estimate.abs() <= k * self.difference.stderr
    }
}

/// Distance between two catalog sets, for the shapes the exit check accepts.
fn ball_gap(u_center: &[f64], u_radius: f64, a: &Domain) -> Result<f64> {
    let gap = match a.shape() {
        Shape::Ball { center, radius } => distance(center, u_center) - radius,
        Shape::DisjointBalls { centers, radius } => centers
            .iter()
            .map(|c| distance(c, u_center) - radius)
            .fold(f64::INFINITY, f64::min),
        Shape::IntervalUnion(iv) => iv
            .iter()
            .map(|&(lo, hi)| (lo - u_center[0]).max(u_center[0] - hi))
            .fold(f64::INFINITY, f64::min),
        _ => return Err(Error::Unsupported(format!("target set {a} in the exit check"))),
    };
    Ok(gap - u_radius)
}

/// `F(x) = int_A J(x, y) dy` tabulated on a regular grid over the box
/// around `U`, evaluated by multilinear interpolation.
struct JumpMassTable {
    lo: Vec<f64>,
    step: f64,
    n: usize,
    values: Vec<f64>,
}

type MassFn<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + 'a>;

impl JumpMassTable {
    fn build(kernel: &JumpKernel, u_center: &[f64], u_radius: f64, a: &Domain) -> Result<Self> {
        let d = a.dim();
        let n: usize = match d {
            1 => 513,
            2 => 49,
            _ => 17,
        };
        let lo: Vec<f64> = u_center.iter().map(|c| c - u_radius).collect();
        let step = 2.0 * u_radius / (n - 1) as f64;
        let nodes = n.pow(d as u32);
        let mass: MassFn = if d == 1 {
            let pieces: Vec<(f64, f64)> = match a.shape() {
                Shape::IntervalUnion(iv) => iv.clone(),
                Shape::Ball { center, radius } => vec![(center[0] - radius, center[0] + radius)],
                Shape::DisjointBalls { centers, radius } => centers.iter().map(|c| (c[0] - radius, c[0] + radius)).collect(),
                _ => unreachable!("rejected by ball_gap"),
            };
            Box::new(move |x: &[f64]| {
                let mut total = 0.0;
                for &(p, q) in &pieces {
                    let est = integrate(|y| kernel.j((x[0] - y).abs()).unwrap_or(0.0), p, q, Tolerance::relative(1e-8))?;
                    total += est.value;
                }
                Ok(total)
            })
        } else {
            kernel.warm_up();
            let (blo, bhi) = a.bounding_box().expect("bounded target");
            let m: usize = if d == 2 { 64 } else { 24 };
            let h: Vec<f64> = (0..d).map(|k| (bhi[k] - blo[k]) / m as f64).collect();
            let w: f64 = h.iter().product();
            let mut points = Vec::new();
            for idx in 0..m.pow(d as u32) {
                let mut rest = idx;
                let y: Vec<f64> = (0..d)
                    .map(|k| {
                        let i = rest % m;
                        rest /= m;
                        blo[k] + (i as f64 + 0.5) * h[k]
                    })
                    .collect();
                if a.contains(&y) {
                    points.push(y);
                }
            }
            Box::new(move |x: &[f64]| Ok(w * points.iter().map(|y| kernel.j_interp(distance(x, y))).sum::<f64>()))
        };
        let mut values = Vec::with_capacity(nodes);
        for idx in 0..nodes {
            let mut rest = idx;
            let mut x = vec![0.0; d];
            for k in (0..d).rev() {
                x[k] = lo[k] + (rest % n) as f64 * step;
                rest /= n;
            }
            values.push(mass(&x)?);
        }
        Ok(Self { lo, step, n, values })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.lo.len();
        let mut cell = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..d {
            let pos = ((x[k] - self.lo[k]) / self.step).clamp(0.0, (self.n - 1) as f64);
            cell[k] = (pos as usize).min(self.n - 2);
            frac[k] = pos - cell[k] as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                weight *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.n + cell[k] + bit;
            }
            total += weight * self.values[flat];
        }
        total
    }
}

pub const EXIT_CHECK_TIME_CAP: f64 = 100.0;

/// Monte Carlo of both sides of the Lévy system identity for the exit of
/// the ball `U` into `A`, from the same paths.
pub fn exit_distribution_check(
    kernel: &JumpKernel,
    u: &Domain,
    x: &[f64],
    a: &Domain,
    n_paths: usize,
    base_step: f64,
    seed: u64,
) -> Result<LevySystemCheck> {
    let (u_center, u_radius) = match u.shape() {
        Shape::Ball { center, radius } => (center.clone(), *radius),
        _ => return Err(Error::Unsupported("the exit check needs U to be a ball".into())),
    };
    if a.dim() != u.dim() || kernel.dim() != u.dim() {
        return Err(Error::Parameter("U, A and the kernel must share a dimension".into()));
    }
    let gap = ball_gap(&u_center, u_radius, a)?;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("A must lie at positive distance from U (gap {gap})")));
    }
    let cfg = KilledPathConfig::new(u.clone(), x.to_vec(), EXIT_CHECK_TIME_CAP, base_step, n_paths, seed)?;
    let table = JumpMassTable::build(kernel, &u_center, u_radius, a)?;
    let sampler = SubordinatorSampler::new(kernel.bernstein());
    let walker = Walker::new(u, &sampler, base_step, DEFAULT_REFINE_FACTOR);
    let m = run_paths(
        n_paths,
        seed,
        0,
        || Moments::new(3),
        |acc, rng| {
            let mut st = walker.start(&cfg.x0);
            let mut rhs = 0.0;
            walker.advance(&mut st, cfg.t_end, rng, |_, y, h| rhs += h * table.eval(y));
            let lhs = if !st.alive && a.contains(&st.x) { 1.0 } else { 0.0 };
            acc.add(&[lhs, rhs, lhs - rhs]);
        },
    );
    Ok(LevySystemCheck {
        lhs: m.estimate(0),
        rhs: m.estimate(1),
        difference: m.estimate(2),
        n_paths: m.paths,
    })
}

/// `min_y P_y(tau_{B(z, 2r)} > a r^2)` over starts `y in B(z, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeLowerBound {
    pub starts: Vec<Vec<f64>>,
    pub per_start: Vec<McEstimate>,
    pub min: McEstimate,
    /// `min - 3 sigma > 0`.
    pub positive: bool,
}

/// Starts are spread along the first axis from `z` to just inside
/// `|y - z| = r`; by isotropy this covers every distance from the center.
#[allow(clippy::too_many_arguments)]
pub fn exit_time_lowerbound_check(
    f: &BernsteinFunction,
    z: &[f64],
    r: f64,
    a: f64,
    n_starts: usize,
    n_paths: usize,
    base_step: f64,
    seed: u64,
) -> Result<ExitTimeLowerBound> {
    if !(r > 0.0 && a > 0.0) {
        return Err(Error::Parameter(format!("need r > 0 and a > 0, got r={r}, a={a}")));
    }
    if n_starts < 2 {
        return Err(Error::Parameter("need at least two starts".into()));
    }
    let ball = Domain::ball(z.to_vec(), 2.0 * r)?;
    let t = a * r * r;
    let step = base_step.min(t / 10.0);
    let mut starts = Vec::new();
    let mut per_start = Vec::new();
    for i in 0..n_starts {
        let mut y = z.to_vec();
        y[0] += 0.999 * r * i as f64 / (n_starts - 1) as f64;
        let cfg = KilledPathConfig::new(ball.clone(), y.clone(), t, step, n_paths, seed.wrapping_add(i as u64))?;
        per_start.push(survival_probability(&cfg, f)?);
        starts.push(y);
    }
    let min = *per_start
        .iter()
        .min_by(|p, q| p.estimate.total_cmp(&q.estimate))
        .expect("at least two starts");
    Ok(ExitTimeLowerBound {
        starts,
        per_start,
        positive: min.estimate - 3.0 * min.stderr > 0.0,
        min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_density::gauss;

    fn interval() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn estimate_arithmetic() {
        let p = McEstimate::proportion(1, 4);
        assert_eq!(p.estimate, 0.25);
        assert!((p.stderr - (0.25f64 * 0.75 / 4.0).sqrt()).abs() < 1e-15);
        assert!(McEstimate::proportion(0, 0).estimate.is_nan());
        let m = McEstimate::from_sums(6.0, 14.0, 3);
        assert_eq!(m.estimate, 2.0);
        assert!((m.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let s = m.scaled(-2.0);
        assert_eq!((s.estimate, s.stderr), (-4.0, 2.0 * m.stderr));
        assert!((s.relative_error() - m.relative_error()).abs() < 1e-15);
    }

    #[test]
    fn grid_cells_round_trip() {
        let g = CellGrid::new(vec![-1.0, 0.0], vec![1.0, 1.0], vec![4, 2]).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.cell_volume(), 0.25);
        for c in 0..g.len() {
            assert_eq!(g.cell_of(&g.center(c)), Some(c));
        }
        assert_eq!(g.cell_of(&[-1.0, 0.0]), Some(0));
        assert_eq!(g.cell_of(&[1.0, 0.5]), None);
        assert_eq!(g.cell_of(&[0.0, -0.1]), None);
        assert!(CellGrid::new(vec![0.0], vec![0.0], vec![1]).is_err());
        assert!(CellGrid::new(vec![0.0], vec![1.0], vec![0]).is_err());
    }

    #[test]
    fn boxes_may_overlap() {
        let b = BoxSet::new(vec![vec![0.0], vec![0.05]], 0.1).unwrap();
        let mut hits = Vec::new();
        b.visit(&[0.02], |c| hits.push(c));
        assert_eq!(hits, vec![0, 1]);
        assert!((b.volume(1) - 0.1).abs() < 1e-15);
        assert!(BoxSet::new(vec![vec![0.0], vec![0.0, 1.0]], 0.1).is_err());
    }

    #[test]
    fn histogram_mass_is_the_survival_fraction() {
        let cfg = KilledPathConfig::new(interval(), vec![0.2], 0.3, 1e-3, 4000, 11).unwrap();
        let grid = CellGrid::uniform_1d(-1.0, 1.0, 40).unwrap();
        let f = BernsteinFunction::stable(1.0).unwrap();
        let h = heat_kernel_estimate(&cfg, &f, &[0.1, 0.3], &grid).unwrap();
        for i in 0..2 {
            assert!((h.mass(i) - h.survival(i).estimate).abs() < 1e-12);
        }
        assert!(h.survival(1).estimate <= h.survival(0).estimate);
        let s = survival_curve(&cfg, &f, &[0.1, 0.3]).unwrap();
        assert_eq!(s[1].estimate, h.survival(1).estimate);
    }

    #[test]
    fn brownian_histogram_matches_the_free_kernel_at_short_times() {
        // killing is negligible at t = 0.01 from the midpoint
        let cfg = KilledPathConfig::new(interval(), vec![0.0], 0.01, 1e-3, 40_000, 12).unwrap();
        let boxes = BoxSet::new(vec![vec![0.0], vec![0.1], vec![-0.25]], 0.02).unwrap();
        let h = heat_kernel_estimate(&cfg, &BernsteinFunction::drift_only(), &[0.01], &boxes).unwrap();
        for (c, y) in [0.0, 0.1, -0.25].into_iter().enumerate() {
            let e = h.density(0, c);
            let want = gauss(1, 0.01, y);
            assert!((e.estimate - want).abs() < 4.0 * e.stderr, "y={y}: {} vs {want}", e.estimate);
        }
    }

    #[test]
    fn brownian_occupation_density_and_exit_time() {
        // for the generator Δ on (-1, 1): G(0, y) = (1 - |y|)/2, E_0 tau = 1/2
        let cfg = KilledPathConfig::new(interval(), vec![0.0], 20.0, 1e-4, 20_000, 13).unwrap();
        let boxes = BoxSet::new(vec![vec![0.5], vec![-0.5]], 0.05).unwrap();
        let g = green_estimate(&cfg, &BernsteinFunction::drift_only(), &boxes).unwrap();
        let m = g.mean_exit_time;
        assert!((m.estimate - 0.5).abs() < 4.0 * m.stderr + 0.01, "{m:?}");
        for e in &g.density {
            assert!((e.estimate - 0.25).abs() < 4.0 * e.stderr + 0.005, "{e:?}");
        }
        assert_eq!(g.survived_at_cap.estimate, 0.0);
    }

    #[test]
    fn jump_mass_tables_match_direct_integration() {
        let k = JumpKernel::new(1, BernsteinFunction::stable(1.0).unwrap()).unwrap();
        let a = Domain::ball(vec![2.0], 0.25).unwrap();
        let t = JumpMassTable::build(&k, &[0.0], 0.5, &a).unwrap();
        for x in [-0.5, -0.13, 0.0, 0.31, 0.5] {
            // Cauchy in d = 1: j(r) = 1/(pi r^2)
            let exact = (1.0 / (1.75 - x) - 1.0 / (2.25 - x)) / std::f64::consts::PI;
            assert!((t.eval(&[x]) / exact - 1.0).abs() < 1e-4, "x={x}");
        }
        let k2 = JumpKernel::new(2, BernsteinFunction::stable(1.0).unwrap()).unwrap();
        let a2 = Domain::ball(vec![2.0, 0.0], 0.25).unwrap();
        let t2 = JumpMassTable::build(&k2, &[0.0, 0.0], 0.5, &a2).unwrap();
        let x = [0.1, -0.2];
        let fine = {
            let m = 400;
            let h = 0.5 / m as f64;
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let y = [1.75 + (i as f64 + 0.5) * h, -0.25 + (j as f64 + 0.5) * h];
                    if a2.contains(&y) {
                        s += k2.j(distance(&x, &y)).unwrap() * h * h;
                    }
                }
            }
            s
        };
        assert!((t2.eval(&x) / fine - 1.0).abs() < 1e-2, "{} vs {fine}", t2.eval(&x));
    }

    #[test]
    fn exit_check_rejects_bad_geometry() {
        let k = JumpKernel::new(1, BernsteinFunction::stable(1.0).unwrap()).unwrap();
        let u = Domain::ball(vec![0.0], 0.5).unwrap();
        let near = Domain::ball(vec![0.6], 0.25).unwrap();
        assert!(exit_distribution_check(&k, &u, &[0.0], &near, 100, 1e-3, 0).is_err());
        let a = Domain::ball(vec![2.0], 0.25).unwrap();
        assert!(exit_distribution_check(&k, &interval(), &[0.0], &a, 100, 1e-3, 0).is_err());
    }

    #[test]
    fn levy_system_sides_agree() {
        let k = JumpKernel::new(1, BernsteinFunction::relativistic(1.0, 1.0).unwrap()).unwrap();
        let u = Domain::ball(vec![0.0], 0.5).unwrap();
        let a = Domain::intervals(vec![(1.5, 2.5)]).unwrap();
        let c = exit_distribution_check(&k, &u, &[0.1], &a, 20_000, 1e-3, 14).unwrap();
        assert!(c.lhs.estimate > 0.0);
        assert!(c.agrees(4.0), "{c:?}");
        assert!(c.combined_stderr() >= c.lhs.stderr);
    }

    #[test]
    fn exit_times_are_bounded_below() {
        let f = BernsteinFunction::stable(1.5).unwrap();
        let e = exit_time_lowerbound_check(&f, &[0.0, 0.0], 0.5, 0.25, 3, 2000, 1e-3, 15).unwrap();
        assert!(e.positive);
        assert_eq!(e.starts.len(), 3);
        assert!(e.per_start.iter().all(|p| p.estimate >= e.min.estimate));
        assert!(exit_time_lowerbound_check(&f, &[0.0], 0.5, 0.25, 1, 10, 1e-3, 0).is_err());
    }
}
