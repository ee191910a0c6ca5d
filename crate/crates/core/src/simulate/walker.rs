//! Time-stepping of the killed process with boundary refinement.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sampler::SubordinatorSampler;
use crate::error::{Error, Result};
use crate::geometry::Domain;

pub const DEFAULT_REFINE_FACTOR: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KilledPathConfig {
    pub domain: Domain,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub base_step: f64,
    pub boundary_refine_factor: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl KilledPathConfig {
    pub fn new(domain: Domain, x0: Vec<f64>, t_end: f64, base_step: f64, n_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            domain,
            x0,
            t_end,
            base_step,
            boundary_refine_factor: DEFAULT_REFINE_FACTOR,
            n_paths,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0.len() != self.domain.dim() {
            return Err(Error::Parameter(format!(
                "x0 has dimension {}, domain has {}",
                self.x0.len(),
                self.domain.dim()
            )));
        }
        if !self.domain.contains(&self.x0) {
            return Err(Error::Parameter(format!("x0 = {:?} lies outside {}", self.x0, self.domain)));
        }
        if !(self.base_step > 0.0 && self.base_step.is_finite()) {
            return Err(Error::Parameter(format!("base_step must be positive, got {}", self.base_step)));
        }
        if !(self.boundary_refine_factor >= 1.0) {
            return Err(Error::Parameter("boundary_refine_factor must be at least 1".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Parameter(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }

    pub fn walker<'a>(&'a self, sampler: &'a SubordinatorSampler) -> Walker<'a> {
        Walker::new(&self.domain, sampler, self.base_step, self.boundary_refine_factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub t: f64,
    /// Current position; the first position outside the domain once killed.
    pub x: Vec<f64>,
    pub alive: bool,
}

/// Steps `X_t = B_{S_t}` inside a domain. Each step draws
/// `dS = h + S~_h` and moves by `sqrt(2 dS) N(0, I)`; the step shrinks by
/// the refine factor while `delta_D(X) < 4 sqrt(base_step)`. Killing is
/// detected at step ends only.
#[derive(Debug, Clone, Copy)]
pub struct Walker<'a> {
    domain: &'a Domain,
    sampler: &'a SubordinatorSampler,
    base_step: f64,
    fine_step: f64,
    near: f64,
}

impl<'a> Walker<'a> {
    pub fn new(domain: &'a Domain, sampler: &'a SubordinatorSampler, base_step: f64, refine: f64) -> Self {
        Self {
            domain,
            sampler,
            base_step,
            fine_step: base_step / refine,
            near: 4.0 * base_step.sqrt(),
        }
    }

    pub fn start(&self, x0: &[f64]) -> PathState {
        PathState {
            t: 0.0,
            x: x0.to_vec(),
            alive: self.domain.contains(x0),
        }
    }

    /// Advances an alive path to time `target` or until it is killed.
    /// `on_step(t, x, h)` sees the state at the start of every step taken.
    /// Returns whether the path is still alive.
    pub fn advance<R, F>(&self, st: &mut PathState, target: f64, rng: &mut R, mut on_step: F) -> bool
    where
        R: Rng + ?Sized,
        F: FnMut(f64, &[f64], f64),
    {
        while st.alive && st.t < target {
            let h0 = if self.domain.delta(&st.x) < self.near {
                self.fine_step
            } else {
                self.base_step
            };
            let remaining = target - st.t;
            let (h, t_next) = if remaining <= h0 * (1.0 + 1e-9) {
                (remaining, target)
            } else {
                (h0, st.t + h0)
            };
            on_step(st.t, &st.x, h);
            let sd = (2.0 * self.sampler.sample_increment(h, rng)).sqrt();
            for xi in st.x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi += sd * z;
            }
            st.t = t_next;
            st.alive = self.domain.contains(&st.x);
        }
        st.alive
    }
}

/// One killed trajectory observed at a list of increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledPath {
    /// Grid time at which the exit was detected; `None` if the path survived.
    pub exit_time: Option<f64>,
    pub times: Vec<f64>,
    /// Position at each observation time, `None` once killed.
    pub positions: Vec<Option<Vec<f64>>>,
}

pub fn sample_killed_path<R: Rng + ?Sized>(
    cfg: &KilledPathConfig,
    sampler: &SubordinatorSampler,
    times: &[f64],
    rng: &mut R,
) -> Result<KilledPath> {
    cfg.validate()?;
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t <= 0.0) {
        return Err(Error::Parameter("observation times must be positive and increasing".into()));
    }
    let walker = cfg.walker(sampler);
    let mut st = walker.start(&cfg.x0);
    let mut positions = Vec::with_capacity(times.len());
    let mut exit_time = None;
    for &t in times {
        if walker.advance(&mut st, t, rng, |_, _, _| {}) {
            positions.push(Some(st.x.clone()));
        } else {
            exit_time.get_or_insert(st.t);
            positions.push(None);
        }
    }
    Ok(KilledPath {
        exit_time,
        times: times.to_vec(),
        positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn steps_land_on_the_target() {
        let d = interval();
        let s = SubordinatorSampler::new(&BernsteinFunction::drift_only());
        let w = Walker::new(&d, &s, 1e-3, DEFAULT_REFINE_FACTOR);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = w.start(&[0.0]);
        let mut total = 0.0;
        let mut last = 0.0;
        let alive = w.advance(&mut st, 0.0123, &mut rng, |t, _, h| {
            assert!(t >= last);
            last = t;
            total += h;
        });
        assert!(alive);
        assert_eq!(st.t, 0.0123);
        assert!((total - 0.0123).abs() < 1e-15);
    }

    #[test]
    fn steps_shrink_near_the_boundary() {
        let d = interval();
        let s = SubordinatorSampler::new(&BernsteinFunction::stable(1.0).unwrap());
        let w = Walker::new(&d, &s, 1e-2, 16.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut first = None;
        let mut st = w.start(&[0.999]);
        w.advance(&mut st, 1.0, &mut rng, |_, _, h| {
            first.get_or_insert(h);
        });
        assert_eq!(first, Some(1e-2 / 16.0));
        let mut st = w.start(&[0.0]);
        let mut first = None;
        w.advance(&mut st, 1.0, &mut rng, |_, _, h| {
            first.get_or_insert(h);
        });
        assert_eq!(first, Some(1e-2));
    }

    #[test]
    fn killed_paths_stay_killed() {
        let cfg = KilledPathConfig::new(interval(), vec![0.9], 2.0, 1e-3, 1, 0).unwrap();
        let s = SubordinatorSampler::new(&BernsteinFunction::stable(1.0).unwrap());
        let times: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path = sample_killed_path(&cfg, &s, &times, &mut rng).unwrap();
        let exit = path.exit_time.expect("a start near the edge exits within t = 2");
        for (t, p) in path.times.iter().zip(&path.positions) {
            assert_eq!(p.is_none(), *t >= exit);
            if let Some(x) = p {
                assert!(cfg.domain.contains(x));
            }
        }
        let again = sample_killed_path(&cfg, &s, &times, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(path, again);
    }

    #[test]
    fn invalid_configurations() {
        assert!(KilledPathConfig::new(interval(), vec![1.5], 1.0, 1e-3, 10, 0).is_err());
        assert!(KilledPathConfig::new(interval(), vec![0.0, 0.0], 1.0, 1e-3, 10, 0).is_err());
        assert!(KilledPathConfig::new(interval(), vec![0.0], 1.0, 0.0, 10, 0).is_err());
        assert!(KilledPathConfig::new(interval(), vec![0.0], -1.0, 1e-3, 10, 0).is_err());
        let cfg = KilledPathConfig::new(interval(), vec![0.0], 1.0, 1e-3, 10, 0).unwrap();
        let s = SubordinatorSampler::new(&BernsteinFunction::drift_only());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_killed_path(&cfg, &s, &[0.5, 0.2], &mut rng).is_err());
        assert!(sample_killed_path(&cfg, &s, &[0.0], &mut rng).is_err());
    }
}
