//! Free-space transition density `p(t, r) = E[(4 pi S_t)^{-d/2} e^{-r^2 / 4 S_t}]`
//! and its global two-sided envelopes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinFunction;
use crate::error::{Error, Result};
use crate::levy_kernel::JumpKernel;
use crate::quad::{integrate, Tolerance};
use crate::simulate::{kanter_a, run_paths, McEstimate, Merge, SubordinatorSampler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethod {
    /// Double integral over Kanter's representation of the one-sided
    /// stable law; pure stable entries only.
    Quadrature,
    MonteCarlo { n_samples: usize, seed: u64 },
}

/// Gaussian kernel `(4 pi s)^{-d/2} e^{-r^2 / 4s}`.
pub fn gauss(d: usize, s: f64, r: f64) -> f64 {
    (4.0 * PI * s).powf(-0.5 * d as f64) * (-r * r / (4.0 * s)).exp()
}

#[derive(Debug, Clone)]
pub struct FreeDensityEvaluator {
    d: usize,
    f: BernsteinFunction,
    method: DensityMethod,
    kernel: Option<JumpKernel>,
}

/// Constants `(C1, C2, C3)` of the global upper envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalUpperFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

struct Sums(f64, f64, u64);

impl Merge for Sums {
    fn merge(&mut self, o: Self) {
        self.0 += o.0;
        self.1 += o.1;
        self.2 += o.2;
    }
}

impl FreeDensityEvaluator {
    pub fn new(d: usize, f: BernsteinFunction, method: DensityMethod) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if method == DensityMethod::Quadrature && !(f.stable_alpha().is_some() || f.is_drift_only()) {
            return Err(Error::Unsupported(format!("quadrature density needs a stable entry, got {f}")));
        }
        if let DensityMethod::MonteCarlo { n_samples, .. } = method {
            if n_samples < 2 {
                return Err(Error::Parameter("Monte Carlo density needs at least two samples".into()));
            }
        }
        let kernel = if f.is_drift_only() {
            None
        } else {
            Some(JumpKernel::new(d, f.clone())?)
        };
        Ok(Self { d, f, method, kernel })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bernstein(&self) -> &BernsteinFunction {
        &self.f
    }

    pub fn method(&self) -> DensityMethod {
        self.method
    }

    pub fn kernel(&self) -> Option<&JumpKernel> {
        self.kernel.as_ref()
    }

    /// `j(r)`, zero for the drift-only reference case.
    fn j(&self, r: f64) -> f64 {
        self.kernel.as_ref().map_or(0.0, |k| k.j_interp(r))
    }

    /// `p(t, r)`; the standard error is the quadrature error estimate for
    /// the quadrature method.
    pub fn p(&self, t: f64, r: f64) -> Result<McEstimate> {
        if !(t > 0.0 && r >= 0.0 && t.is_finite() && r.is_finite()) {
            return Err(Error::Domain(format!("p(t, r) needs t > 0, r >= 0; got t={t}, r={r}")));
        }
        let d = self.d;
        if self.f.is_drift_only() {
            return Ok(McEstimate {
                estimate: gauss(d, t, r),
                stderr: 0.0,
            });
        }
        match self.method {
            DensityMethod::Quadrature => {
                let beta = 0.5 * self.f.stable_alpha().expect("checked in new");
                let gamma = (1.0 - beta) / beta;
                let scale = t.powf(1.0 / beta);
                let tol = Tolerance::relative(1e-7);
                let inner = |u: f64| -> f64 {
                    let a = kanter_a(beta, u).powf(gamma);
                    integrate(
                        |v: f64| {
                            let w = v.exp();
                            (-w).exp() * w * gauss(d, t + scale * a * w.powf(-gamma), r)
                        },
                        -40.0,
                        4.0,
                        tol,
                    )
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN)
                };
                let est = integrate(inner, 0.0, PI, Tolerance::relative(1e-6))?;
                if !est.value.is_finite() {
                    return Err(Error::Quadrature(format!("density quadrature failed at t={t}, r={r}")));
                }
                Ok(McEstimate {
                    estimate: est.value / PI,
                    stderr: est.error / PI,
                })
            }
            DensityMethod::MonteCarlo { n_samples, seed } => {
                let sampler = SubordinatorSampler::new(&self.f);
                let s = run_paths(
                    n_samples,
                    seed,
                    0,
                    || Sums(0.0, 0.0, 0),
                    |acc, rng| {
                        let v = gauss(d, sampler.sample_increment(t, rng), r);
                        acc.0 += v;
                        acc.1 += v * v;
                        acc.2 += 1;
                    },
                );
                Ok(McEstimate::from_sums(s.0, s.1, s.2))
            }
        }
    }

    /// `t^{-d/2} e^{-r^2/4t} + t^{-d/2} ∧ t j(r)`, with the minimum equal
    /// to `t^{-d/2}` at `r = 0`.
    pub fn global_lower_envelope(&self, t: f64, r: f64) -> f64 {
        let diag = t.powf(-0.5 * self.d as f64);
        let jump = if r == 0.0 { diag } else { diag.min(t * self.j(r)) };
        diag * (-r * r / (4.0 * t)).exp() + jump
    }

    /// `C1 (t^{-d/2} e^{-r^2/(C2 t)} + t^{-d/2} ∧ t j(r/C3))`.
    pub fn global_upper_envelope(&self, t: f64, r: f64, c1: f64, c2: f64, c3: f64) -> Result<f64> {
        if !(c1 >= 1.0 && c2 >= 1.0 && c3 >= 1.0) {
            return Err(Error::Domain(format!("envelope constants must be >= 1, got ({c1}, {c2}, {c3})")));
        }
        let diag = t.powf(-0.5 * self.d as f64);
        let jump = if r == 0.0 { diag } else { diag.min(t * self.j(r / c3)) };
        Ok(c1 * (diag * (-r * r / (c2 * t)).exp() + jump))
    }

    /// Smallest `c` with `p(t, 0) <= c t^{-d/2}` over `times`.
    pub fn fit_on_diagonal(&self, times: &[f64]) -> Result<f64> {
        let mut c = 0.0f64;
        for &t in times {
            c = c.max(self.p(t, 0.0)?.estimate * t.powf(0.5 * self.d as f64));
        }
        Ok(c)
    }

    /// Largest `c` with `p(t, r) >= c * lower(t, r)` over the grid.
    pub fn fit_global_lower(&self, times: &[f64], radii: &[f64]) -> Result<f64> {
        let mut c = f64::INFINITY;
        for &t in times {
            for &r in radii {
                c = c.min(self.p(t, r)?.estimate / self.global_lower_envelope(t, r));
            }
        }
        Ok(c)
    }

    /// Fits `(C1, C2, C3)` over the grid: for each candidate pair
    /// `(C2, C3)`, `C1` is the smallest admissible multiplier; the pair
    /// with the smallest `C1` wins, ties going to smaller constants.
    pub fn fit_global_upper(&self, times: &[f64], radii: &[f64], c2_candidates: &[f64], c3_candidates: &[f64]) -> Result<GlobalUpperFit> {
        let mut values = Vec::new();
        for &t in times {
            for &r in radii {
                values.push((t, r, self.p(t, r)?.estimate));
            }
        }
        let mut best: Option<GlobalUpperFit> = None;
        for &c2 in c2_candidates {
            for &c3 in c3_candidates {
                let mut c1 = 1.0f64;
                for &(t, r, p) in &values {
                    c1 = c1.max(p / self.global_upper_envelope(t, r, 1.0, c2, c3)?);
                }
                let better = match best {
                    None => true,
                    Some(b) => c1 < b.c1 * (1.0 - 1e-9),
                };
                if better {
                    best = Some(GlobalUpperFit { c1, c2, c3 });
                }
            }
        }
        best.ok_or_else(|| Error::Parameter("need at least one (C2, C3) candidate".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable1(method: DensityMethod) -> FreeDensityEvaluator {
        FreeDensityEvaluator::new(1, BernsteinFunction::stable(1.0).unwrap(), method).unwrap()
    }

    /// `(1/pi) int_0^inf cos(k r) e^{-t phi(k^2)} dk` for `d = 1`.
    fn fourier_oracle(f: &BernsteinFunction, t: f64, r: f64) -> f64 {
        let g = |k: f64| (k * r).cos() * (-t * f.eval_phi(k * k).unwrap()).exp();
        let k_max = (40.0 / t).sqrt() + 40.0 / t;
        integrate(g, 0.0, k_max, Tolerance::relative(1e-11).with_abs(1e-14)).unwrap().value / PI
    }

    #[test]
    fn gaussian_reference() {
        let e = FreeDensityEvaluator::new(1, BernsteinFunction::drift_only(), DensityMethod::Quadrature).unwrap();
        assert!((e.p(1.0, 0.0).unwrap().estimate - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_fourier_inversion() {
        for alpha in [0.6, 1.0, 1.5] {
            let f = BernsteinFunction::stable(alpha).unwrap();
            let e = FreeDensityEvaluator::new(1, f.clone(), DensityMethod::Quadrature).unwrap();
            for t in [0.05, 0.3, 1.0, 3.0] {
                for r in [0.0, 0.5, 2.0] {
                    let want = fourier_oracle(&f, t, r);
                    let got = e.p(t, r).unwrap().estimate;
                    assert!((got / want - 1.0).abs() < 1e-5, "alpha={alpha} t={t} r={r}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn quadrature_and_monte_carlo_agree() {
        let q = stable1(DensityMethod::Quadrature);
        let mc = stable1(DensityMethod::MonteCarlo { n_samples: 200_000, seed: 4 });
        for t in [0.1, 1.0] {
            for r in [0.0, 1.0, 3.0] {
                let a = q.p(t, r).unwrap().estimate;
                let b = mc.p(t, r).unwrap();
                assert!((a - b.estimate).abs() < 3.0 * b.stderr, "t={t} r={r}: {a} vs {b:?}");
            }
        }
    }

    #[test]
    fn monotone_in_r_and_mass_at_most_one() {
        let q = stable1(DensityMethod::Quadrature);
        let t = 0.4;
        let mut prev = f64::INFINITY;
        for i in 0..30 {
            let v = q.p(t, 0.2 * i as f64).unwrap().estimate;
            assert!(v <= prev);
            prev = v;
        }
        let mass = 2.0 * integrate(|r| q.p(t, r).unwrap().estimate, 0.0, 200.0, Tolerance::relative(1e-6)).unwrap().value;
        assert!(mass <= 1.0 + 1e-4 && mass > 0.99, "{mass}");
    }

    #[test]
    fn chapman_kolmogorov() {
        let q = stable1(DensityMethod::Quadrature);
        let (t, x, y) = (0.5, 0.0, 1.3);
        let conv = integrate(
            |z| q.p(0.5 * t, (x - z).abs()).unwrap().estimate * q.p(0.5 * t, (z - y).abs()).unwrap().estimate,
            -60.0,
            60.0,
            Tolerance::relative(1e-6),
        )
        .unwrap()
        .value;
        let want = q.p(t, (x - y).abs()).unwrap().estimate;
        assert!((conv / want - 1.0).abs() < 0.01, "{conv} vs {want}");
    }

    #[test]
    fn envelope_forms() {
        let q = stable1(DensityMethod::Quadrature);
        let t = 0.3;
        assert!((q.global_lower_envelope(t, 0.0) - 2.0 * t.powf(-0.5)).abs() < 1e-12);
        assert!((q.global_upper_envelope(t, 0.0, 1.0, 1.0, 1.0).unwrap() - 2.0 * t.powf(-0.5)).abs() < 1e-12);
        assert!(q.global_upper_envelope(t, 1.0, 1.0, 2.0, 1.0).unwrap() > q.global_upper_envelope(t, 1.0, 1.0, 1.0, 1.0).unwrap());
        assert!(q.global_upper_envelope(t, 1.0, 0.5, 1.0, 1.0).is_err());
        // far out the jump term dominates
        let r = 30.0;
        let tj = t * q.kernel().unwrap().j(r).unwrap();
        assert!((q.global_lower_envelope(t, r) / tj - 1.0).abs() < 1e-5);
    }

    #[test]
    fn fitted_envelopes_sandwich_density() {
        let q = stable1(DensityMethod::Quadrature);
        let times = [0.01, 0.1, 0.5, 1.0];
        let radii = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0];
        let lo = q.fit_global_lower(&times, &radii).unwrap();
        assert!(lo > 0.0 && lo.is_finite());
        let fit = q.fit_global_upper(&times, &radii, &[1.0, 2.0, 4.0, 8.0], &[1.0, 2.0]).unwrap();
        for &t in &times {
            for &r in &radii {
                let p = q.p(t, r).unwrap().estimate;
                assert!(p <= q.global_upper_envelope(t, r, fit.c1, fit.c2, fit.c3).unwrap() * (1.0 + 1e-12));
            }
        }
        let c = q.fit_on_diagonal(&[0.01, 0.1, 1.0]).unwrap();
        assert!(c <= (4.0 * PI).powf(-0.5) * (1.0 + 1e-6));
    }

    #[test]
    fn rejects_quadrature_for_non_stable() {
        let f = BernsteinFunction::relativistic(1.0, 1.0).unwrap();
        assert!(matches!(
            FreeDensityEvaluator::new(1, f, DensityMethod::Quadrature),
            Err(Error::Unsupported(_))
        ));
    }
}
