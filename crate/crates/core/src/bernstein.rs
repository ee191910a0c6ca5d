//! Catalog of complete Bernstein functions with unit drift,
//! `phi(lambda) = lambda + psi(lambda)`, and their Lévy densities `mu`.
//!
//! Every catalog entry is a finite sum of tempered stable terms
//! `w * ((lambda + kappa)^beta - kappa^beta)` with `beta = alpha / 2`, whose
//! Lévy density is `w * beta / Gamma(1 - beta) * t^{-1-beta} * exp(-kappa t)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::special::gamma;

/// One term of a stable mixture: weight `w > 0` on `lambda^{alpha/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixComponent {
    pub weight: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BernsteinKind {
    /// `psi(lambda) = lambda^{alpha/2}`
    Stable { alpha: f64 },
    /// `psi(lambda) = (lambda + m^{2/alpha})^{alpha/2} - m`
    Relativistic { alpha: f64, m: f64 },
    /// `psi(lambda) = sum_i w_i lambda^{alpha_i/2}`
    StableMix(Vec<MixComponent>),
    /// `psi = 0`: pure Brownian motion. Reference case for Gaussian
    /// oracles only; the spec-string parser never produces it.
    DriftOnly,
}

/// Laplace exponent `phi(lambda) = lambda + psi(lambda)` of a subordinator
/// with unit drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinFunction {
    kind: BernsteinKind,
}

/// A tempered stable building block of `psi` and `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableTerm {
    pub weight: f64,
    /// Index of the subordinator term, `alpha / 2`, in `(0, 1)`.
    pub beta: f64,
    /// Exponential tempering rate; zero for untempered terms.
    pub kappa: f64,
}

impl StableTerm {
    pub fn psi(&self, lambda: f64) -> f64 {
        self.weight * ((lambda + self.kappa).powf(self.beta) - self.kappa.powf(self.beta))
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.weight * self.beta / gamma(1.0 - self.beta) * t.powf(-1.0 - self.beta) * (-self.kappa * t).exp()
    }

    /// `int_t^inf mu(s) ds`, only for untempered terms.
    fn untempered_tail(&self, t: f64) -> f64 {
        debug_assert_eq!(self.kappa, 0.0);
        self.weight / gamma(1.0 - self.beta) * t.powf(-self.beta)
    }

    /// `int_0^eps s mu(s) ds`, ignoring tempering (an upper bound).
    fn head_first_moment(&self, eps: f64) -> f64 {
        self.weight * self.beta / gamma(1.0 - self.beta) * eps.powf(1.0 - self.beta) / (1.0 - self.beta)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must lie in (0, 2), got {alpha}")))
    }
}

impl BernsteinFunction {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: BernsteinKind::Stable { alpha },
        })
    }

    pub fn relativistic(alpha: f64, m: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Parameter(format!("m must be positive, got {m}")));
        }
        Ok(Self {
            kind: BernsteinKind::Relativistic { alpha, m },
        })
    }

    pub fn stable_mix(components: Vec<MixComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("stable mixture needs at least one component".into()));
        }
        for c in &components {
            check_alpha(c.alpha)?;
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Parameter(format!("mixture weight must be positive, got {}", c.weight)));
            }
        }
        Ok(Self {
            kind: BernsteinKind::StableMix(components),
        })
    }

    pub fn drift_only() -> Self {
        Self {
            kind: BernsteinKind::DriftOnly,
        }
    }

    pub fn kind(&self) -> &BernsteinKind {
        &self.kind
    }

    pub fn is_drift_only(&self) -> bool {
        matches!(self.kind, BernsteinKind::DriftOnly)
    }

    /// Drift coefficient; fixed to one for every entry.
    pub fn drift(&self) -> f64 {
        1.0
    }

    pub fn terms(&self) -> Vec<StableTerm> {
        match &self.kind {
            BernsteinKind::Stable { alpha } => vec![StableTerm {
                weight: 1.0,
                beta: alpha / 2.0,
                kappa: 0.0,
            }],
            BernsteinKind::Relativistic { alpha, m } => vec![StableTerm {
                weight: 1.0,
                beta: alpha / 2.0,
                kappa: m.powf(2.0 / alpha),
            }],
            BernsteinKind::StableMix(cs) => cs
                .iter()
                .map(|c| StableTerm {
                    weight: c.weight,
                    beta: c.alpha / 2.0,
                    kappa: 0.0,
                })
                .collect(),
            BernsteinKind::DriftOnly => Vec::new(),
        }
    }

    /// The single stability index `alpha` when the entry is a pure stable.
    pub fn stable_alpha(&self) -> Option<f64> {
        match self.kind {
            BernsteinKind::Stable { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Jump part `psi(lambda)` of the Laplace exponent.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be non-negative, got {lambda}")));
        }
        Ok(self.terms().iter().map(|t| t.psi(lambda)).sum())
    }

    pub fn eval_phi(&self, lambda: f64) -> Result<f64> {
        Ok(lambda + self.psi(lambda)?)
    }

    /// Density of the Lévy measure of the jump part.
    pub fn levy_density_mu(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("mu is defined for t > 0, got {t}")));
        }
        Ok(self.terms().iter().map(|term| term.mu(t)).sum())
    }

    fn mu_unchecked(&self, t: f64) -> f64 {
        self.terms().iter().map(|term| term.mu(t)).sum()
    }

    /// `psi(lambda)` recomputed as `int_0^inf (1 - e^{-lambda t}) mu(t) dt`
    /// by quadrature in `u = ln t`, split at `t = 1`.
    pub fn laplace_exponent_numeric(&self, lambda: f64, rel_tol: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be non-negative, got {lambda}")));
        }
        let terms = self.terms();
        if terms.is_empty() || lambda == 0.0 {
            return Ok(0.0);
        }
        let u_lo = -60.0f64;
        let kappa_min = terms
            .iter()
            .filter(|t| t.kappa > 0.0)
            .map(|t| t.kappa)
            .fold(f64::INFINITY, f64::min);
        let u_hi = 40.0f64.max((750.0 / kappa_min).ln());
        let integrand = |u: f64| {
            let t = u.exp();
            -(-lambda * t).exp_m1() * self.mu_unchecked(t) * t
        };
        let tol = Tolerance::relative(rel_tol);
        let left = integrate(integrand, u_lo, 0.0, tol)?.value;
        let right = integrate(integrand, 0.0, u_hi, tol)?.value;
        let t_lo = u_lo.exp();
        let t_hi = u_hi.exp();
        let head: f64 = terms.iter().map(|t| lambda * t.head_first_moment(t_lo)).sum();
        let tail: f64 = terms
            .iter()
            .filter(|t| t.kappa == 0.0)
            .map(|t| t.untempered_tail(t_hi))
            .sum();
        Ok(left + right + head + tail)
    }

    /// `int_0^inf (1 ∧ t) mu(t) dt`, finite for every Lévy measure.
    pub fn small_jump_moment(&self) -> Result<f64> {
        let terms = self.terms();
        if terms.is_empty() {
            return Ok(0.0);
        }
        let tol = Tolerance::relative(1e-10);
        let head = integrate(
            |u: f64| {
                let t = u.exp();
                t * self.mu_unchecked(t) * t
            },
            -60.0,
            0.0,
            tol,
        )?
        .value;
        let body = integrate(
            |u: f64| {
                let t = u.exp();
                self.mu_unchecked(t) * t
            },
            0.0,
            40.0,
            tol,
        )?
        .value;
        let tail: f64 = terms
            .iter()
            .filter(|t| t.kappa == 0.0)
            .map(|t| t.untempered_tail(40f64.exp()))
            .sum();
        Ok(head + body + tail)
    }

    /// `sup mu(r) / mu(2r)` over a log grid of `r` in `(0, K]`.
    pub fn check_mu_doubling(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("K must be positive, got {k}")));
        }
        if self.is_drift_only() {
            return Err(Error::Unsupported("mu vanishes identically for the drift-only entry".into()));
        }
        let sup = nested_log_grid(k)
            .map(|r| self.mu_unchecked(r) / self.mu_unchecked(2.0 * r))
            .fold(0.0, f64::max);
        Ok(sup)
    }

    /// Fits `(delta, a)` of a weak-scaling condition on `psi` over a finite
    /// grid. The exponent is the extreme local index of `psi` over the decade
    /// of `lambda` farthest from one; `a` is then the extreme ratio
    /// `psi(lambda r) / (lambda^delta psi(r))` over the whole grid.
    pub fn check_scaling(&self, which: ScalingRegime) -> Result<ScalingFit> {
        if self.is_drift_only() {
            return Err(Error::Unsupported("psi vanishes identically for the drift-only entry".into()));
        }
        let n = 61;
        let grid = |lo_exp: f64, hi_exp: f64| -> Vec<f64> {
            (0..n)
                .map(|i| 10f64.powf(lo_exp + (hi_exp - lo_exp) * i as f64 / (n - 1) as f64))
                .collect()
        };
        let (lambdas, rs, far, near) = match which {
            ScalingRegime::LowerInf | ScalingRegime::UpperInf | ScalingRegime::PsiUp => {
                (grid(0.0, 3.0), grid(0.0, 3.0), 1e3, 1e2)
            }
            ScalingRegime::LowerZero | ScalingRegime::UpperZero => (grid(-3.0, 0.0), grid(-3.0, 0.0), 1e-3, 1e-2),
        };
        let psi = |x: f64| self.terms().iter().map(|t| t.psi(x)).sum::<f64>();
        let slopes: Vec<f64> = rs
            .iter()
            .map(|&r| (psi(far * r) / psi(near * r)).ln() / (far / near).ln())
            .collect();
        let lower = which.is_lower();
        let delta = if lower {
            slopes.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let mut a = if lower { f64::INFINITY } else { 0.0 };
        for &lam in &lambdas {
            for &r in &rs {
                let ratio = psi(lam * r) / (lam.powf(delta) * psi(r));
                a = if lower { a.min(ratio) } else { a.max(ratio) };
            }
        }
        Ok(ScalingFit { delta, a })
    }

    /// Grid checks of the standing shape properties: `phi(0) = 0`, `phi`
    /// increasing and concave, `mu` positive, decreasing and convex, and
    /// `int (1 ∧ t) mu` finite.
    pub fn check_shape(&self) -> Result<()> {
        let phi0 = self.eval_phi(0.0)?;
        if phi0 != 0.0 {
            return Err(Error::KernelCheck(format!("phi(0) = {phi0}")));
        }
        let lam: Vec<f64> = (0..=200).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 200.0)).collect();
        let phi: Vec<f64> = lam.iter().map(|&l| self.eval_phi(l)).collect::<Result<_>>()?;
        for i in 1..lam.len() {
            if phi[i] <= phi[i - 1] {
                return Err(Error::KernelCheck(format!("phi not increasing at {}", lam[i])));
            }
        }
        for i in 1..lam.len() - 1 {
            let s1 = (phi[i] - phi[i - 1]) / (lam[i] - lam[i - 1]);
            let s2 = (phi[i + 1] - phi[i]) / (lam[i + 1] - lam[i]);
            if s2 > s1 * (1.0 + 1e-9) {
                return Err(Error::KernelCheck(format!("phi not concave at {}", lam[i])));
            }
        }
        if self.is_drift_only() {
            return Ok(());
        }
        let ts = &lam;
        let mu: Vec<f64> = ts.iter().map(|&t| self.mu_unchecked(t)).collect();
        for i in 0..ts.len() {
            if !(mu[i] > 0.0 || (mu[i] == 0.0 && ts[i] > 1.0)) || !mu[i].is_finite() {
                return Err(Error::KernelCheck(format!("mu({}) = {}", ts[i], mu[i])));
            }
        }
        for i in 1..ts.len() - 1 {
            let d1 = (mu[i] - mu[i - 1]) / (ts[i] - ts[i - 1]);
            let d2 = (mu[i + 1] - mu[i]) / (ts[i + 1] - ts[i]);
            if d1 > 0.0 || d2 > 0.0 {
                return Err(Error::KernelCheck(format!("mu increasing near {}", ts[i])));
            }
            if d2 < d1 - 1e-12 * d1.abs() {
                return Err(Error::KernelCheck(format!("mu not convex near {}", ts[i])));
            }
        }
        let m = self.small_jump_moment()?;
        if !m.is_finite() {
            return Err(Error::KernelCheck("int (1 ∧ t) mu(t) dt is not finite".into()));
        }
        Ok(())
    }
}

/// Points of a fixed log grid (200 per decade from `1e-10`) below `k`, then
/// `k` itself. Grids for `k' < k` are subsets up to the endpoint, so suprema
/// over them are monotone in `k`.
pub(crate) fn nested_log_grid(k: f64) -> impl Iterator<Item = f64> {
    (0..)
        .map(|i| 10f64.powf(-10.0 + i as f64 / 200.0))
        .take_while(move |&r| r < k)
        .chain(std::iter::once(k))
}

/// Which weak-scaling inequality to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingRegime {
    /// `a1 lambda^d1 psi(r) <= psi(lambda r)`, `lambda >= 1`, `r >= 1`
    LowerInf,
    /// `psi(lambda r) <= a2 lambda^d2 psi(r)`, `lambda >= 1`, `r >= 1`
    UpperInf,
    /// lower bound for `lambda <= 1`, `r <= 1`
    LowerZero,
    /// upper bound for `lambda <= 1`, `r <= 1`
    UpperZero,
    /// `psi(lambda r) <= C6 lambda^delta psi(r)`, `lambda >= 1`, `r >= 1`
    PsiUp,
}

impl ScalingRegime {
    pub const ALL: [ScalingRegime; 5] = [
        ScalingRegime::LowerInf,
        ScalingRegime::UpperInf,
        ScalingRegime::LowerZero,
        ScalingRegime::UpperZero,
        ScalingRegime::PsiUp,
    ];

    fn is_lower(self) -> bool {
        matches!(self, ScalingRegime::LowerInf | ScalingRegime::LowerZero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub delta: f64,
    pub a: f64,
}

impl ScalingFit {
    /// The inequality requires an exponent strictly inside `(0, 1)`.
    pub fn admissible(&self) -> bool {
        self.delta > 0.0 && self.delta < 1.0 && self.a.is_finite() && self.a > 0.0
    }
}

impl fmt::Display for BernsteinFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BernsteinKind::Stable { alpha } => write!(f, "stable:alpha={alpha}"),
            BernsteinKind::Relativistic { alpha, m } => write!(f, "relativistic:alpha={alpha},m={m}"),
            BernsteinKind::StableMix(cs) => {
                write!(f, "stablemix:")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "w{n}={},a{n}={}", c.weight, c.alpha, n = i + 1)?;
                }
                Ok(())
            }
            BernsteinKind::DriftOnly => write!(f, "drift-only"),
        }
    }
}

fn parse_assignments(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {kv:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {v:?} for {k}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn take(kvs: &[(String, f64)], key: &str, spec: &str) -> Result<f64> {
    kvs.iter()
        .rev()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("missing {key} in kernel spec {spec:?}")))
}

impl FromStr for BernsteinFunction {
    type Err = Error;

    /// Parses `stable:alpha=1.0`, `relativistic:alpha=1.0,m=1.0` or
    /// `stablemix:w1=0.5,a1=1.0;w2=0.5,a2=1.5`.
    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
        match name.trim() {
            "stable" => {
                let kvs = parse_assignments(body)?;
                Self::stable(take(&kvs, "alpha", spec)?)
            }
            "relativistic" => {
                let kvs = parse_assignments(body)?;
                Self::relativistic(take(&kvs, "alpha", spec)?, take(&kvs, "m", spec)?)
            }
            "stablemix" => {
                let mut comps = Vec::new();
                for (i, part) in body.split(';').filter(|p| !p.trim().is_empty()).enumerate() {
                    let kvs = parse_assignments(part)?;
                    let n = i + 1;
                    comps.push(MixComponent {
                        weight: take(&kvs, &format!("w{n}"), spec)?,
                        alpha: take(&kvs, &format!("a{n}"), spec)?,
                    });
                }
                Self::stable_mix(comps)
            }
            other => Err(Error::Parse(format!("unknown kernel family {other:?}"))),
        }
    }
}
