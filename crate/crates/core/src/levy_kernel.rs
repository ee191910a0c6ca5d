//! Jump kernel `j(r) = int_0^inf (4 pi t)^{-d/2} e^{-r^2/4t} mu(t) dt` of the
//! subordinate Brownian motion and numerical checks of its regularity.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::bernstein::{nested_log_grid, BernsteinFunction};
use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::special::gamma;

const TABLE_POINTS: usize = 2048;
const TABLE_LN_R_MIN: f64 = -9.210_340_371_976_184; // ln 1e-4
const TABLE_LN_R_MAX: f64 = 4.605_170_185_988_092; // ln 1e2

/// Upper end of the window used for the `j(r) <= c3 j(r + 1)` check.
pub const SHIFT_CHECK_R_MAX: f64 = 20.0;

/// `ln j` on a uniform grid in `ln r`.
#[derive(Debug)]
struct JTable {
    ln_j: Vec<f64>,
    step: f64,
}

/// Isotropic jump kernel of `X_t = B_{S_t}` in dimension `d`.
#[derive(Debug)]
pub struct JumpKernel {
    d: usize,
    f: BernsteinFunction,
    quad_rel_tol: f64,
    table: OnceLock<JTable>,
}

impl Clone for JumpKernel {
    fn clone(&self) -> Self {
        let out = Self {
            d: self.d,
            f: self.f.clone(),
            quad_rel_tol: self.quad_rel_tol,
            table: OnceLock::new(),
        };
        if let Some(t) = self.table.get() {
            let _ = out.table.set(JTable {
                ln_j: t.ln_j.clone(),
                step: t.step,
            });
        }
        out
    }
}

impl JumpKernel {
    pub fn new(d: usize, f: BernsteinFunction) -> Result<Self> {
        Self::with_tolerance(d, f, 1e-8)
    }

    pub fn with_tolerance(d: usize, f: BernsteinFunction, quad_rel_tol: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if f.is_drift_only() {
            return Err(Error::Unsupported("the drift-only subordinator has no jump kernel".into()));
        }
        if !(quad_rel_tol > 0.0 && quad_rel_tol < 1.0) {
            return Err(Error::Parameter(format!("quadrature tolerance {quad_rel_tol} out of range")));
        }
        Ok(Self {
            d,
            f,
            quad_rel_tol,
            table: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn bernstein(&self) -> &BernsteinFunction {
        &self.f
    }

    pub fn quad_rel_tol(&self) -> f64 {
        self.quad_rel_tol
    }

    /// `j(r)` by adaptive quadrature after the substitution `t = r^2 u / 4`,
    /// integrating over `ln u` in `[-40, 40]`.
    pub fn j(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("j(r) needs finite r > 0, got {r}")));
        }
        let d = self.d as f64;
        let s = 0.25 * r * r;
        let terms = self.f.terms();
        let integrand = |v: f64| {
            let u = v.exp();
            let mu: f64 = terms.iter().map(|term| term.mu(s * u)).sum();
            (PI * u).powf(-0.5 * d) * (-1.0 / u).exp() * mu * s * u
        };
        // Tempering makes the integrand sharply peaked for large r; split
        // the range around the peak so the adaptive rule cannot miss it.
        let peak = (0..=160)
            .map(|i| -40.0 + 0.5 * i as f64)
            .map(|v| (v, integrand(v)))
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        let mut cuts = vec![-40.0];
        cuts.extend([peak - 4.0, peak - 1.0, peak + 1.0, peak + 4.0].into_iter().filter(|c| *c > -40.0 && *c < 40.0));
        cuts.push(40.0);
        let lo = (peak - 1.0).max(-40.0);
        let hi = (peak + 1.0).min(40.0);
        let core = integrate(integrand, lo, hi, Tolerance::relative(self.quad_rel_tol))?.value;
        let tol = Tolerance::relative(self.quad_rel_tol).with_abs(0.1 * self.quad_rel_tol * core);
        let mut total = core;
        for w in cuts.windows(2).filter(|w| w[1] <= lo || w[0] >= hi) {
            total += integrate(integrand, w[0], w[1], tol)?.value;
        }
        Ok(total * r.powf(-d))
    }

    fn table(&self) -> &JTable {
        self.table.get_or_init(|| {
            let step = (TABLE_LN_R_MAX - TABLE_LN_R_MIN) / (TABLE_POINTS - 1) as f64;
            let ln_j = (0..TABLE_POINTS)
                .map(|i| {
                    let r = (TABLE_LN_R_MIN + step * i as f64).exp();
                    self.j(r).expect("j quadrature on table grid").ln()
                })
                .collect();
            JTable { ln_j, step }
        })
    }

    /// Builds the memo table now rather than on first use.
    pub fn warm_up(&self) {
        let _ = self.table();
    }

    /// Memoized `j(r)`: cubic interpolation of `ln j` in `ln r`
    /// on a 2048-point grid over `[1e-4, 1e2]`, exact quadrature outside.
    /// Returns `+inf` for `r <= 0`.
    pub fn j_interp(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return f64::INFINITY;
        }
        let x = r.ln();
        if !(TABLE_LN_R_MIN..=TABLE_LN_R_MAX).contains(&x) {
            return self.j(r).unwrap_or(0.0);
        }
        let table = self.table();
        let pos = (x - TABLE_LN_R_MIN) / table.step;
        // four-point Lagrange stencil, shifted inward at the ends
        let i = (pos.floor() as usize).clamp(1, TABLE_POINTS - 3);
        let w = pos - i as f64;
        let y = &table.ln_j[i - 1..i + 3];
        let (a, b, c, e) = (w + 1.0, w, w - 1.0, w - 2.0);
        let v = -y[0] * b * c * e / 6.0 + y[1] * a * c * e / 2.0 - y[2] * a * b * e / 2.0 + y[3] * a * b * c / 6.0;
        v.exp()
    }

    /// `J(x, y) = j(|x - y|)`.
    pub fn big_j(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.d || y.len() != self.d {
            return Err(Error::Domain(format!(
                "points must have dimension {}, got {} and {}",
                self.d,
                x.len(),
                y.len()
            )));
        }
        let r = crate::geometry::distance(x, y);
        if r == 0.0 {
            return Err(Error::Domain("J(x, x) is infinite".into()));
        }
        self.j(r)
    }

    /// `c(K) = (d + 2) int_0^K r^{d+1} j(r) dr`, verifying
    /// `j(r) r^{d+2} <= c(K)` on a grid of `(0, K]`.
    pub fn check_j_near_origin(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("K must be positive, got {k}")));
        }
        let d = self.d as f64;
        let integral = integrate(
            |v: f64| {
                let r = v.exp();
                r.powf(d + 2.0) * self.j(r).unwrap_or(f64::NAN)
            },
            k.ln() - 40.0,
            k.ln(),
            Tolerance::relative(1e-9),
        )?;
        let c = (d + 2.0) * integral.value;
        for r in nested_log_grid(k).step_by(10).filter(|&r| r >= 1e-6) {
            let lhs = self.j(r)? * r.powf(d + 2.0);
            if lhs > c * (1.0 + 1e-6) {
                return Err(Error::KernelCheck(format!(
                    "j({r}) r^(d+2) = {lhs:e} exceeds c(K) = {c:e}"
                )));
            }
        }
        Ok(c)
    }

    /// `c2 = sup_{(0,K]} j(r)/j(2r)` and `c3 = sup_{[1,20]} j(r)/j(r+1)`.
    pub fn check_doubling_and_shift(&self, k: f64) -> Result<(f64, f64)> {
        if !(k >= 1.0) {
            return Err(Error::Precondition(format!("K must be at least 1, got {k}")));
        }
        let mut c2 = 0.0f64;
        for r in nested_log_grid(k).step_by(10).filter(|&r| r >= 1e-6) {
            c2 = c2.max(self.j(r)? / self.j(2.0 * r)?);
        }
        let mut c3 = 0.0f64;
        let n = 200;
        for i in 0..=n {
            let r = SHIFT_CHECK_R_MAX.powf(i as f64 / n as f64);
            c3 = c3.max(self.j(r)? / self.j(r + 1.0)?);
        }
        if !(c2.is_finite() && c3.is_finite()) {
            return Err(Error::KernelCheck(format!("non-finite doubling constants ({c2}, {c3})")));
        }
        Ok((c2, c3))
    }

    /// `int_{R^d} (1 ∧ |x|^2) j(|x|) dx`, finite for a Lévy density.
    pub fn levy_moment(&self) -> Result<f64> {
        let d = self.d as f64;
        let sphere = 2.0 * PI.powf(0.5 * d) / gamma(0.5 * d);
        let tol = Tolerance::relative(1e-8);
        let radial = |v: f64| {
            let r = v.exp();
            r.min(1.0).powi(2) * self.j(r).unwrap_or(f64::NAN) * r.powf(d)
        };
        let inner = integrate(radial, -30.0, 0.0, tol)?.value;
        let r_max = 1e6f64;
        let outer = integrate(radial, 0.0, r_max.ln(), tol)?.value;
        // power-law tail beyond r_max from the local decay exponent
        let j_hi = self.j(r_max)?;
        let tail = if j_hi == 0.0 {
            0.0
        } else {
            let slope = -(self.j(1.001 * r_max)? / j_hi).ln() / 1.001f64.ln();
            if slope > d { j_hi * r_max.powf(d) / (slope - d) } else { f64::INFINITY }
        };
        Ok(sphere * (inner + outer + tail))
    }
}

/// Closed form of `j` for the stable entry `psi(lambda) = lambda^{alpha/2}`:
/// `alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2)) r^{-d-alpha}`.
pub fn stable_j_closed_form(d: usize, alpha: f64, r: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (d + alpha))
        / (PI.powf(0.5 * d) * gamma(1.0 - 0.5 * alpha))
        * r.powf(-d - alpha)
}
