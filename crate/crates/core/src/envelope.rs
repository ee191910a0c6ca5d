//! Explicit bound shapes for the Dirichlet heat kernel and Green function.

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinFunction;
use crate::error::{Error, Result};
use crate::free_density::FreeDensityEvaluator;
use crate::geometry::{distance, Domain};
use crate::levy_kernel::JumpKernel;
use crate::quad::{integrate, Tolerance};

/// Which summands of `h` to keep. The reduced forms exist for mutation
/// tests showing that both summands are needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HTerms {
    #[default]
    Both,
    DropJump,
    DropGaussian,
}

/// Constants of the upper envelope. `c1`, `c2` are the Gaussian rate and
/// jump scale of the lower form; `big_c1..big_c3` are the global upper
/// constants and `big_c4`, `big_c5` derive from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub c1: f64,
    pub c2: f64,
    pub big_c1: f64,
    pub big_c2: f64,
    pub big_c3: f64,
    pub big_c4: f64,
    pub big_c5: f64,
}

impl EnvelopeParams {
    /// `C4 = 1/(16 C2)`, `C5 = 1/max(8, 4 C3)`.
    pub fn from_global(c1: f64, c2: f64, big_c1: f64, big_c2: f64, big_c3: f64) -> Result<Self> {
        let p = Self {
            c1,
            c2,
            big_c1,
            big_c2,
            big_c3,
            big_c4: 1.0 / (16.0 * big_c2),
            big_c5: 1.0 / (8.0f64).max(4.0 * big_c3),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::Parameter("lower rates must be positive".into()));
        }
        if !(self.big_c1 >= 1.0 && self.big_c2 >= 1.0 && self.big_c3 >= 1.0) {
            return Err(Error::Parameter("C1, C2, C3 must be at least 1".into()));
        }
        let c4 = 1.0 / (16.0 * self.big_c2);
        let c5 = 1.0 / (8.0f64).max(4.0 * self.big_c3);
        if (self.big_c4 - c4).abs() > 1e-12 * c4 || (self.big_c5 - c5).abs() > 1e-12 * c5 {
            return Err(Error::Parameter(format!(
                "C4, C5 must equal 1/(16 C2) = {c4} and 1/max(8, 4 C3) = {c5}"
            )));
        }
        Ok(())
    }
}

/// `1 ∧ delta_D(x)/sqrt(t)`.
pub fn boundary_factor(domain: &Domain, t: f64, x: &[f64]) -> f64 {
    (domain.delta(x) / t.sqrt()).min(1.0)
}

/// `h_{D,c1,c2}(t, x, y)`.
pub fn h(domain: &Domain, kernel: &JumpKernel, t: f64, x: &[f64], y: &[f64], c1: f64, c2: f64) -> f64 {
    h_with(domain, kernel, t, x, y, c1, c2, HTerms::Both)
}

#[allow(clippy::too_many_arguments)]
pub fn h_with(domain: &Domain, kernel: &JumpKernel, t: f64, x: &[f64], y: &[f64], c1: f64, c2: f64, terms: HTerms) -> f64 {
    let bx = boundary_factor(domain, t, x);
    let by = boundary_factor(domain, t, y);
    if bx == 0.0 || by == 0.0 {
        return 0.0;
    }
    let r = distance(x, y);
    let diag = t.powf(-0.5 * domain.dim() as f64);
    let gaussian = diag * (-c1 * r * r / t).exp();
    let jump = if r == 0.0 { diag } else { diag.min(t * kernel.j_interp(c2 * r)) };
    let core = match terms {
        HTerms::Both => gaussian + jump,
        HTerms::DropJump => gaussian,
        HTerms::DropGaussian => jump,
    };
    bx * by * core
}

/// `c1_const h_{D, c2_rate, 1}(t, x, y)`.
#[allow(clippy::too_many_arguments)]
pub fn thm_lower(domain: &Domain, kernel: &JumpKernel, t: f64, x: &[f64], y: &[f64], c1_const: f64, c2_rate: f64) -> f64 {
    c1_const * h(domain, kernel, t, x, y, c2_rate, 1.0)
}

/// `c3_const h_{D, C4, C5}(t, x, y)`.
#[allow(clippy::too_many_arguments)]
pub fn thm_upper(
    domain: &Domain,
    kernel: &JumpKernel,
    t: f64,
    x: &[f64],
    y: &[f64],
    params: &EnvelopeParams,
    c3_const: f64,
) -> Result<f64> {
    params.validate()?;
    Ok(c3_const * h(domain, kernel, t, x, y, params.big_c4, params.big_c5))
}

/// `c e^{-lambda1 t} delta_D(x) delta_D(y)`.
pub fn large_time(domain: &Domain, t: f64, x: &[f64], y: &[f64], lambda1: f64, c: f64) -> Result<f64> {
    if !domain.is_bounded() {
        return Err(Error::Unsupported("large-time envelope needs a bounded domain".into()));
    }
    Ok(c * (-lambda1 * t).exp() * domain.delta(x) * domain.delta(y))
}

/// Comparison function `g_D(x, y)` for the Green function.
pub fn g(domain: &Domain, x: &[f64], y: &[f64]) -> Result<f64> {
    let r = distance(x, y);
    if r == 0.0 {
        return Err(Error::Domain("g_D(x, x) is not defined".into()));
    }
    let dd = domain.delta(x) * domain.delta(y);
    let d = domain.dim();
    Ok(match d {
        1 => dd.sqrt().min(dd / r),
        2 => (dd / (r * r)).ln_1p(),
        _ => r.powf(2.0 - d as f64) * (dd / (r * r)).min(1.0),
    })
}

/// `int_0^T (1∧δx/√t)(1∧δy/√t)(t^{-d/2} e^{-c1 r²/t} + t^{-d/2} ∧ t r^{-d-2}) dt`
/// by adaptive quadrature in `ln t`, split at the scales where the
/// integrand changes form.
pub fn green_time_integral_oracle(domain: &Domain, x: &[f64], y: &[f64], c1: f64, horizon: f64) -> Result<f64> {
    let d = domain.dim();
    if d > 3 {
        return Err(Error::Unsupported("the time-integral oracle covers d <= 3".into()));
    }
    let r = distance(x, y);
    if r == 0.0 {
        return Err(Error::Domain("oracle needs x != y".into()));
    }
    if !(horizon > 0.0 && c1 > 0.0) {
        return Err(Error::Parameter("horizon and c1 must be positive".into()));
    }
    let (dx, dy) = (domain.delta(x), domain.delta(y));
    if dx == 0.0 || dy == 0.0 {
        return Ok(0.0);
    }
    let df = d as f64;
    let integrand = |u: f64| {
        let t = u.exp();
        let diag = t.powf(-0.5 * df);
        let core = diag * (-c1 * r * r / t).exp() + diag.min(t * r.powf(-df - 2.0));
        (dx / t.sqrt()).min(1.0) * (dy / t.sqrt()).min(1.0) * core * t
    };
    let lo = horizon.ln() - 60.0;
    let hi = horizon.ln();
    let mut cuts: Vec<f64> = [dx * dx, dy * dy, r * r, c1 * r * r, r.powf((2.0 * df + 4.0) / (df + 2.0))]
        .iter()
        .map(|v| v.ln())
        .filter(|&v| v > lo && v < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(integrand, w[0], w[1], Tolerance::relative(1e-8))?.value;
    }
    Ok(total)
}

/// `(phi(lambda_1^D)/2, phi(lambda_1^D))`.
pub fn lambda1_bracket(domain: &Domain, f: &BernsteinFunction) -> Result<(f64, f64)> {
    let hi = f.eval_phi(domain.dirichlet_laplacian_lambda1()?)?;
    Ok((0.5 * hi, hi))
}

/// `c (1∧δx/√t)(1∧δy/√t) p(t, |x - y|/4)`.
pub fn factorization_upper(domain: &Domain, e: &FreeDensityEvaluator, t: f64, x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    let b = boundary_factor(domain, t, x) * boundary_factor(domain, t, y);
    if b == 0.0 {
        return Ok(0.0);
    }
    Ok(c * b * e.p(t, 0.25 * distance(x, y))?.estimate)
}
