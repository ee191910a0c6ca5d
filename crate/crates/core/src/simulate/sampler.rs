//! Exact sampling of the subordinator `S_t = t + S~_t`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bernstein::{BernsteinFunction, StableTerm};
use crate::error::{Error, Result};

/// Draw of `Z >= 0` with `E e^{-lambda Z} = e^{-lambda^beta}`, `0 < beta < 1`,
/// by Kanter's representation `Z = (A(U)/W)^{(1-beta)/beta}`.
pub fn sample_positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    if beta == 0.5 {
        // Levy law: Z = 1 / (2 N^2)
        let n: f64 = rng.sample(StandardNormal);
        return 0.5 / (n * n);
    }
    let u = PI * rng.random::<f64>();
    let w: f64 = rng.sample(Exp1);
    kanter_a(beta, u).powf((1.0 - beta) / beta) * w.powf(-(1.0 - beta) / beta)
}

/// Kanter's function `A(u) = (sin(beta u)/sin u)^{1/(1-beta)} sin((1-beta)u)/sin(beta u)`.
pub fn kanter_a(beta: f64, u: f64) -> f64 {
    let sb = (beta * u).sin();
    (sb / u.sin()).powf(1.0 / (1.0 - beta)) * ((1.0 - beta) * u).sin() / sb
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMethod {
    /// Kanter transform of a uniform and an exponential.
    ExactStable,
    /// Stable proposals accepted with probability `e^{-kappa x}`.
    TiltedRejection,
    /// Independent sum over mixture components.
    Superposition,
    /// `S~ = 0`; Brownian reference case.
    Degenerate,
}

/// Sampler of the increments of `S_t` for a catalog Bernstein function.
#[derive(Debug, Clone)]
pub struct SubordinatorSampler {
    terms: Vec<StableTerm>,
    method: SamplerMethod,
}

impl SubordinatorSampler {
    pub fn new(f: &BernsteinFunction) -> Self {
        let terms = f.terms();
        let method = if terms.is_empty() {
            SamplerMethod::Degenerate
        } else if terms.len() > 1 {
            SamplerMethod::Superposition
        } else if terms[0].kappa > 0.0 {
            SamplerMethod::TiltedRejection
        } else {
            SamplerMethod::ExactStable
        };
        Self { terms, method }
    }

    pub fn method(&self) -> SamplerMethod {
        self.method
    }

    /// `S~_dt`, the pure-jump part of an increment over a step of length `dt`.
    pub fn sample_jump_part<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        self.terms.iter().map(|term| sample_term(term, dt, rng)).sum()
    }

    /// `dt + S~_dt`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt + self.sample_jump_part(dt, rng)
    }

    pub fn sample_increments<R: Rng + ?Sized>(&self, steps: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        if let Some(bad) = steps.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Domain(format!("steps must be positive, got {bad}")));
        }
        Ok(steps.iter().map(|&h| self.sample_increment(h, rng)).collect())
    }
}

fn sample_term<R: Rng + ?Sized>(term: &StableTerm, dt: f64, rng: &mut R) -> f64 {
    let beta = term.beta;
    if term.kappa == 0.0 {
        return (term.weight * dt).powf(1.0 / beta) * sample_positive_stable(beta, rng);
    }
    // acceptance rate is e^{-h w kappa^beta}; keep it above 1/e per piece
    let rate = term.weight * term.kappa.powf(beta);
    let pieces = (dt * rate).ceil().max(1.0);
    let h = dt / pieces;
    let scale = (term.weight * h).powf(1.0 / beta);
    let mut total = 0.0;
    for _ in 0..pieces as usize {
        loop {
            let x = scale * sample_positive_stable(beta, rng);
            if rng.random::<f64>() < (-term.kappa * x).exp() {
                total += x;
                break;
            }
        }
    }
    total
}
