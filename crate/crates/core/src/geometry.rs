//! Closed catalog of `C^{1,1}` open sets with exact boundary distance and
//! component structure.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_j_first_zero, smallest_tridiagonal_eigenvalue};

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    /// Balls of a common radius whose pairwise gaps are positive.
    DisjointBalls { centers: Vec<Vec<f64>>, radius: f64 },
    /// Disjoint open intervals sorted left to right; `d = 1` only.
    IntervalUnion(Vec<(f64, f64)>),
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    /// `{x : normal . x > offset}` with a unit normal.
    HalfSpace { normal: Vec<f64>, offset: f64 },
}

/// Geometric constants of a `C^{1,1}` open set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    /// Localization radius `R0`.
    pub big_r0: f64,
    /// Lipschitz constant of the boundary charts; metadata only.
    pub big_lambda0: f64,
    /// Uniform interior/exterior ball radius.
    pub r0: f64,
    /// Path distance / Euclidean distance bound within components.
    pub lambda0: f64,
    pub diam: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    dim: usize,
    shape: Shape,
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Parameter("ball center must have dimension >= 1".into()));
        }
        positive("radius", radius)?;
        Ok(Self {
            dim: center.len(),
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn disjoint_balls(centers: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        positive("radius", radius)?;
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::Parameter("ball centers must share a positive dimension".into()));
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if distance(&centers[i], &centers[j]) <= 2.0 * radius {
                    return Err(Error::Parameter(format!("balls {i} and {j} overlap or touch")));
                }
            }
        }
        Ok(Self {
            dim,
            shape: Shape::DisjointBalls { centers, radius },
        })
    }

    pub fn intervals(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Parameter("need at least one interval".into()));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(a, b) in &intervals {
            if !(a < b && a.is_finite() && b.is_finite()) {
                return Err(Error::Parameter(format!("bad interval ({a}, {b})")));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::Parameter("intervals must be separated by a positive gap".into()));
            }
        }
        Ok(Self {
            dim: 1,
            shape: Shape::IntervalUnion(intervals),
        })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::intervals(vec![(a, b)])
    }

    pub fn annulus(center: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::Parameter("annulus needs dimension >= 2".into()));
        }
        positive("r_in", r_in)?;
        if !(r_out > r_in) {
            return Err(Error::Parameter(format!("need r_out > r_in, got {r_out} <= {r_in}")));
        }
        Ok(Self {
            dim: center.len(),
            shape: Shape::Annulus { center, r_in, r_out },
        })
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if normal.is_empty() || !(n > 0.0) {
            return Err(Error::Parameter("half-space normal must be non-zero".into()));
        }
        Ok(Self {
            dim: normal.len(),
            shape: Shape::HalfSpace {
                normal: normal.iter().map(|v| v / n).collect(),
                offset: offset / n,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.shape, Shape::HalfSpace { .. })
    }

    pub fn component_count(&self) -> usize {
        match &self.shape {
            Shape::DisjointBalls { centers, .. } => centers.len(),
            Shape::IntervalUnion(iv) => iv.len(),
            _ => 1,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.delta(x) > 0.0
    }

    /// Distance from `x` to the complement of the domain; zero outside.
    pub fn delta(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.shape {
            Shape::Ball { center, radius } => (radius - distance(x, center)).max(0.0),
            Shape::DisjointBalls { centers, radius } => centers
                .iter()
                .map(|c| (radius - distance(x, c)).max(0.0))
                .fold(0.0, f64::max),
            Shape::IntervalUnion(iv) => {
                let p = x[0];
                iv.iter()
                    .find(|&&(a, b)| a < p && p < b)
                    .map(|&(a, b)| (p - a).min(b - p))
                    .unwrap_or(0.0)
            }
            Shape::Annulus { center, r_in, r_out } => {
                let s = distance(x, center);
                if s > *r_in && s < *r_out {
                    (s - r_in).min(r_out - s)
                } else {
                    0.0
                }
            }
            Shape::HalfSpace { normal, offset } => {
                let h: f64 = normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() - offset;
                h.max(0.0)
            }
        }
    }

    /// Index of the connected component containing `x`, if any.
    pub fn component(&self, x: &[f64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        match &self.shape {
            Shape::DisjointBalls { centers, radius } => centers.iter().position(|c| distance(x, c) < *radius),
            Shape::IntervalUnion(iv) => iv.iter().position(|&(a, b)| a < x[0] && x[0] < b),
            _ => Some(0),
        }
    }

    pub fn same_component(&self, x: &[f64], y: &[f64]) -> Result<bool> {
        match (self.component(x), self.component(y)) {
            (Some(a), Some(b)) => Ok(a == b),
            _ => Err(Error::Domain("same_component needs both points inside the domain".into())),
        }
    }

    pub fn characteristics(&self) -> Characteristics {
        match &self.shape {
            Shape::Ball { radius, .. } => Characteristics {
                big_r0: *radius,
                big_lambda0: 1.0 / radius,
                r0: *radius,
                lambda0: 1.0,
                diam: 2.0 * radius,
            },
            Shape::DisjointBalls { centers, radius } => {
                let mut gap = f64::INFINITY;
                let mut spread = 0.0f64;
                for i in 0..centers.len() {
                    for j in i + 1..centers.len() {
                        let dc = distance(&centers[i], &centers[j]);
                        gap = gap.min(dc - 2.0 * radius);
                        spread = spread.max(dc);
                    }
                }
                Characteristics {
                    big_r0: radius.min(gap),
                    big_lambda0: 1.0 / radius,
                    r0: radius.min(0.5 * gap),
                    lambda0: 1.0,
                    diam: spread + 2.0 * radius,
                }
            }
            Shape::IntervalUnion(iv) => {
                let half_len = iv.iter().map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min);
                let gap = iv.windows(2).map(|w| w[1].0 - w[0].1).fold(f64::INFINITY, f64::min);
                Characteristics {
                    big_r0: half_len.min(gap),
                    big_lambda0: 0.0,
                    r0: half_len.min(0.5 * gap),
                    lambda0: 1.0,
                    diam: iv[iv.len() - 1].1 - iv[0].0,
                }
            }
            Shape::Annulus { r_in, r_out, .. } => {
                let half_width = 0.5 * (r_out - r_in);
                Characteristics {
                    big_r0: half_width,
                    big_lambda0: 1.0 / r_in,
                    r0: half_width.min(*r_in),
                    lambda0: PI * r_out / (r_out - r_in),
                    diam: 2.0 * r_out,
                }
            }
            Shape::HalfSpace { .. } => Characteristics {
                big_r0: f64::INFINITY,
                big_lambda0: 0.0,
                r0: f64::INFINITY,
                lambda0: 1.0,
                diam: f64::INFINITY,
            },
        }
    }

    /// A boundary point realizing `delta(x)`, for `x` inside the domain.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Option<Vec<f64>> {
        if !self.contains(x) {
            return None;
        }
        let radial = |center: &[f64], target_radius: f64| -> Vec<f64> {
            let s = distance(x, center);
            let mut dir: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            if s == 0.0 {
                dir = vec![0.0; x.len()];
                dir[0] = 1.0;
            } else {
                dir.iter_mut().for_each(|v| *v /= s);
            }
            center.iter().zip(&dir).map(|(c, u)| c + target_radius * u).collect()
        };
        Some(match &self.shape {
            Shape::Ball { center, radius } => radial(center, *radius),
            Shape::DisjointBalls { centers, radius } => {
                let c = &centers[self.component(x)?];
                radial(c, *radius)
            }
            Shape::IntervalUnion(iv) => {
                let (a, b) = iv[self.component(x)?];
                vec![if x[0] - a <= b - x[0] { a } else { b }]
            }
            Shape::Annulus { center, r_in, r_out } => {
                let s = distance(x, center);
                radial(center, if s - r_in <= r_out - s { *r_in } else { *r_out })
            }
            Shape::HalfSpace { normal, .. } => {
                let h = self.delta(x);
                x.iter().zip(normal).map(|(v, n)| v - h * n).collect()
            }
        })
    }

    /// Axis-aligned bounding box `(lo, hi)` of a bounded domain.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let around = |c: &[f64], r: f64| -> (Vec<f64>, Vec<f64>) {
            (c.iter().map(|v| v - r).collect(), c.iter().map(|v| v + r).collect())
        };
        match &self.shape {
            Shape::Ball { center, radius } => Some(around(center, *radius)),
            Shape::Annulus { center, r_out, .. } => Some(around(center, *r_out)),
            Shape::DisjointBalls { centers, radius } => {
                let mut lo = vec![f64::INFINITY; self.dim];
                let mut hi = vec![f64::NEG_INFINITY; self.dim];
                for c in centers {
                    for k in 0..self.dim {
                        lo[k] = lo[k].min(c[k] - radius);
                        hi[k] = hi[k].max(c[k] + radius);
                    }
                }
                Some((lo, hi))
            }
            Shape::IntervalUnion(iv) => Some((vec![iv[0].0], vec![iv[iv.len() - 1].1])),
            Shape::HalfSpace { .. } => None,
        }
    }

    /// Lebesgue measure of the set.
    pub fn volume(&self) -> f64 {
        let ball = |r: f64| PI.powf(0.5 * self.dim as f64) / crate::special::gamma(0.5 * self.dim as f64 + 1.0) * r.powi(self.dim as i32);
        match &self.shape {
            Shape::Ball { radius, .. } => ball(*radius),
            Shape::DisjointBalls { centers, radius } => centers.len() as f64 * ball(*radius),
            Shape::IntervalUnion(iv) => iv.iter().map(|(a, b)| b - a).sum(),
            Shape::Annulus { r_in, r_out, .. } => ball(*r_out) - ball(*r_in),
            Shape::HalfSpace { .. } => f64::INFINITY,
        }
    }

    /// Smallest eigenvalue of `-Δ` with Dirichlet condition, for bounded
    /// connected members of the catalog.
    pub fn dirichlet_laplacian_lambda1(&self) -> Result<f64> {
        if !self.is_bounded() {
            return Err(Error::Unsupported("lambda_1 of an unbounded domain".into()));
        }
        if !self.is_connected() {
            return Err(Error::Unsupported("lambda_1 needs a connected domain".into()));
        }
        let d = self.dim as f64;
        match &self.shape {
            Shape::Ball { radius, .. } | Shape::DisjointBalls { radius, .. } => {
                if self.dim > 10 {
                    return Err(Error::Unsupported("ball eigenvalue above dimension 10".into()));
                }
                let z = bessel_j_first_zero(0.5 * d - 1.0);
                Ok(z * z / (radius * radius))
            }
            Shape::IntervalUnion(iv) => {
                let len = iv[0].1 - iv[0].0;
                Ok(PI * PI / (len * len))
            }
            Shape::Annulus { r_in, r_out, .. } => {
                let coarse = radial_dirichlet_eigenvalue(self.dim, *r_in, *r_out, 800);
                let fine = radial_dirichlet_eigenvalue(self.dim, *r_in, *r_out, 1600);
                // second-order scheme: Richardson extrapolation
                Ok((4.0 * fine - coarse) / 3.0)
            }
            Shape::HalfSpace { .. } => unreachable!("checked above"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

/// Ground state of the radial Laplacian on `(a, b)` with Dirichlet ends,
/// written for `v = s^{(d-1)/2} u` as `-v'' + (d-1)(d-3)/(4 s^2) v`.
fn radial_dirichlet_eigenvalue(dim: usize, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n as f64 + 1.0);
    let k = (dim as f64 - 1.0) * (dim as f64 - 3.0) / 4.0;
    let diag: Vec<f64> = (1..=n)
        .map(|i| {
            let s = a + h * i as f64;
            2.0 / (h * h) + k / (s * s)
        })
        .collect();
    let off = vec![-1.0 / (h * h); n - 1];
    smallest_tridiagonal_eigenvalue(&diag, &off)
}

fn fmt_point(p: &[f64]) -> String {
    let inner: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(","))
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Ball { center, radius } => write!(f, "ball:r={radius},center={}", fmt_point(center)),
            Shape::DisjointBalls { centers, radius } => {
                let cs: Vec<String> = centers.iter().map(|c| fmt_point(c)).collect();
                write!(f, "balls:r={radius},centers={}", cs.join(";"))
            }
            Shape::IntervalUnion(iv) => {
                let parts: Vec<String> = iv.iter().map(|(a, b)| format!("({a},{b})")).collect();
                write!(f, "intervals:{}", parts.join(";"))
            }
            Shape::Annulus { center, r_in, r_out } => {
                write!(f, "annulus:rin={r_in},rout={r_out},center={}", fmt_point(center))
            }
            Shape::HalfSpace { normal, offset } => {
                write!(f, "halfspace:normal={},offset={offset}", fmt_point(normal))
            }
        }
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter().map(str::trim).filter(|p| !p.is_empty()).collect()
}

/// All parenthesized groups `(a,b,...)` in `s`.
fn parse_tuples(s: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(open) = rest.find('(') {
        let close = rest[open..]
            .find(')')
            .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in {s:?}")))?
            + open;
        let tuple = rest[open + 1..close]
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coordinate {v:?} in {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(tuple);
        rest = &rest[close + 1..];
    }
    Ok(out)
}

fn parse_number(v: &str, key: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {v:?} for {key}")))
}

impl Domain {
    /// Parses a domain spec string. `dim` supplies the dimension when the
    /// spec itself does not fix it (e.g. `ball:r=1`).
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
        let mut kv = std::collections::BTreeMap::new();
        if name.trim() != "intervals" {
            for part in split_top_level(body) {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value in {spec:?}, got {part:?}")))?;
                kv.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| -> Result<f64> {
            let v = kv.get(k).ok_or_else(|| Error::Parse(format!("missing {k} in {spec:?}")))?;
            parse_number(v, k)
        };
        let point_or_origin = |k: &str| -> Result<Vec<f64>> {
            match kv.get(k) {
                Some(v) => parse_tuples(v)?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Parse(format!("{k} needs a point in {spec:?}"))),
                None => Ok(vec![0.0; dim]),
            }
        };
        let domain = match name.trim() {
            "ball" => Self::ball(point_or_origin("center")?, get("r")?)?,
            "balls" => {
                let centers = parse_tuples(
                    kv.get("centers")
                        .ok_or_else(|| Error::Parse(format!("missing centers in {spec:?}")))?,
                )?;
                Self::disjoint_balls(centers, get("r")?)?
            }
            "intervals" => {
                let iv = parse_tuples(body)?
                    .into_iter()
                    .map(|t| match t.as_slice() {
                        [a, b] => Ok((*a, *b)),
                        _ => Err(Error::Parse(format!("intervals need (a,b) pairs in {spec:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::intervals(iv)?
            }
            "annulus" => Self::annulus(point_or_origin("center")?, get("rin")?, get("rout")?)?,
            "halfspace" => {
                let normal = match kv.get("normal") {
                    Some(_) => point_or_origin("normal")?,
                    None => {
                        let mut n = vec![0.0; dim];
                        if let Some(last) = n.last_mut() {
                            *last = 1.0;
                        }
                        n
                    }
                };
                let offset = if kv.contains_key("offset") { get("offset")? } else { 0.0 };
                Self::half_space(normal, offset)?
            }
            other => return Err(Error::Parse(format!("unknown domain family {other:?}"))),
        };
        if domain.dim != dim {
            return Err(Error::Parse(format!(
                "domain {spec:?} has dimension {}, expected {dim}",
                domain.dim
            )));
        }
        Ok(domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog() -> Vec<Domain> {
        vec![
            Domain::parse("ball:r=1", 1).unwrap(),
            Domain::parse("ball:r=1", 2).unwrap(),
            Domain::parse("ball:r=0.7,center=(1,2,3)", 3).unwrap(),
            Domain::parse("balls:r=0.4,centers=(0,0);(2,0)", 2).unwrap(),
            Domain::parse("balls:r=0.5,centers=(0);(2)", 1).unwrap(),
            Domain::parse("intervals:(-2,-1);(1,2)", 1).unwrap(),
            Domain::parse("intervals:(-1,1)", 1).unwrap(),
            Domain::parse("annulus:rin=0.5,rout=1", 2).unwrap(),
            Domain::parse("annulus:rin=0.5,rout=1", 3).unwrap(),
            Domain::parse("halfspace", 2).unwrap(),
        ]
    }

    #[test]
    fn delta_examples() {
        let b = Domain::parse("ball:r=1", 3).unwrap();
        assert_eq!(b.delta(&[0.0, 0.0, 0.0]), 1.0);
        assert_eq!(b.delta(&[0.3, 0.4, 0.0]), 0.5);
        assert_eq!(b.delta(&[2.0, 0.0, 0.0]), 0.0);
        let iv = Domain::parse("intervals:(-2,-1);(1,2)", 1).unwrap();
        assert_eq!(iv.delta(&[1.5]), 0.5);
        assert_eq!(iv.delta(&[0.0]), 0.0);
        assert_eq!(iv.delta(&[-1.0]), 0.0);
        let h = Domain::parse("halfspace", 2).unwrap();
        assert_eq!(h.delta(&[5.0, 0.25]), 0.25);
    }

    #[test]
    fn components() {
        let b = Domain::parse("ball:r=1", 2).unwrap();
        assert!(b.same_component(&[0.1, 0.2], &[-0.5, 0.0]).unwrap());
        let bb = Domain::parse("balls:r=0.4,centers=(0,0);(2,0)", 2).unwrap();
        assert!(!bb.same_component(&[0.0, 0.0], &[2.0, 0.1]).unwrap());
        assert!(bb.same_component(&[2.1, 0.0], &[2.0, 0.1]).unwrap());
        assert!(bb.same_component(&[1.0, 0.0], &[2.0, 0.1]).is_err());
        let an = Domain::parse("annulus:rin=0.5,rout=1", 2).unwrap();
        assert!(an.same_component(&[0.75, 0.0], &[-0.75, 0.0]).unwrap());
    }

    #[test]
    fn characteristics_are_consistent() {
        for d in catalog() {
            let c = d.characteristics();
            assert!(c.r0 <= c.big_r0, "{d}");
            assert!(c.lambda0 >= 1.0);
            assert!(c.r0 > 0.0);
        }
        let bb = Domain::parse("balls:r=0.5,centers=(0);(2)", 1).unwrap();
        let c = bb.characteristics();
        assert_eq!(c.diam, 3.0);
        assert_eq!(c.big_r0, 0.5);
    }

    #[test]
    fn lambda1_values() {
        let iv = Domain::interval(-1.0, 1.0).unwrap();
        assert!((iv.dirichlet_laplacian_lambda1().unwrap() - PI * PI / 4.0).abs() < 1e-14);
        let b3 = Domain::parse("ball:r=1", 3).unwrap();
        assert!((b3.dirichlet_laplacian_lambda1().unwrap() - PI * PI).abs() < 1e-10);
        let b1 = Domain::parse("ball:r=1", 1).unwrap();
        assert!((b1.dirichlet_laplacian_lambda1().unwrap() - PI * PI / 4.0).abs() < 1e-10);
        for d in 1..=4 {
            let unit = Domain::ball(vec![0.0; d], 1.0).unwrap().dirichlet_laplacian_lambda1().unwrap();
            let r = 0.3;
            let small = Domain::ball(vec![0.0; d], r).unwrap().dirichlet_laplacian_lambda1().unwrap();
            assert!((small - unit / (r * r)).abs() < 1e-10 * small);
        }
        // d = 3 annulus: the radial potential vanishes, lambda = pi^2 / width^2
        let an3 = Domain::parse("annulus:rin=0.5,rout=1", 3).unwrap();
        let got = an3.dirichlet_laplacian_lambda1().unwrap();
        assert!((got / (4.0 * PI * PI) - 1.0).abs() < 1e-6, "{got}");
        // d = 2 annulus lies between the thin-shell value and the width-only bound
        let an2 = Domain::parse("annulus:rin=0.5,rout=1", 2).unwrap();
        let v = an2.dirichlet_laplacian_lambda1().unwrap();
        assert!(v > 4.0 * PI * PI - 2.0 && v < 4.0 * PI * PI, "{v}");
        assert!(Domain::parse("halfspace", 2).unwrap().dirichlet_laplacian_lambda1().is_err());
        assert!(Domain::parse("intervals:(-2,-1);(1,2)", 1).unwrap().dirichlet_laplacian_lambda1().is_err());
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for d in catalog() {
            let back = Domain::parse(&d.to_string(), d.dim()).unwrap();
            assert_eq!(back, d);
        }
        assert!(Domain::parse("ball:r=-1", 2).is_err());
        assert!(Domain::parse("balls:r=1,centers=(0,0);(1,0)", 2).is_err());
        assert!(Domain::parse("cube:side=1", 2).is_err());
        assert!(Domain::parse("intervals:(-1,1)", 2).is_err());
        assert!(Domain::parse("annulus:rin=1,rout=0.5", 2).is_err());
    }

    fn sample_point(d: &Domain, u: &[f64]) -> Vec<f64> {
        match d.bounding_box() {
            Some((lo, hi)) => lo.iter().zip(&hi).zip(u).map(|((l, h), t)| l + (h - l) * t).collect(),
            None => u.iter().map(|t| 4.0 * t - 2.0).collect(),
        }
    }

    proptest! {
        #[test]
        fn delta_is_one_lipschitz(idx in 0usize..10, u in prop::collection::vec(0.0f64..1.0, 3), v in prop::collection::vec(0.0f64..1.0, 3), s in 0.0f64..1.0) {
            let d = &catalog()[idx];
            let n = d.dim();
            let x = sample_point(d, &u[..n]);
            let y = sample_point(d, &v[..n]);
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + s * (b - a)).collect();
            prop_assert!((d.delta(&x) - d.delta(&z)).abs() <= distance(&x, &z) + 1e-12);
            prop_assert_eq!(d.delta(&x) > 0.0, d.contains(&x));
        }

        #[test]
        fn interior_ball_condition(idx in 0usize..9, u in prop::collection::vec(0.0f64..1.0, 3)) {
            let d = &catalog()[idx];
            let n = d.dim();
            let x = sample_point(d, &u[..n]);
            let r0 = d.characteristics().r0;
            let dx = d.delta(&x);
            prop_assume!(dx > 0.0 && dx < r0);
            let z = d.nearest_boundary_point(&x).unwrap();
            prop_assert!((distance(&x, &z) - dx).abs() < 1e-9);
            let dir: Vec<f64> = x.iter().zip(&z).map(|(a, b)| (a - b) / dx).collect();
            let center: Vec<f64> = z.iter().zip(&dir).map(|(b, e)| b + r0 * e).collect();
            prop_assert!(d.delta(&center) >= r0 - 1e-9, "ball of radius {} at {:?} leaves {}", r0, center, d);
        }
    }
}
