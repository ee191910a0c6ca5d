use dirheat_core::envelope::HTerms;
use dirheat_core::harness::{eigen_report, sandwich_report, RatioOptions, Status};
use dirheat_core::simulate::{green_estimate, BoxSet, KilledPathConfig};
use dirheat_core::{BernsteinFunction, Domain, JumpKernel};
use dirheat_core::free_density::GlobalUpperFit;

fn interval() -> Domain {
    Domain::interval(-1.0, 1.0).unwrap()
}

fn cauchy_1d() -> JumpKernel {
    JumpKernel::new(1, BernsteinFunction::stable(1.0).unwrap()).unwrap()
}

/// Smallest eigenvalue of the radial Dirichlet Laplacian on `(a, b)` by a
/// cell-centred flux scheme and inverse iteration. `a = 0` means a ball.
fn radial_lambda1(dim: usize, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let w = |r: f64| r.powi(dim as i32 - 1);
    let r = |i: f64| a + i * h;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let rc = w(r(i as f64 + 0.5));
        let (wl, wr) = (w(r(i as f64)), w(r(i as f64 + 1.0)));
        let left = if i == 0 {
            if a == 0.0 { 0.0 } else { 2.0 * wl }
        } else {
            wl
        };
        let right = if i == n - 1 { 2.0 * wr } else { wr };
        diag[i] = (left + right) / (rc * h * h);
        if i > 0 {
            lower[i] = -wl / (rc * h * h);
        }
        if i < n - 1 {
            upper[i] = -wr / (rc * h * h);
        }
    }
    let solve = |rhs: &[f64]| {
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = upper[0] / diag[0];
        d[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - lower[i] * c[i - 1];
            c[i] = upper[i] / m;
            d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let v = solve(&u);
        lambda = norm(&u) / norm(&v);
        let s = norm(&v);
        u = v.iter().map(|x| x / s).collect();
    }
    lambda
}

#[test]
fn dirichlet_eigenvalues_match_finite_differences() {
    let cases = [
        (Domain::interval(-1.0, 1.0).unwrap(), 1, 0.0, 1.0),
        (Domain::interval(2.0, 2.5).unwrap(), 1, 0.0, 0.25),
        (Domain::ball(vec![0.0, 0.0], 1.0).unwrap(), 2, 0.0, 1.0),
        (Domain::ball(vec![1.0, 0.0, 0.0], 0.5).unwrap(), 3, 0.0, 0.5),
        (Domain::annulus(vec![0.0, 0.0], 0.5, 1.0).unwrap(), 2, 0.5, 1.0),
        (Domain::annulus(vec![0.0, 0.0, 0.0], 1.0, 3.0).unwrap(), 3, 1.0, 3.0),
    ];
    for (domain, dim, a, b) in cases {
        let want = radial_lambda1(dim, a, b, 4000);
        let got = domain.dirichlet_laplacian_lambda1().unwrap();
        assert!((got / want - 1.0).abs() < 1e-5, "{domain:?}: {got} vs {want}");
    }
}

fn small_scale_report(terms: HTerms) -> Status {
    let mut opts = RatioOptions::new(31);
    opts.box_width = 0.002;
    opts.terms = terms;
    let upper = GlobalUpperFit { c1: 1.0, c2: 1.0, c3: 1.0 };
    let pairs = vec![(vec![0.0], vec![0.01])];
    let r = sandwich_report(&interval(), &cauchy_1d(), &[2.5e-5, 5e-5], &pairs, 20_000, &opts, Some(upper)).unwrap();
    assert!(r.grid.iter().all(|p| p.is_resolved()), "{:?}", r.grid);
    r.status
}

#[test]
fn gaussian_term_is_needed_at_short_range() {
    assert_eq!(small_scale_report(HTerms::Both), Status::Pass);
    assert_eq!(small_scale_report(HTerms::DropGaussian), Status::Fail);
}

#[test]
fn brownian_decay_rate_is_the_interval_eigenvalue() {
    let times: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
    let r = eigen_report(&interval(), &BernsteinFunction::drift_only(), &[0.0], &times, 20_000, 1e-3, 5, 0.2).unwrap();
    let lambda = r.fitted_constants["lambda1_hat"];
    let want = std::f64::consts::PI.powi(2) / 4.0;
    assert!((lambda / want - 1.0).abs() < 0.1, "{lambda} vs {want}");
    assert_eq!(r.status, Status::Pass);
}

fn green_at(ys: &[f64], seed: u64) -> Vec<(f64, f64)> {
    let cfg = KilledPathConfig::new(interval(), vec![0.0], 30.0, 1e-3, 20_000, seed).unwrap();
    let boxes = BoxSet::new(ys.iter().map(|&y| vec![y]).collect(), 0.02).unwrap();
    let g = green_estimate(&cfg, &BernsteinFunction::stable(1.0).unwrap(), &boxes).unwrap();
    g.density.iter().map(|e| (e.estimate, e.stderr)).collect()
}

#[test]
fn occupation_density_is_mirror_symmetric() {
    let ys = [-0.6, -0.3, 0.3, 0.6];
    let g = green_at(&ys, 41);
    for (a, b) in [(0, 3), (1, 2)] {
        let (ga, sa) = g[a];
        let (gb, sb) = g[b];
        assert!((ga - gb).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "{ga} vs {gb}");
    }
}

#[test]
fn occupation_density_vanishes_linearly_at_the_boundary() {
    let deltas = [0.05, 0.1, 0.2];
    let g = green_at(&deltas.map(|d| 1.0 - d), 42);
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = g.iter().map(|(e, _)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope - 1.0).abs() < 0.2, "slope {slope}");
}
