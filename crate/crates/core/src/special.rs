//! Special functions not covered by `statrs`: Bessel functions of the first
//! kind for small arguments and a symmetric tridiagonal eigenvalue solver.

pub use statrs::function::gamma::{gamma, ln_gamma};

/// `J_nu(x)` by its power series. Accurate to ~1e-12 for `0 < x <= 12` and
/// moderate `nu > -1`, which covers the first zeros needed for balls up to
/// dimension 10.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // k = 0 term: (x/2)^nu / Gamma(nu + 1)
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J_nu` for `-1 < nu <= 4`.
pub fn bessel_j_first_zero(nu: f64) -> f64 {
    assert!(nu > -1.0 && nu <= 4.0, "order {nu} outside supported range");
    let step = 0.05;
    let mut lo = step;
    let mut f_lo = bessel_j(nu, lo);
    loop {
        let hi = lo + step;
        let f_hi = bessel_j(nu, hi);
        if f_lo.signum() != f_hi.signum() {
            return bisect(|x| bessel_j(nu, x), lo, hi);
        }
        lo = hi;
        f_lo = f_hi;
    }
}

/// Root of `f` in `[lo, hi]`, assuming a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() == diag.len() - 1`), by Sturm
/// sequence bisection.
pub fn smallest_tridiagonal_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    assert_eq!(off.len() + 1, diag.len());
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i < off.len() { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    // number of eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = diag[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..diag.len() {
            let prev = if q == 0.0 { f64::EPSILON * off[i - 1].abs().max(1.0) } else { q };
            q = diag[i] - x - off[i - 1] * off[i - 1] / prev;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
