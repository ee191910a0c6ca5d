//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use dirheat_core::envelope::HTerms;
use dirheat_core::harness::{self, Band, RatioOptions, RatioReport, Status};
use dirheat_core::simulate::{survival_curve, KilledPathConfig};
use dirheat_core::{BernsteinFunction, Domain, JumpKernel};
use statrs::function::gamma::gamma;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn interval() -> Domain {
    Domain::interval(-1.0, 1.0).unwrap()
}

fn cauchy(d: usize) -> JumpKernel {
    JumpKernel::new(d, BernsteinFunction::stable(1.0).unwrap()).unwrap()
}

fn sandwich_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    [
        (0.0, 0.0),
        (0.0, 0.25),
        (0.0, -0.5),
        (-0.5, -0.5),
        (-0.5, -0.8),
        (-0.5, -0.2),
        (0.5, 0.9),
        (0.5, 0.7),
        (0.5, 0.2),
    ]
    .into_iter()
    .map(|(x, y)| (vec![x], vec![y]))
    .collect()
}

fn summary(r: &RatioReport) -> String {
    format!("status {:?}, ratios [{:.4}, {:.4}]", r.status, r.ratios.min, r.ratios.max)
}

/// `r^{d+alpha} j(r)` for the stable entry, in closed form.
fn stable_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma((df + alpha) / 2.0) / (PI.powf(df / 2.0) * gamma(1.0 - alpha / 2.0))
}

fn criterion_1() -> Outcome {
    let radii: Vec<f64> = (0..=30).map(|i| 1e-2 * 1e3f64.powf(i as f64 / 30.0)).collect();
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        for d in 1..=3 {
            let k = JumpKernel::new(d, BernsteinFunction::stable(alpha).unwrap()).unwrap();
            let c = stable_constant(d, alpha);
            let scaled: Vec<f64> = radii.iter().map(|&r| k.j(r).unwrap() * r.powf(d as f64 + alpha)).collect();
            for s in &scaled {
                worst = worst.max((s / scaled[0] - 1.0).abs()).max((s / c - 1.0).abs());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max relative deviation {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    type Psi = Box<dyn Fn(f64) -> f64>;
    let catalog: [(&str, Psi); 6] = [
        ("stable:alpha=0.5", Box::new(|l: f64| l.powf(0.25))),
        ("stable:alpha=1", Box::new(|l: f64| l.sqrt())),
        ("stable:alpha=1.5", Box::new(|l: f64| l.powf(0.75))),
        ("relativistic:alpha=1,m=1", Box::new(|l: f64| (l + 1.0).sqrt() - 1.0)),
        (
            "relativistic:alpha=1.5,m=2",
            Box::new(|l: f64| (l + 2f64.powf(2.0 / 1.5)).powf(0.75) - 2.0),
        ),
        (
            "stablemix:w1=0.5,a1=0.8;w2=1,a2=1.4",
            Box::new(|l: f64| 0.5 * l.powf(0.4) + l.powf(0.7)),
        ),
    ];
    let mut worst = 0.0f64;
    for (spec, psi) in &catalog {
        let f: BernsteinFunction = spec.parse().unwrap();
        for i in 0..=20 {
            let l = 0.1 * 100f64.powf(i as f64 / 20.0);
            let num = f.laplace_exponent_numeric(l, 1e-10).unwrap();
            worst = worst.max((num / psi(l) - 1.0).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.2e} over 6 entries"))
}

/// `P(tau > t)` from the midpoint of `(-1, 1)` for Brownian motion with
/// generator `Δ`, by the eigenfunction expansion.
fn brownian_survival(t: f64) -> f64 {
    (0..100)
        .map(|k| {
            let m = (2 * k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * 4.0 / (m * PI) * (-m * m * PI * PI * t / 4.0).exp()
        })
        .sum()
}

fn criterion_3() -> Outcome {
    let times = [0.1, 0.5, 1.0];
    let cfg = KilledPathConfig::new(interval(), vec![0.0], 1.0, 5e-5, 100_000, 3).unwrap();
    let est = survival_curve(&cfg, &BernsteinFunction::drift_only(), &times).unwrap();
    let z: Vec<f64> = times
        .iter()
        .zip(&est)
        .map(|(&t, e)| (e.estimate - brownian_survival(t)) / e.stderr)
        .collect();
    let pass = z.iter().all(|v| v.abs() <= 3.0);
    outcome(pass, format!("z-scores {:?}", z.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>()))
}

fn criterion_4() -> Outcome {
    let opts = RatioOptions::new(4);
    let r = harness::sandwich_report(&interval(), &cauchy(1), &[0.05, 0.1, 0.5], &sandwich_pairs(), 1_000_000, &opts, None)
        .unwrap();
    let in_band = r.ratios.min >= 0.01 && r.ratios.max <= 100.0;
    let pass = r.status == Status::Pass && in_band && r.grid.len() == 27 && r.is_internally_consistent();
    outcome(pass, summary(&r))
}

fn criterion_5() -> Outcome {
    let d = interval();
    let starts: Vec<Vec<f64>> = (0..6).map(|i| vec![-1.0 + 0.02 * 10f64.powf(i as f64 / 5.0)]).collect();
    let f = BernsteinFunction::stable(1.0).unwrap();
    let r = harness::survival_exponent_report(&d, &f, &starts, 0.25, 40_000, 1e-4, 5, 1.0, 0.15).unwrap();
    let slope = r.fitted_constants.get("slope").copied().unwrap_or(f64::NAN);
    outcome(r.status == Status::Pass && (slope - 1.0).abs() <= 0.15, format!("slope {slope:.3}"))
}

fn criterion_6() -> Outcome {
    let f = BernsteinFunction::stable(1.0).unwrap();
    let times: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
    let r = harness::eigen_report(&interval(), &f, &[0.0], &times, 100_000, 1e-3, 6, 0.1).unwrap();
    let phi = PI * PI / 4.0 + PI / 2.0;
    let lambda = r.fitted_constants.get("lambda1_hat").copied().unwrap_or(f64::NAN);
    let (lo, hi) = (0.9 * phi / 2.0, 1.1 * phi);
    outcome(
        lambda >= lo && lambda <= hi,
        format!("lambda1_hat {lambda:.3} in [{lo:.3}, {hi:.3}]"),
    )
}

fn criterion_7() -> Outcome {
    let u = Domain::ball(vec![0.0], 0.5).unwrap();
    let a = Domain::ball(vec![2.0], 0.25).unwrap();
    let r = harness::levy_system_report(&cauchy(1), &u, &[0.0], &a, 100_000, 1e-3, 7, 3.0).unwrap();
    let c = &r.checks[0];
    outcome(
        r.status == Status::Pass && c.value.abs() <= 3.0 * c.stderr,
        format!(
            "lhs {:.5} rhs {:.5} difference {:.2e} (sigma {:.2e})",
            r.fitted_constants["lhs"], r.fitted_constants["rhs"], c.value, c.stderr
        ),
    )
}

fn criterion_8() -> Outcome {
    let d = Domain::disjoint_balls(vec![vec![0.0], vec![4.0]], 1.0).unwrap();
    let times = [0.02, 0.05, 0.1, 0.2, 0.5];
    let ys = [vec![4.0], vec![3.5]];
    let mut opts = RatioOptions::new(8);
    opts.box_width = 0.1;
    opts.band = Band::CROSS_COMPONENT;
    let k = cauchy(1);
    let r = harness::cross_component_report(&d, &k, &times, &[0.0], &ys, 1_000_000, &opts).unwrap();
    let in_band = r.ratios.min >= 1.0 / 50.0 && r.ratios.max <= 50.0;
    opts.terms = HTerms::DropJump;
    let mutant = harness::cross_component_report(&d, &k, &times, &[0.0], &ys, 100_000, &opts).unwrap();
    outcome(
        r.status == Status::Pass && in_band && mutant.status == Status::Fail,
        format!("{}; jump term deleted: {:?}", summary(&r), mutant.status),
    )
}

fn criterion_9() -> Outcome {
    let f = BernsteinFunction::stable(1.0).unwrap();
    let mc = harness::green_report(&interval(), &f, &[0.0], 0.05, 50_000, 1e-3, 9, Band::SANDWICH, 1e-4).unwrap();
    let oracle = harness::green_oracle_report(&[1, 2, 3], 0.25, Band::new(1.0 / 50.0, 50.0).unwrap()).unwrap();
    let pass = mc.status == Status::Pass
        && mc.ratios.min >= 0.01
        && mc.ratios.max <= 100.0
        && oracle.status == Status::Pass
        && oracle.ratios.min >= 1.0 / 50.0
        && oracle.ratios.max <= 50.0;
    outcome(pass, format!("Monte Carlo: {}; time-integral oracle: {}", summary(&mc), summary(&oracle)))
}

fn criterion_10() -> Outcome {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let opts = RatioOptions::new(10);
            let pairs = sandwich_pairs();
            let upper = dirheat_core::free_density::GlobalUpperFit { c1: 1.0, c2: 2.0, c3: 2.0 };
            let a = harness::sandwich_report(&interval(), &cauchy(1), &[0.05, 0.1], &pairs, 30_000, &opts, Some(upper))
                .unwrap();
            let u = Domain::ball(vec![0.0], 0.5).unwrap();
            let set = Domain::ball(vec![2.0], 0.25).unwrap();
            let b = harness::levy_system_report(&cauchy(1), &u, &[0.0], &set, 20_000, 1e-3, 10, 3.0).unwrap();
            serde_json::to_string_pretty(&(a, b)).unwrap()
        })
    };
    let first = run(1);
    let second = run(4);
    let third = run(1);
    outcome(
        first == second && first == third,
        format!("{} bytes, identical across reruns and thread counts", first.len()),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome, u64);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "kernel scaling oracle", criterion_1, 10),
        (2, "Laplace-transform round trip", criterion_2, 10),
        (3, "Gaussian degenerate oracle", criterion_3, 60),
        (4, "Dirichlet sandwich", criterion_4, 600),
        (5, "survival exponent", criterion_5, 300),
        (6, "eigenvalue bracket", criterion_6, 300),
        (7, "Levy-system identity", criterion_7, 120),
        (8, "cross-component jump dominance", criterion_8, 600),
        (9, "Green sandwich", criterion_9, 600),
        (10, "determinism", criterion_10, 600),
    ];
    let mut failures = 0;
    for (n, name, run, limit) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= Duration::from_secs(limit);
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {n:>2} {name}: {} ({}; {:.1} s, limit {limit} s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
