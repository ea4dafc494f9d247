//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built without the libtest harness so the lines always show up in
//! `cargo test` output. A failed criterion is reported but only turns into a
//! non-zero exit with `ACCEPTANCE_STRICT=1`, so the rest of the workspace
//! suite still runs.

use fade_modfun::estimator::Window;
use fade_modfun::{
    add_noise, checks, estimate_two_param, newton_estimate, EstimatorConfig, MeasurementSet,
    TrueModel, UniformGrid,
};

const SEEDS: u64 = 20;

fn data(nu: f64, per_unit: f64) -> MeasurementSet {
    let grid = UniformGrid::with_spacing(9.0, 1.0 / per_unit).expect("grid");
    MeasurementSet::synthesize(&TrueModel::example(nu, 1.0, 1.8), &grid).expect("data")
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn noise_free_two_param() -> Verdict {
    let errs: Vec<[f64; 2]> = [1500.0, 3000.0]
        .iter()
        .map(|&per_unit| {
            let fit = estimate_two_param(&data(0.2, per_unit), 9.0, 3, 3, 1.8).expect("fit");
            [rel(fit.nu, 0.2), rel(fit.d, 1.0)]
        })
        .collect();
    let small = errs[0].iter().all(|e| *e <= 1e-3);
    let halving = (0..2).all(|i| errs[1][i] * 2.0 <= errs[0][i]);
    Verdict {
        passed: small && halving,
        detail: format!(
            "dx=1/1500 err(nu,d)=({:.2e}, {:.2e}) <= 1e-3; dx=1/3000 err=({:.2e}, {:.2e}), reduction >= 2x: {halving}",
            errs[0][0], errs[0][1], errs[1][0], errs[1][1]
        ),
    }
}

fn mean_two_param_errors(ms: &MeasurementSet, l1: f64) -> [f64; 2] {
    let mut mean = [0.0; 2];
    for seed in 0..SEEDS {
        let noisy = add_noise(ms, 0.03, seed).expect("noise");
        let fit = estimate_two_param(&noisy, l1, 3, 3, 1.8).expect("fit");
        mean[0] += rel(fit.nu, 0.2) / SEEDS as f64;
        mean[1] += rel(fit.d, 1.0) / SEEDS as f64;
    }
    mean
}

fn noisy_two_param() -> Verdict {
    let ms = data(0.2, 1500.0);
    let at9 = mean_two_param_errors(&ms, 9.0);
    let at5 = mean_two_param_errors(&ms, 5.0);
    let bounded = at9.iter().all(|e| *e <= 1e-2);
    let trend = (0..2).all(|i| at9[i] < at5[i]);
    Verdict {
        passed: bounded && trend,
        detail: format!(
            "3% noise, {SEEDS} seeds: mean err(nu,d) at L1=9 ({:.2e}, {:.2e}) <= 1e-2; at L1=5 ({:.2e}, {:.2e}), L1=9 lower: {trend}",
            at9[0], at9[1], at5[0], at5[1]
        ),
    }
}

struct Spread {
    converged: usize,
    runs: usize,
    worst: [f64; 3],
    mean: [f64; 3],
    /// Relative error of the seed-averaged estimate.
    of_mean: [f64; 3],
}

fn three_param_spread(ms: &MeasurementSet, count: u32, level: f64) -> Spread {
    let truth = [0.5, 1.0, 1.8];
    let cfg = EstimatorConfig {
        count,
        ..Default::default()
    };
    let mut s = Spread {
        converged: 0,
        runs: SEEDS as usize,
        worst: [0.0; 3],
        mean: [0.0; 3],
        of_mean: [0.0; 3],
    };
    let mut avg = [0.0; 3];
    for seed in 0..SEEDS {
        let noisy = add_noise(ms, level, seed).expect("noise");
        let r = newton_estimate(&noisy, &cfg).expect("estimate");
        s.converged += r.converged as usize;
        for (i, got) in [r.nu, r.d, r.alpha].into_iter().enumerate() {
            let e = rel(got, truth[i]);
            s.worst[i] = s.worst[i].max(e);
            s.mean[i] += e / SEEDS as f64;
            avg[i] += got / SEEDS as f64;
        }
    }
    for i in 0..3 {
        s.of_mean[i] = rel(avg[i], truth[i]);
    }
    s
}

fn fmt3(v: [f64; 3]) -> String {
    format!("({:.2e}, {:.2e}, {:.2e})", v[0], v[1], v[2])
}

fn three_param_table() -> Verdict {
    let ms = data(0.5, 3500.0);
    let mut passed = true;
    let mut lines = Vec::new();
    for count in 3..=11 {
        let s = three_param_spread(&ms, count, 0.02);
        let ok = s.converged == s.runs
            && s.worst.iter().all(|e| *e <= 2e-2)
            && s.mean.iter().all(|e| *e <= 5e-3);
        passed &= ok;
        lines.push(format!(
            "    N={count:<2} converged {}/{} worst {} mean {} err-of-mean {} {}",
            s.converged,
            s.runs,
            fmt3(s.worst),
            fmt3(s.mean),
            fmt3(s.of_mean),
            if ok { "ok" } else { "over" }
        ));
    }
    Verdict {
        passed,
        detail: format!(
            "2% noise, dx=1/3500, alpha0=1.4, {SEEDS} seeds, err(nu,d,alpha): every run <= 2e-2, mean <= 5e-3\n{}",
            lines.join("\n")
        ),
    }
}

fn high_noise() -> Verdict {
    let s = three_param_spread(&data(0.5, 3500.0), 7, 0.10);
    let within = s.worst.iter().all(|e| *e <= 5e-2);
    Verdict {
        passed: s.converged == s.runs && within,
        detail: format!(
            "N=7, 10% noise, {SEEDS} seeds: converged {}/{}, worst err(nu,d,alpha) {} <= 5e-2; mean {}",
            s.converged,
            s.runs,
            fmt3(s.worst),
            fmt3(s.mean)
        ),
    }
}

fn property_suite() -> Verdict {
    let outcomes = checks::run_all();
    let passed = outcomes.iter().all(|o| o.passed);
    let lines: Vec<String> = outcomes
        .iter()
        .map(|o| {
            format!(
                "    {:<22} worst {:.2e} tol {:.0e} {}",
                o.name,
                o.worst,
                o.tolerance,
                if o.passed { "ok" } else { "FAIL" }
            )
        })
        .collect();
    Verdict {
        passed,
        detail: format!("{} checks\n{}", outcomes.len(), lines.join("\n")),
    }
}

fn conditioning() -> Verdict {
    let ms = data(0.2, 1500.0);
    let mut conds = Vec::new();
    let mut ratios = Vec::new();
    for count in 3..=20 {
        let fit = Window::new(&ms, 9.0, count, 3)
            .expect("window")
            .fixed_order(1.8)
            .expect("fit");
        let sol = fade_modfun::solve_two_column(&fit.system).expect("solve");
        conds.push(sol.cond);
        ratios.push(sol.sigma_ratio);
    }
    let monotone = conds.windows(2).all(|w| w[1] > w[0]);
    let raw_monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    let show = |v: &[f64]| {
        v.iter()
            .map(|c| format!("{c:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Verdict {
        passed: monotone,
        detail: format!(
            "L1=9, b=3, alpha=1.8, N=3..20 column-scaled cond strictly increasing: {monotone}\n    cond: {}\n    unscaled sigma ratio (monotone: {raw_monotone}): {}",
            show(&conds),
            show(&ratios)
        ),
    }
}

type Criterion = fn() -> Verdict;

fn main() {
    let criteria: [(&str, Criterion); 6] = [
        ("noise-free two-parameter recovery", noise_free_two_param),
        ("noisy two-parameter robustness", noisy_two_param),
        ("three-parameter estimation", three_param_table),
        ("noise-level stability", high_noise),
        ("property suite", property_suite),
        ("conditioning growth", conditioning),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let v = run();
        failures += !v.passed as usize;
        println!(
            "criterion {} [{}] {name} ({:.1}s): {}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
