//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::process::ExitCode;
use std::time::Instant;

use hybridbo::batch::{self, Arm, BatchResult, Method};
use hybridbo::verify;
use hybridbo_core::bench::{BenchmarkFn, DiscreteRosenbrock, Friedman8C};
use hybridbo_core::optimizer::{ObjectiveError, Optimizer, RunConfig, Serial};
use hybridbo_core::rng;
use hybridbo_core::{Criterion, KernelSpec, MixedPoint};

const SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn finals(r: &BatchResult, arm: usize) -> Vec<f64> {
    SEEDS.iter().map(|&s| r.trace(arm, s).and_then(|t| t.best_value()).unwrap_or(f64::NAN)).collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run_arms(bench: &dyn BenchmarkFn, arms: &[Arm]) -> BatchResult {
    let objective = |x: &MixedPoint| bench.evaluate(x).map_err(|e| ObjectiveError(e.to_string()));
    batch::batch_experiment(arms, bench.problem(), &objective, &SEEDS)
}

fn worked_example() -> Outcome {
    match verify::worked_example() {
        Ok(d) => outcome(true, d),
        Err(d) => outcome(false, d),
    }
}

/// Friedman-8C arms: hybridM with R1/2, random, AcqOnly, then one arm per
/// fixed kernel.
fn friedman_arms() -> Vec<Arm> {
    let base = RunConfig::default();
    let mut arms = vec![
        Arm::new(Method::HybridM, base.clone()),
        Arm::new(Method::Random, base.clone()),
        Arm::new(Method::HybridM, RunConfig { criterion: Criterion::AcqOnly, ..base.clone() }).labelled("acq"),
    ];
    for k in KernelSpec::defaults() {
        arms.push(Arm::new(Method::HybridM, RunConfig { kernels: vec![k], ..base.clone() }).labelled(k.name()));
    }
    arms
}

fn friedman_vs_random(r: &BatchResult) -> Outcome {
    let hyb = finals(r, 0);
    let rnd = finals(r, 1);
    let wins = hyb.iter().zip(&rnd).filter(|(h, r)| h > r).count();
    let m = mean(&hyb);
    outcome(
        m >= 27.0 && wins >= 8,
        format!("mean final best {m:.3} (need >= 27.0), beats random in {wins}/10 seeds (need >= 8); hybridM {} random {}", fmt(&hyb), fmt(&rnd)),
    )
}

fn rosenbrock_vs_random() -> Outcome {
    let bench = DiscreteRosenbrock::standard();
    let arms = [Arm::new(Method::HybridM, RunConfig::default()), Arm::new(Method::Random, RunConfig::default())];
    let r = run_arms(&bench, &arms);
    let hyb = finals(&r, 0);
    let rnd = finals(&r, 1);
    let monotone = SEEDS.iter().all(|&s| {
        r.trace(0, s).is_some_and(|t| t.best_so_far().windows(2).all(|w| w[1] >= w[0]) && t.records.len() == 100)
    });
    let (mh, mr) = (mean(&hyb), mean(&rnd));
    outcome(
        mh >= mr && monotone,
        format!("mean final best {mh:.4} vs random {mr:.4}, best-so-far monotone in every run: {monotone}"),
    )
}

fn dynamic_vs_fixed(r: &BatchResult) -> Outcome {
    let dynamic = mean(&finals(r, 0));
    let fixed: Vec<(String, f64)> = (3..r.summaries.len()).map(|a| (r.summaries[a].label.clone(), mean(&finals(r, a)))).collect();
    let (best_name, best) = fixed.iter().cloned().fold((String::new(), f64::NEG_INFINITY), |b, f| if f.1 > b.1 { f } else { b });
    let listed: Vec<String> = fixed.iter().map(|(n, m)| format!("{n} {m:.3}")).collect();
    outcome(
        dynamic >= best - 1.0,
        format!("R1/2 mean {dynamic:.3} vs best fixed {best_name} {best:.3} (need >= best - 1.0); fixed: {}", listed.join(", ")),
    )
}

fn criteria_comparison(r: &BatchResult) -> Outcome {
    let half = mean(&finals(r, 0));
    let acq = mean(&finals(r, 2));
    // every criterion must run end to end on the same problem
    let bench = Friedman8C::new();
    let objective = |x: &MixedPoint| bench.evaluate(x).map_err(|e| ObjectiveError(e.to_string()));
    let mut runnable = Vec::new();
    for c in Criterion::ALL {
        let arm = Arm::new(Method::HybridM, RunConfig { criterion: c, n0: 10, budget: 14, ..RunConfig::default() });
        if batch::run_one(&arm, bench.problem(), &objective, 0).is_ok_and(|t| t.records.len() == 14) {
            runnable.push(c.name());
        }
    }
    outcome(
        half >= acq - 1.0 && runnable.len() == Criterion::ALL.len(),
        format!("R1/2 mean {half:.3} vs AcqOnly mean {acq:.3} (need >= AcqOnly - 1.0); runnable criteria: {}", runnable.join(", ")),
    )
}

fn from_checks(checks: Vec<Result<String, String>>) -> Outcome {
    let passed = checks.iter().all(|c| c.is_ok());
    let detail: Vec<String> = checks.into_iter().map(|c| c.unwrap_or_else(|e| format!("FAILED {e}"))).collect();
    outcome(passed, detail.join("; "))
}

fn oracle_equivalences() -> Outcome {
    from_checks(vec![
        verify::loglik_vs_dense(1000, 1e-8),
        verify::matern_vs_bessel(1e-10),
        verify::ei_max_vs_grid(10, 1e-3),
        verify::tree_replay(1000),
    ])
}

fn property_suites() -> Outcome {
    from_checks(vec![
        verify::gram_psd(1000),
        verify::ei_nonnegative(10_000),
        verify::rank_invariance(1000),
        verify::dirichlet_posterior(1000),
        verify::dirichlet_marginals(10_000),
        verify::ucts_degenerate(1000),
        verify::friedman_inactive(1000),
        verify::leaf_counts(),
    ])
}

/// Seconds for one proposal after `n` random Friedman-8C observations, the
/// best of `reps` repetitions.
fn proposal_seconds(n: usize, reps: usize) -> f64 {
    let bench = Friedman8C::new();
    let space = bench.space().clone();
    let mut r = rng::seeded(n as u64);
    let mut opt = Optimizer::new(space.clone(), RunConfig { budget: 1000, ..RunConfig::default() }).unwrap();
    for _ in 0..n {
        let x = space.random_point(&mut r);
        let y = bench.evaluate(&x).unwrap();
        opt.observe(x, y).unwrap();
    }
    // step 0 fits a single kernel; measure full steps
    opt.clone().propose_next(&Serial).unwrap();
    let mut warmed = opt.clone();
    warmed.propose_next(&Serial).unwrap();
    (0..reps)
        .map(|_| {
            let mut o = warmed.clone();
            let t = Instant::now();
            o.propose_next(&Serial).unwrap();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn complexity(r: &BatchResult) -> Outcome {
    let levels = Friedman8C::new().space().cats.len() as u64;
    let mut exact = true;
    for (arm, _, t) in &r.runs {
        if let (true, Ok(t)) = (r.summaries[*arm].method != Method::Random, t) {
            exact &= t.records.iter().filter(|x| !x.is_pilot).all(|x| x.decisions == levels);
        }
    }
    let ns = [25usize, 50, 100, 200];
    let secs: Vec<f64> = ns.iter().map(|&n| proposal_seconds(n, 3)).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = secs.iter().map(|s| s.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    let timings: Vec<String> = ns.iter().zip(&secs).map(|(n, s)| format!("n={n} {s:.3}s")).collect();
    outcome(
        exact && slope <= 3.3,
        format!("decisions per iteration = {levels} in every run: {exact}; log-log slope {slope:.2} (need <= 3.3); {}", timings.join(", ")),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "worked example", worked_example()));
    let friedman = run_arms(&Friedman8C::new(), &friedman_arms());
    results.push((2, "friedman8c vs random", friedman_vs_random(&friedman)));
    results.push((3, "rosenbrock vs random", rosenbrock_vs_random()));
    results.push((4, "dynamic vs fixed kernels", dynamic_vs_fixed(&friedman)));
    results.push((5, "criterion comparison", criteria_comparison(&friedman)));
    results.push((6, "oracle equivalences", oracle_equivalences()));
    results.push((7, "property suites", property_suites()));
    results.push((8, "complexity", complexity(&friedman)));

    let mut failed = 0;
    for (i, name, o) in &results {
        let status = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("criterion {i} {status} {name}: {}", o.detail);
    }
    println!("acceptance: {} passed, {failed} failed in {:.0}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
