use hybridbo_core::bench::{BenchmarkFn, CategorySwitched};
use hybridbo_core::optimizer::{run, ObjectiveError, Optimizer, RunConfig, RunTrace, Serial};
use hybridbo_core::selection::{self, Criterion};
use hybridbo_core::tree::Strategy;
use hybridbo_core::{Direction, MixedPoint, ProblemSpec, VariableSpec};

fn toy_run(problem: &ProblemSpec, f: impl Fn(&MixedPoint) -> f64, cfg: &RunConfig) -> RunTrace {
    let mut obj = |x: &MixedPoint| Ok::<_, ObjectiveError>(f(x));
    run(problem, &mut obj, cfg).unwrap()
}

#[test]
fn three_category_toy_finds_the_best_category() {
    let problem = ProblemSpec::new(vec![VariableSpec::categorical("c", &["a", "b", "c"])], Direction::Maximize);
    let values = [0.0, 1.0, 0.5];
    for strategy in [Strategy::Ucts, Strategy::Dirichlet] {
        let cfg = RunConfig { n0: 3, budget: 30, strategy, seed: 4, ..RunConfig::default() };
        let t = toy_run(&problem, |x| values[x.cat[0]], &cfg);
        assert_eq!(t.best_value(), Some(1.0));
        let tree = t.tree.as_ref().unwrap();
        let most = tree.nodes.iter().filter(|n| n.path.len() == 1).max_by_key(|n| n.visits).unwrap();
        assert_eq!(most.path, vec![1], "{strategy:?}: {tree:?}");
    }
}

#[test]
fn two_level_toy_matches_brute_force() {
    let problem = ProblemSpec::new(
        vec![VariableSpec::categorical("a", &["0", "1"]), VariableSpec::categorical("b", &["0", "1", "2"])],
        Direction::Maximize,
    );
    let value = |x: &MixedPoint| [[0.2, -1.0, 0.7], [0.1, 1.3, 0.4]][x.cat[0]][x.cat[1]];
    let brute = (0..2).flat_map(|a| (0..3).map(move |b| (a, b))).map(|(a, b)| value(&MixedPoint { cat: vec![a, b], con: vec![] }));
    let brute = brute.fold(f64::NEG_INFINITY, f64::max);
    for seed in 0..3 {
        let cfg = RunConfig { n0: 4, budget: 60, seed, ..RunConfig::default() };
        let t = toy_run(&problem, value, &cfg);
        assert_eq!(t.best_value(), Some(brute));
    }
}

#[test]
fn runs_are_reproducible_and_consistent() {
    let bench = CategorySwitched::default_instance();
    let cfg = RunConfig { n0: 5, budget: 14, seed: 9, ..RunConfig::default() };
    let f = |x: &MixedPoint| bench.evaluate(x).unwrap();
    let a = toy_run(bench.problem(), f, &cfg);
    let b = toy_run(bench.problem(), f, &cfg);
    let strip = |t: &RunTrace| t.records.iter().map(|r| (r.point.clone(), r.value, r.kernel, r.scores.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));

    let levels = bench.space().cats.len() as u64;
    let mut best = f64::NEG_INFINITY;
    for r in &a.records {
        best = best.max(r.value);
        assert_eq!(r.best_so_far, best);
        if r.is_pilot {
            assert_eq!(r.decisions, 0);
            assert!(r.kernel.is_none());
        } else {
            assert_eq!(r.decisions, levels);
            assert!(r.kernel.is_some());
        }
    }
    // the first proposal fits a single kernel, later ones fit all five
    let seq: Vec<_> = a.records.iter().filter(|r| !r.is_pilot).collect();
    assert_eq!(seq[0].scores.len(), 1);
    assert!(seq[1..].iter().all(|r| r.scores.len() == 5));

    // logged criterion values agree with a recomputation from logged scores
    for r in &seq[1..] {
        let ll: Vec<f64> = r.scores.iter().map(|s| s.loglik).collect();
        let acq: Vec<f64> = r.scores.iter().map(|s| s.acq).collect();
        let expect = selection::r_half(&ll, &acq).unwrap();
        let got: Vec<f64> = r.scores.iter().map(|s| s.criterion_value).collect();
        assert_eq!(got, expect);
        assert_eq!(Some(r.scores[selection::select_kernel(&r.scores).unwrap()].kernel), r.kernel);
    }

    // the tree saw every evaluation
    let tree = a.tree.as_ref().unwrap();
    assert_eq!(tree.nodes[0].visits, a.records.len() as u64);
}

#[test]
fn every_criterion_runs() {
    let bench = CategorySwitched::default_instance();
    let f = |x: &MixedPoint| bench.evaluate(x).unwrap();
    for criterion in Criterion::ALL {
        let cfg = RunConfig { n0: 4, budget: 8, criterion, seed: 1, ..RunConfig::default() };
        let t = toy_run(bench.problem(), f, &cfg);
        assert_eq!(t.records.len(), 8, "{criterion}");
    }
}

#[test]
fn stepwise_interface_matches_run() {
    let bench = CategorySwitched::default_instance();
    let cfg = RunConfig { n0: 4, budget: 9, seed: 2, ..RunConfig::default() };
    let f = |x: &MixedPoint| bench.evaluate(x).unwrap();
    let whole = toy_run(bench.problem(), f, &cfg);

    let mut opt = Optimizer::new(bench.space().clone(), cfg.clone()).unwrap();
    for r in whole.records.iter().take(4) {
        opt.observe(r.point.clone(), r.value).unwrap();
    }
    for r in whole.records.iter().skip(4) {
        let p = opt.propose_next(&Serial).unwrap();
        assert_eq!(p.point, r.point);
        opt.observe(p.point, f(&r.point)).unwrap();
    }
    assert_eq!(opt.step(), 5);
}
