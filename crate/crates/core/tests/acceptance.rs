//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::Rng as _;

use inolml::data::{
    apply_longtail, gen_synthetic, inject_symmetric, longtail_sizes, mixup, Dataset, ImbalanceSpec, SyntheticKind,
};
use inolml::detect::{update_moving_avg, SampleState};
use inolml::harness::{emit_metrics, prepare_data, run_experiment, warm_start, ExperimentConfig, Strategy};
use inolml::meta::{meta_train_step, pseudo_label, resolve_label, MetaBatch};
use inolml::oracle::{self, random_selection_instance, BatteryReport};
use inolml::rng;
use inolml::select::{max_utility, CleanSimilarity};

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_battery(report: &BatteryReport, elapsed: Duration, budget: Duration) -> Outcome {
    let mut detail = format!("{} cases, {} failures", report.cases, report.failures.len());
    for note in &report.notes {
        detail.push_str("; ");
        detail.push_str(note);
    }
    if let Some(first) = report.failures.first() {
        detail.push_str("; first failure: ");
        detail.push_str(first);
    }
    Outcome {
        passed: report.passed() && elapsed < budget,
        detail,
    }
}

fn meta_gradients() -> Outcome {
    let start = Instant::now();
    let report = oracle::meta_gradient_battery(25, 2024);
    from_battery(&report, start.elapsed(), Duration::from_secs(30))
}

fn backward() -> Outcome {
    let start = Instant::now();
    let report = oracle::backward_battery(100..120);
    from_battery(&report, start.elapsed(), Duration::from_secs(30))
}

fn greedy_matches_naive() -> Outcome {
    let start = Instant::now();
    let report = oracle::greedy_battery(100, 77);
    from_battery(&report, start.elapsed(), Duration::from_secs(60))
}

fn structural() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 0..100 {
        let inst = random_selection_instance(rng::derive(4040, n));
        let res = match max_utility(&inst.pool, &inst.feats, inst.m, inst.k, CleanSimilarity::Dot) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("instance {n}: {e}"));
                continue;
            }
        };
        let val: BTreeSet<usize> = res.validation_set.iter().copied().collect();
        let lower: BTreeSet<usize> = res.lower_set.iter().copied().collect();
        let pool: BTreeSet<usize> = inst.pool.iter().copied().collect();
        let clean: BTreeSet<usize> = inst.pseudo_clean.iter().copied().collect();
        let train: BTreeSet<usize> = res.training_set.iter().copied().collect();
        let all: BTreeSet<usize> = (0..inst.feats.len()).collect();
        let mut ok = val.is_subset(&lower) && lower.is_subset(&pool) && pool.is_subset(&clean);
        ok &= val.len() == res.validation_set.len() && lower.len() == res.lower_set.len();
        ok &= train.is_disjoint(&val) && train.union(&val).copied().collect::<BTreeSet<_>>() == all;
        ok &= train.len() == res.training_set.len();
        let classes = inst.feats[0].g.len();
        for c in 0..classes {
            let count = |s: &BTreeSet<usize>| s.iter().filter(|&&i| inst.feats[i].class == c).count();
            let avail = count(&pool);
            ok &= count(&lower) == inst.k.min(avail);
            ok &= count(&val) == inst.m.min(count(&lower));
        }
        if !ok {
            failures.push(format!("instance {n}: val {val:?} lower {lower:?}"));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: failures.is_empty() && elapsed < Duration::from_secs(30),
        detail: format!("100 instances, {} violations", failures.len()),
    }
}

fn on_simplex(v: &[f64]) -> bool {
    v.iter().all(|x| (-1e-9..=1.0 + 1e-9).contains(x)) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

fn random_simplex(r: &mut rng::Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn simplex_and_ranges() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut r = rng::seeded(5, 5);
    for case in 0..2000 {
        let c = r.random_range(2..=6);
        let y = random_simplex(&mut r, c);
        let p = random_simplex(&mut r, c);
        let lam: f64 = r.random();
        if !on_simplex(&pseudo_label(&y, &p, lam)) {
            bad.push(format!("pseudo_label case {case}"));
        }
        if !on_simplex(&resolve_label(&y, &p, (case % 2) as f64)) {
            bad.push(format!("resolve_label case {case}"));
        }
        let (_, mixed, _) = mixup((&[0.0], &y), (&[1.0], &p), 1.0, &mut r).unwrap();
        if !on_simplex(&mixed) {
            bad.push(format!("mixup case {case}"));
        }
        let mut state = SampleState::new(y.clone(), 3);
        for _ in 0..3 {
            state.push_prediction(random_simplex(&mut r, c));
        }
        update_moving_avg(&mut state, r.random());
        if !on_simplex(&state.robust_label) {
            bad.push(format!("moving average case {case}"));
        }
    }

    let cfg = ExperimentConfig::preset("tiny").unwrap();
    let data = prepare_data(&cfg).unwrap();
    let ds = &data.train;
    let warm = warm_start(&cfg, ds).unwrap();
    let mut model = warm.model;
    let training = &warm.selection.training;
    let mut stream = rng::seeded(6, 6);
    let mut steps = 0;
    for t in 0..1000 {
        let picks = sample(&mut stream, training.len(), cfg.batch_size.min(training.len()));
        let idx: Vec<usize> = picks.iter().map(|k| training[k]).collect();
        let batch = MetaBatch::new(idx, warm.selection.validation.clone()).unwrap();
        let (next, report) = meta_train_step(&model, ds, &batch, &cfg.schedule, t, &cfg.meta, &mut stream).unwrap();
        model = next;
        steps += 1;
        let total: f64 = report.omega.iter().sum();
        if report.omega.iter().any(|&w| !(w >= 0.0)) || !(total == 0.0 || (total - 1.0).abs() <= 1e-9) {
            bad.push(format!("step {t}: omega {:?}", report.omega));
        }
        if report.lambda_star.iter().any(|&l| l != 0.0 && l != 1.0) {
            bad.push(format!("step {t}: gates {:?}", report.lambda_star));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        passed: bad.is_empty() && elapsed < Duration::from_secs(60),
        detail: format!("2000 label cases, {steps} meta steps, {} violations{}", bad.len(), first(&bad)),
    }
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!("; first: {s}")).unwrap_or_default()
}

fn noise_statistics() -> Outcome {
    let start = Instant::now();
    let ds = gen_synthetic(SyntheticKind::GaussianBlobs, 4, 2500, 4, 0.3, 1).unwrap();
    let noisy = inject_symmetric(&ds, 0.4, 2).unwrap();
    let flipped = noisy.noise_fraction();
    let sizes = longtail_sizes(1000, 50.0, 4);
    let base: Dataset = gen_synthetic(SyntheticKind::GaussianBlobs, 4, 1000, 4, 0.3, 3).unwrap();
    let tail = apply_longtail(&base, ImbalanceSpec { ratio: 50.0 }, 4).unwrap();
    let expected = vec![1000, 271, 74, 20];
    let passed = n_ok(flipped) && sizes == expected && tail.class_counts() == expected;
    Outcome {
        passed: passed && start.elapsed() < Duration::from_secs(10),
        detail: format!(
            "flip fraction {flipped:.4} at n=10000, sizes {sizes:?}, subsampled counts {:?}",
            tail.class_counts()
        ),
    }
}

fn n_ok(flipped: f64) -> bool {
    (flipped - 0.4).abs() <= 0.02
}

fn reweighting() -> Outcome {
    let start = Instant::now();
    let (mut clean, mut noisy) = (Vec::new(), Vec::new());
    for seed in 0..3 {
        let cfg = ExperimentConfig {
            seed,
            ..ExperimentConfig::default()
        };
        let data = prepare_data(&cfg).unwrap();
        let ds = &data.train;
        let warm = warm_start(&cfg, ds).unwrap();
        let training = &warm.selection.training;
        let mut stream = rng::seeded(seed, 0x7777);
        for b in 0..20 {
            let picks = sample(&mut stream, training.len(), cfg.batch_size);
            let idx: Vec<usize> = picks.iter().map(|k| training[k]).collect();
            let batch = MetaBatch::new(idx.clone(), warm.selection.validation.clone()).unwrap();
            let (_, report) = meta_train_step(&warm.model, ds, &batch, &cfg.schedule, b, &cfg.meta, &mut stream).unwrap();
            for (&i, &w) in idx.iter().zip(&report.omega) {
                if ds.is_truly_clean(i) {
                    clean.push(w);
                } else {
                    noisy.push(w);
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mc, mn) = (mean(&clean), mean(&noisy));
    Outcome {
        passed: mc > mn && start.elapsed() < Duration::from_secs(120),
        detail: format!(
            "mean weight clean {mc:.5} ({} members) vs noisy {mn:.5} ({} members)",
            clean.len(),
            noisy.len()
        ),
    }
}

fn selection_quality() -> Outcome {
    let strategies = [Strategy::MaxUtility, Strategy::Random, Strategy::WeightOnly, Strategy::InfoOnly];
    let mut acc = [0.0; 4];
    let mut cleanliness_ok = true;
    let mut slowest = Duration::ZERO;
    let mut lines = Vec::new();
    for seed in 0..3 {
        for (k, &strategy) in strategies.iter().enumerate() {
            let cfg = ExperimentConfig {
                seed,
                strategy,
                ..ExperimentConfig::default()
            };
            let start = Instant::now();
            let out = run_experiment(&cfg).unwrap();
            slowest = slowest.max(start.elapsed());
            let last = out.records.last().unwrap();
            acc[k] += last.test_acc / 3.0;
            if strategy == Strategy::MaxUtility {
                cleanliness_ok &= last.val_clean > last.dc_precision;
                lines.push(format!(
                    "seed {seed} val_clean {:.3} vs D^(c) clean fraction {:.3}",
                    last.val_clean, last.dc_precision
                ));
            }
        }
    }
    let [full, random, weight, info] = acc;
    let beats_random = full >= random;
    let ordered = weight <= info && info <= full;
    let in_budget = slowest < Duration::from_secs(600);
    Outcome {
        passed: cleanliness_ok && beats_random && ordered && in_budget,
        detail: format!(
            "(a) {} [{}]; (b) {} max_utility {full:.4} vs random {random:.4}; (c) {} weight_only {weight:.4} <= info_only {info:.4} <= max_utility {full:.4}; slowest run {:.1}s",
            verdict(cleanliness_ok),
            lines.join("; "),
            verdict(beats_random),
            verdict(ordered),
            slowest.as_secs_f64()
        ),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "violated"
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    for name in ["a", "b"] {
        let out = run_experiment(&cfg).unwrap();
        emit_metrics(&out.records, dir.path().join(format!("{name}.jsonl"))).unwrap();
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    let same = read("a.jsonl") == read("b.jsonl") && read("a.csv") == read("b.csv");
    Outcome {
        passed: same && !read("a.jsonl").is_empty(),
        detail: format!("default preset seed {}: JSONL and CSV byte-identical: {same}", cfg.seed),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("meta-gradient fidelity", meta_gradients),
        ("backward pass vs finite differences", backward),
        ("greedy equals naive greedy", greedy_matches_naive),
        ("selection structure", structural),
        ("simplex and range invariants", simplex_and_ranges),
        ("noise injector statistics", noise_statistics),
        ("reweighting favours clean samples", reweighting),
        ("selection quality", selection_quality),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {}. {name} ({:.1}s): {}",
            n + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.passed {
            failed.push(n + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
}
