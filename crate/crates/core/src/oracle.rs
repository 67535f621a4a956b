//! Reference batteries behind `oracle-check`.
//!
//! Each battery recomputes a quantity from its definition (dense forward
//! passes, finite differences, from-scratch objective evaluation) and compares
//! it with the optimised library path.

use rand::Rng as _;

use crate::meta::{lambda_gradient, omega_raw};
use crate::nn::MlpModel;
use crate::rng::{self, Rng};
use crate::select::{
    brute_force_oracle, check_selection, greedy_lower, greedy_upper, info_objective, max_utility, CleanSimilarity,
    Objective, UtilityFeatures,
};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
    /// Informational lines, e.g. logged ratios.
    pub notes: Vec<String>,
}

impl BatteryReport {
    fn new(name: &'static str) -> Self {
        BatteryReport {
            name,
            cases: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Dense forward pass written out layer by layer.
struct Reference {
    /// `acts[l]` feeds layer `l`; the last entry is the penultimate feature.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    hidden_pre: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn ref_softmax(logits: &[f64]) -> Vec<f64> {
    let mut m = logits[0];
    for &v in logits {
        if v > m {
            m = v;
        }
    }
    let mut e = Vec::with_capacity(logits.len());
    let mut s = 0.0;
    for &v in logits {
        let x = (v - m).exp();
        e.push(x);
        s += x;
    }
    for x in &mut e {
        *x /= s;
    }
    e
}

fn ref_forward(model: &MlpModel, x: &[f64]) -> Reference {
    let dims = model.layer_dims();
    let layers = dims.len() - 1;
    let mut acts = vec![x.to_vec()];
    let mut hidden_pre = Vec::new();
    let mut logits = Vec::new();
    for l in 0..layers {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let w = model.weights(l);
        let b = model.bias(l);
        let input = &acts[l];
        let mut out = vec![0.0; n_out];
        for r in 0..n_out {
            let mut s = b[r];
            for c in 0..n_in {
                s += w[r * n_in + c] * input[c];
            }
            out[r] = s;
        }
        if l + 1 < layers {
            hidden_pre.push(out.clone());
            acts.push(out.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect());
        } else {
            logits = out;
        }
    }
    Reference {
        acts,
        hidden_pre,
        probs: ref_softmax(&logits),
    }
}

fn ref_ce(target: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, q) in target.iter().zip(p) {
        if *t != 0.0 {
            s -= t * q.max(1e-12).ln();
        }
    }
    s
}

fn one_hot(c: usize, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k == c { 1.0 } else { 0.0 }).collect()
}

fn random_simplex(r: &mut Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}

/// Backpropagated gradients against central differences of the dense forward pass.
///
/// Random networks of at most 100 parameters; inputs are redrawn until every
/// hidden pre-activation is at least `1e-3` away from the rectifier kink.
pub fn backward_battery(seeds: std::ops::Range<u64>) -> BatteryReport {
    let mut report = BatteryReport::new("backward vs finite differences");
    let h = 1e-6;
    for seed in seeds {
        let mut r = rng::seeded(seed, 0x6f01);
        let dims = loop {
            let mut d = vec![r.random_range(2..=4)];
            for _ in 0..r.random_range(1..=2) {
                d.push(r.random_range(2..=6));
            }
            d.push(r.random_range(2..=4));
            if param_count(&d) <= 100 {
                break d;
            }
        };
        let model = MlpModel::new(&dims, seed).expect("valid dims");
        let x = (0..50).find_map(|_| {
            let x: Vec<f64> = (0..dims[0]).map(|_| r.random_range(-2.0..2.0)).collect();
            let pre = ref_forward(&model, &x).hidden_pre;
            pre.iter().flatten().all(|v| v.abs() > 1e-3).then_some(x)
        });
        let Some(x) = x else {
            report.notes.push(format!("seed {seed}: no input clear of the kink, skipped"));
            continue;
        };
        let target = random_simplex(&mut r, *dims.last().unwrap());
        let trace = model.forward(&x).expect("dims match");
        let analytic = model.backward(&trace, &target).flat();
        let theta = model.params_flat();
        let loss = |p: &[f64]| ref_ce(&target, &ref_forward(&model.with_params_flat(p).unwrap(), &x).probs);
        report.cases += 1;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            tp[k] += h;
            let mut tm = theta.clone();
            tm[k] -= h;
            let fd = (loss(&tp) - loss(&tm)) / (2.0 * h);
            if !close(analytic[k], fd, 1e-4, 1e-8) {
                report
                    .failures
                    .push(format!("seed {seed} dims {dims:?} param {k}: analytic {} fd {fd}", analytic[k]));
            }
        }
    }
    report
}

struct MetaInstance {
    model: MlpModel,
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    train: Vec<usize>,
    val: Vec<usize>,
}

fn meta_instance(seed: u64) -> MetaInstance {
    let mut r = rng::seeded(seed, 0x6f02);
    let dims = loop {
        let mut d = vec![r.random_range(2..=3)];
        for _ in 0..r.random_range(1..=2) {
            d.push(r.random_range(4..=8));
        }
        d.push(r.random_range(2..=4));
        if param_count(&d) <= 200 {
            break d;
        }
    };
    let c = *dims.last().unwrap();
    let model = MlpModel::new(&dims, rng::derive(seed, 1)).expect("valid dims");
    let b = r.random_range(3..=8);
    let v = r.random_range(2..=6);
    let xs = (0..b + v)
        .map(|_| (0..dims[0]).map(|_| r.random_range(-1.5..1.5)).collect())
        .collect();
    let ys = (0..b + v).map(|_| r.random_range(0..c)).collect();
    MetaInstance {
        model,
        xs,
        ys,
        train: (0..b).collect(),
        val: (b..b + v).collect(),
    }
}

/// Output-layer weights after one SGD step on `(1/B) sum_i w_i CE(lam_i y_i + (1 - lam_i) p_i, f(x_i))`.
fn ref_last_layer_step(inst: &MetaInstance, omega: &[f64], lambdas: &[f64], eta: f64) -> Vec<f64> {
    let last = inst.model.num_layers() - 1;
    let mut w = inst.model.weights(last).to_vec();
    let n_in = inst.model.layer_dims()[last];
    let b = inst.train.len() as f64;
    for (k, &i) in inst.train.iter().enumerate() {
        let fw = ref_forward(&inst.model, &inst.xs[i]);
        let z = fw.acts.last().unwrap();
        for (cls, &p) in fw.probs.iter().enumerate() {
            let y = if cls == inst.ys[i] { 1.0 } else { 0.0 };
            let target = lambdas[k] * y + (1.0 - lambdas[k]) * p;
            for (col, &zv) in z.iter().enumerate() {
                w[cls * n_in + col] -= eta * omega[k] / b * (p - target) * zv;
            }
        }
    }
    w
}

/// Mean validation CE when the output layer uses `w_last`.
fn ref_val_loss(inst: &MetaInstance, w_last: &[f64]) -> f64 {
    let last = inst.model.num_layers() - 1;
    let n_in = inst.model.layer_dims()[last];
    let bias = inst.model.bias(last);
    let mut total = 0.0;
    for &j in &inst.val {
        let z = ref_forward(&inst.model, &inst.xs[j]).acts.pop().unwrap();
        let logits: Vec<f64> = (0..bias.len())
            .map(|cls| bias[cls] + (0..n_in).map(|col| w_last[cls * n_in + col] * z[col]).sum::<f64>())
            .collect();
        total += ref_ce(&one_hot(inst.ys[j], bias.len()), &ref_softmax(&logits));
    }
    total / inst.val.len() as f64
}

fn ref_features(inst: &MetaInstance, idx: &[usize], w_last: Option<&[f64]>, scale: f64) -> Vec<UtilityFeatures> {
    let last = inst.model.num_layers() - 1;
    let n_in = inst.model.layer_dims()[last];
    let bias = inst.model.bias(last);
    idx.iter()
        .map(|&i| {
            let fw = ref_forward(&inst.model, &inst.xs[i]);
            let z = fw.acts.last().unwrap().clone();
            let probs = match w_last {
                None => fw.probs,
                Some(w) => ref_softmax(
                    &(0..bias.len())
                        .map(|cls| bias[cls] + (0..n_in).map(|col| w[cls * n_in + col] * z[col]).sum::<f64>())
                        .collect::<Vec<_>>(),
                ),
            };
            let g = probs
                .iter()
                .enumerate()
                .map(|(cls, p)| scale * (p - if cls == inst.ys[i] { 1.0 } else { 0.0 }))
                .collect();
            UtilityFeatures {
                z,
                g,
                class: inst.ys[i],
            }
        })
        .collect()
}

/// Analytic weight and gate derivatives against finite differences of the
/// validation loss through a last-layer virtual step (`eta = 1e-3`).
///
/// Weight derivatives must agree within relative `1e-3`; gate derivatives
/// must agree in sign wherever their magnitude exceeds `1e-8`.
pub fn meta_gradient_battery(instances: usize, seed: u64) -> BatteryReport {
    let mut report = BatteryReport::new("meta-gradients vs finite differences");
    let eta = 1e-3;
    let lam0 = 0.9;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for n in 0..instances {
        let inst = meta_instance(rng::derive(seed, n as u64));
        let b = inst.train.len();
        report.cases += 1;

        let train = ref_features(&inst, &inst.train, None, lam0);
        let val = ref_features(&inst, &inst.val, None, 1.0);
        let raw = omega_raw(&train, &val, 1.0).expect("nonempty validation");
        let lams = vec![lam0; b];
        let h = 1e-3;
        for i in 0..b {
            let mut plus = vec![0.0; b];
            plus[i] = h;
            let mut minus = vec![0.0; b];
            minus[i] = -h;
            let fd = (ref_val_loss(&inst, &ref_last_layer_step(&inst, &plus, &lams, eta))
                - ref_val_loss(&inst, &ref_last_layer_step(&inst, &minus, &lams, eta)))
                / (2.0 * h);
            let analytic = -raw[i] * eta / b as f64;
            if analytic != 0.0 || fd != 0.0 {
                worst = worst.max((analytic - fd).abs() / analytic.abs().max(fd.abs()));
            }
            if !close(analytic, fd, 1e-3, 1e-12) {
                report.failures.push(format!("instance {n} omega {i}: analytic {analytic} fd {fd}"));
            }
        }

        let ones = vec![1.0; b];
        let probe = ref_last_layer_step(&inst, &ones, &lams, eta);
        let residuals = ref_features(&inst, &inst.train, None, 1.0);
        let val_probe = ref_features(&inst, &inst.val, Some(&probe), 1.0);
        let d = lambda_gradient(&residuals, &ones, &val_probe, eta).expect("nonempty validation");
        for i in 0..b {
            let mut plus = lams.clone();
            plus[i] += h;
            let mut minus = lams.clone();
            minus[i] -= h;
            let fd = (ref_val_loss(&inst, &ref_last_layer_step(&inst, &ones, &plus, eta))
                - ref_val_loss(&inst, &ref_last_layer_step(&inst, &ones, &minus, eta)))
                / (2.0 * h);
            if d[i].abs() <= 1e-8 {
                skipped += 1;
            } else if (d[i] > 0.0) != (fd > 0.0) {
                report.failures.push(format!("instance {n} lambda {i}: analytic {} fd {fd}", d[i]));
            }
        }
    }
    report
        .notes
        .push(format!("largest relative weight-gradient error {worst:.3e}; {skipped} gate derivatives below 1e-8"));
    report
}

/// Random last-layer features: non-negative `z`, `g = p - onehot(class)`.
pub fn random_features(r: &mut Rng, n: usize, classes: usize) -> Vec<UtilityFeatures> {
    let zdim = r.random_range(2..=4);
    (0..n)
        .map(|_| {
            let class = r.random_range(0..classes);
            let p = random_simplex(r, classes);
            UtilityFeatures {
                z: (0..zdim).map(|_| r.random_range(0.0..2.0)).collect(),
                g: p.iter().enumerate().map(|(k, v)| v - if k == class { 1.0 } else { 0.0 }).collect(),
                class,
            }
        })
        .collect()
}

pub struct SelectionInstance {
    pub feats: Vec<UtilityFeatures>,
    pub pseudo_clean: Vec<usize>,
    pub pool: Vec<usize>,
    pub m: usize,
    pub k: usize,
}

/// Up to 40 samples; pool within the pseudo-clean set within all samples; `1 <= M < K`.
pub fn random_selection_instance(seed: u64) -> SelectionInstance {
    let mut r = rng::seeded(seed, 0x6f03);
    let n = r.random_range(6..=40);
    let classes = r.random_range(2..=4);
    let feats = random_features(&mut r, n, classes);
    let pseudo_clean: Vec<usize> = (0..n).filter(|_| r.random_bool(0.85)).collect();
    let pool: Vec<usize> = pseudo_clean.iter().copied().filter(|_| r.random_bool(0.85)).collect();
    let k = r.random_range(2..=6);
    let m = r.random_range(1..k);
    SelectionInstance {
        feats,
        pseudo_clean,
        pool,
        m,
        k,
    }
}

fn ref_iota(a: &UtilityFeatures, b: &UtilityFeatures) -> f64 {
    let mut zz = 0.0;
    for (x, y) in b.z.iter().zip(&a.z) {
        zz += x * y;
    }
    let mut gg = 0.0;
    for (x, y) in b.g.iter().zip(&a.g) {
        gg += x * y;
    }
    zz * gg
}

fn ref_info(set: &[usize], pool: &[usize], feats: &[UtilityFeatures]) -> f64 {
    let mut total = 0.0;
    for &p in pool {
        if set.contains(&p) {
            continue;
        }
        let mut best: Option<f64> = None;
        for &s in set {
            if feats[s].class == feats[p].class {
                let v = ref_iota(&feats[p], &feats[s]);
                best = Some(match best {
                    Some(b) if b >= v => b,
                    _ => v,
                });
            }
        }
        total += best.unwrap_or(0.0);
    }
    total
}

fn ref_clean(set: &[usize], pool: &[usize], feats: &[UtilityFeatures]) -> f64 {
    let mut total = 0.0;
    for &p in pool {
        if set.contains(&p) {
            continue;
        }
        let mut s = 0.0;
        for &q in set {
            if feats[q].class == feats[p].class {
                let mut d = 0.0;
                for (x, y) in feats[q].z.iter().zip(&feats[p].z) {
                    d += x * y;
                }
                s += d;
            }
        }
        total += s;
    }
    total
}

/// Greedy that re-evaluates `objective(chosen + [x])` from scratch for every candidate.
pub fn naive_greedy(
    candidates: &[usize],
    pool: &[usize],
    feats: &[UtilityFeatures],
    per_class: usize,
    objective: impl Fn(&[usize], &[usize], &[UtilityFeatures]) -> f64,
) -> Vec<usize> {
    let classes = feats.first().map_or(0, |f| f.g.len());
    let mut chosen: Vec<usize> = Vec::new();
    for class in 0..classes {
        let members: Vec<usize> = candidates.iter().copied().filter(|&i| feats[i].class == class).collect();
        for _ in 0..per_class.min(members.len()) {
            let mut best: Option<(f64, usize)> = None;
            for &x in &members {
                if chosen.contains(&x) {
                    continue;
                }
                let mut trial = chosen.clone();
                trial.push(x);
                let v = objective(&trial, pool, feats);
                let better = match best {
                    None => true,
                    Some((bv, bi)) => v > bv || (v == bv && x < bi),
                };
                if better {
                    best = Some((v, x));
                }
            }
            chosen.push(best.expect("a member remains").1);
        }
    }
    chosen
}

pub fn naive_lower(pool: &[usize], feats: &[UtilityFeatures], k: usize) -> Vec<usize> {
    naive_greedy(pool, pool, feats, k, ref_info)
}

pub fn naive_upper(lower: &[usize], pool: &[usize], feats: &[UtilityFeatures], m: usize) -> Vec<usize> {
    naive_greedy(lower, pool, feats, m, ref_clean)
}

/// Incremental greedy against [`naive_greedy`], plus the greedy/optimal ratio
/// of the informativeness objective where exhaustive search is affordable.
pub fn greedy_battery(instances: usize, seed: u64) -> BatteryReport {
    let mut report = BatteryReport::new("incremental greedy vs naive greedy");
    let mut ratios = Vec::new();
    for n in 0..instances {
        let inst = random_selection_instance(rng::derive(seed, n as u64));
        report.cases += 1;
        let lower = greedy_lower(&inst.pool, &inst.feats, inst.k).selected;
        let naive = naive_lower(&inst.pool, &inst.feats, inst.k);
        if lower != naive {
            report.failures.push(format!("instance {n}: lower {lower:?} vs naive {naive:?}"));
            continue;
        }
        let upper = greedy_upper(&lower, &inst.pool, &inst.feats, inst.m, inst.k, CleanSimilarity::Dot)
            .expect("M < K")
            .selected;
        let naive_up = naive_upper(&lower, &inst.pool, &inst.feats, inst.m);
        if upper != naive_up {
            report.failures.push(format!("instance {n}: upper {upper:?} vs naive {naive_up:?}"));
        }
        match brute_force_oracle(&inst.pool, &inst.feats, Objective::Info, inst.k) {
            Ok((_, opt)) => {
                let got = info_objective(&lower, &inst.pool, &inst.feats);
                if got > opt + 1e-9 * opt.abs().max(1.0) {
                    report.failures.push(format!("instance {n}: greedy {got} above optimum {opt}"));
                }
                if opt > 0.0 {
                    ratios.push(got / opt);
                }
            }
            Err(Error::SearchTooLarge { .. }) => {}
            Err(e) => report.failures.push(format!("instance {n}: {e}")),
        }
    }
    if ratios.is_empty() {
        report.notes.push("no instance small enough for exhaustive search".into());
    } else {
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        report.notes.push(format!(
            "greedy/optimal info ratio over {} instances: min {min:.4}, mean {mean:.4}",
            ratios.len()
        ));
    }
    report
}

/// Subset chain, per-class counts and training/validation partition of `max_utility`.
pub fn structural_battery(instances: usize, seed: u64) -> BatteryReport {
    let mut report = BatteryReport::new("selection structure");
    for n in 0..instances {
        let inst = random_selection_instance(rng::derive(seed, n as u64));
        report.cases += 1;
        match max_utility(&inst.pool, &inst.feats, inst.m, inst.k, CleanSimilarity::Dot) {
            Ok(result) => {
                if let Err(msg) = check_selection(&result, &inst.pseudo_clean, &inst.pool, &inst.feats, inst.m, inst.k) {
                    report.failures.push(format!("instance {n}: {msg}"));
                }
            }
            Err(e) => report.failures.push(format!("instance {n}: {e}")),
        }
    }
    report
}

/// Every battery at the sizes used by `oracle-check`.
pub fn run_all() -> Vec<BatteryReport> {
    vec![
        backward_battery(0..20),
        meta_gradient_battery(25, 0),
        greedy_battery(100, 0),
        structural_battery(100, 1),
    ]
}
