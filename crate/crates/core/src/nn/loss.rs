//! Softmax and the two divergences used by the training objective.

/// Lower clamp applied to probabilities before taking a logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-sum_k target(k) * ln pred(k)`, with `pred` clamped at [`LOG_CLAMP`].
pub fn cross_entropy(target: &[f64], pred: &[f64]) -> f64 {
    debug_assert_eq!(target.len(), pred.len());
    let ce: f64 = target
        .iter()
        .zip(pred)
        .filter(|(&t, _)| t != 0.0)
        .map(|(&t, &p)| -t * p.max(LOG_CLAMP).ln())
        .sum();
    ce.max(0.0)
}

/// `sum_k p(k) * ln(p(k) / q(k))`, with `q` clamped at [`LOG_CLAMP`].
///
/// Terms with `p(k) = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pk, _)| pk > 0.0)
        .map(|(&pk, &qk)| pk * (pk.ln() - qk.max(LOG_CLAMP).ln()))
        .sum();
    kl.max(0.0)
}

/// Gradient of `kl_divergence(p, q)` with respect to the logits that produced `p`.
///
/// With `p = softmax(a)`: `dKL/da_k = p_k (s_k - sum_m p_m s_m)` where
/// `s_k = ln p_k - ln q_k`.
pub fn kl_grad_wrt_p_logits(p: &[f64], q: &[f64]) -> Vec<f64> {
    let s: Vec<f64> = p
        .iter()
        .zip(q)
        .map(|(&pk, &qk)| {
            if pk > 0.0 {
                pk.ln() - qk.max(LOG_CLAMP).ln()
            } else {
                0.0
            }
        })
        .collect();
    let mean: f64 = p.iter().zip(&s).map(|(pk, sk)| pk * sk).sum();
    p.iter().zip(&s).map(|(pk, sk)| pk * (sk - mean)).collect()
}

/// Gradient of `kl_divergence(p, q)` with respect to the logits that produced `q`.
pub fn kl_grad_wrt_q_logits(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mass: f64 = p.iter().sum();
    q.iter().zip(p).map(|(qk, pk)| qk * mass - pk).collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

pub fn one_hot(class: usize, num_classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; num_classes];
    v[class] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ce_identity_is_zero() {
        let t = one_hot(2, 4);
        assert!(cross_entropy(&t, &t) < 1e-12);
    }

    #[test]
    fn ce_uniform_ten_classes() {
        let t = one_hot(3, 10);
        let p = vec![0.1; 10];
        assert!((cross_entropy(&t, &p) - 10f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&t, &p) - 2.302585).abs() < 1e-6);
    }

    #[test]
    fn ce_soft_target() {
        let v = cross_entropy(&[0.3, 0.7], &[0.5, 0.5]);
        assert!((v - 2f64.ln()).abs() < 1e-12);
        assert!((v - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn ce_clamps_zero_prediction() {
        let v = cross_entropy(&[1.0, 0.0], &[0.0, 1.0]);
        assert!((v + LOG_CLAMP.ln()).abs() < 1e-9);
        assert!(v.is_finite());
    }

    #[test]
    fn kl_cases() {
        let p = [0.2, 0.5, 0.3];
        assert!(kl_divergence(&p, &p).abs() < 1e-15);
        let v = kl_divergence(&one_hot(0, 4), &[0.25; 4]);
        assert!((v - 4f64.ln()).abs() < 1e-12);
        assert!((v - 1.386294).abs() < 1e-6);
        // direct evaluation: 0.8 ln 1.6 + 0.2 ln 0.4
        let direct = 0.8 * (0.8f64 / 0.5).ln() + 0.2 * (0.2f64 / 0.5).ln();
        let v = kl_divergence(&[0.8, 0.2], &[0.5, 0.5]);
        assert!((v - direct).abs() < 1e-15);
        assert!((v - 0.192745).abs() < 1e-6);
    }

    #[test]
    fn kl_gradients_match_finite_differences() {
        let a = [0.3, -1.2, 0.8];
        let b = [-0.5, 0.4, 0.1];
        let h = 1e-6;
        let p = softmax(&a);
        let q = softmax(&b);
        let gp = kl_grad_wrt_p_logits(&p, &q);
        let gq = kl_grad_wrt_q_logits(&p, &q);
        for k in 0..3 {
            let mut ap = a;
            let mut am = a;
            ap[k] += h;
            am[k] -= h;
            let fd = (kl_divergence(&softmax(&ap), &q) - kl_divergence(&softmax(&am), &q)) / (2.0 * h);
            assert!((fd - gp[k]).abs() < 1e-8, "p-side {k}: {fd} vs {}", gp[k]);
            let mut bp = b;
            let mut bm = b;
            bp[k] += h;
            bm[k] -= h;
            let fd = (kl_divergence(&p, &softmax(&bp)) - kl_divergence(&p, &softmax(&bm))) / (2.0 * h);
            assert!((fd - gq[k]).abs() < 1e-8, "q-side {k}: {fd} vs {}", gq[k]);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
    }

    #[test]
    fn softmax_is_shift_stable() {
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }
}
