use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::nn::argmax;
use crate::rng;

/// Per-sample meta state.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleState {
    /// Meta weight from the most recent batch the sample took part in.
    pub omega: f64,
    pub lambda: f64,
    /// Moving-average robust label.
    pub robust_label: Vec<f64>,
    pred_window: VecDeque<Vec<f64>>,
    window_len: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovingAvgUpdate {
    Updated,
    /// Fewer than `E` predictions recorded; the label was left alone.
    WindowUnderfull,
}

impl SampleState {
    pub fn new(initial_label: Vec<f64>, window_len: usize) -> Self {
        SampleState {
            omega: 0.0,
            lambda: 1.0,
            robust_label: initial_label,
            pred_window: VecDeque::with_capacity(window_len),
            window_len: window_len.max(1),
            loss: 0.0,
        }
    }

    /// Records a prediction, evicting the oldest once the window holds `E` entries.
    pub fn push_prediction(&mut self, probs: Vec<f64>) {
        if self.pred_window.len() == self.window_len {
            self.pred_window.pop_front();
        }
        self.pred_window.push_back(probs);
    }

    pub fn window(&self) -> &VecDeque<Vec<f64>> {
        &self.pred_window
    }

    pub fn window_is_full(&self) -> bool {
        self.pred_window.len() == self.window_len
    }
}

/// `robust <- kappa * robust + (1 - kappa) * mean(window)`.
pub fn update_moving_avg(state: &mut SampleState, kappa: f64) -> MovingAvgUpdate {
    if !state.window_is_full() {
        return MovingAvgUpdate::WindowUnderfull;
    }
    let e = state.pred_window.len() as f64;
    let mut mean = vec![0.0; state.robust_label.len()];
    for p in &state.pred_window {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / e;
        }
    }
    for (r, m) in state.robust_label.iter_mut().zip(&mean) {
        *r = kappa * *r + (1.0 - kappa) * m;
    }
    MovingAvgUpdate::Updated
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSubset {
    /// Selected sample indices, ascending.
    pub indices: Vec<usize>,
    /// Classes that had no label-consistent pseudo-clean sample.
    pub empty_classes: Vec<usize>,
}

/// Up to `n` random pseudo-clean samples per class whose observed label agrees
/// with the argmax of their robust label.
pub fn build_candidate_subset(
    clean_idx: &[usize],
    observed_labels: &[usize],
    robust_labels: &[Vec<f64>],
    num_classes: usize,
    n: usize,
    seed: u64,
) -> CandidateSubset {
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for &i in clean_idx {
        if observed_labels[i] == argmax(&robust_labels[i]) {
            per_class[observed_labels[i]].push(i);
        }
    }
    let mut indices = Vec::new();
    let mut empty_classes = Vec::new();
    for (c, mut members) in per_class.into_iter().enumerate() {
        if members.is_empty() {
            empty_classes.push(c);
            continue;
        }
        members.sort_unstable();
        let mut rng = rng::seeded(seed, 0x636e64 + c as u64);
        members.shuffle(&mut rng);
        indices.extend_from_slice(&members[..n.min(members.len())]);
    }
    indices.sort_unstable();
    CandidateSubset {
        indices,
        empty_classes,
    }
}
