use serde::{Deserialize, Serialize};

use super::objectives::{clean_objective, info_objective, iota, membership, similarity, CleanSimilarity, UtilityFeatures};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Candidates,
    Lower,
    Upper,
}

/// A class that could not supply the requested number of samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionWarning {
    pub stage: Stage,
    pub class: usize,
    pub available: usize,
    pub requested: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    /// Chosen sample indices in the order they were picked.
    pub selected: Vec<usize>,
    pub warnings: Vec<SelectionWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Informative candidates, `K` per class (selection order).
    pub lower_set: Vec<usize>,
    /// Final validation set, `M` per class (selection order).
    pub validation_set: Vec<usize>,
    /// Every dataset index not in the validation set, ascending.
    pub training_set: Vec<usize>,
    pub lower_objective: f64,
    pub upper_objective: f64,
    pub warnings: Vec<SelectionWarning>,
}

fn num_classes(feats: &[UtilityFeatures]) -> usize {
    feats.first().map_or(0, |f| f.g.len())
}

fn members_of(set: &[usize], feats: &[UtilityFeatures], class: usize) -> Vec<usize> {
    set.iter().copied().filter(|&i| feats[i].class == class).collect()
}

/// Strictly better score, or an equal score at a lower sample index.
fn beats(score: f64, index: usize, incumbent: Option<(f64, usize)>) -> bool {
    match incumbent {
        None => true,
        Some((best, best_idx)) => score > best || (score == best && index < best_idx),
    }
}

/// Lower level: per class (ascending), `K` greedy picks maximising [`info_objective`].
///
/// Keeps the running best same-class `iota` of every pool sample against the
/// chosen set, so one candidate evaluation is a single pass over the pool.
/// Scores are accumulated in exactly the order `info_objective` uses, which
/// makes the picks identical to re-evaluating the objective from scratch.
pub fn greedy_lower(pool: &[usize], feats: &[UtilityFeatures], k: usize) -> GreedyOutcome {
    let n = feats.len();
    let mut chosen = vec![false; n];
    let mut best: Vec<Option<f64>> = vec![None; n];
    let mut selected = Vec::new();
    let mut warnings = Vec::new();
    let mut position = vec![usize::MAX; n];
    for class in 0..num_classes(feats) {
        let members = members_of(pool, feats, class);
        let take = k.min(members.len());
        if take < k {
            warnings.push(SelectionWarning {
                stage: Stage::Lower,
                class,
                available: members.len(),
                requested: k,
            });
        }
        if take == 0 {
            continue;
        }
        for (pos, &i) in members.iter().enumerate() {
            position[i] = pos;
        }
        // cache[p][x] = iota(pool sample p, candidate x)
        let cache: Vec<Vec<f64>> = members
            .iter()
            .map(|&p| members.iter().map(|&x| iota(&feats[p], &feats[x])).collect())
            .collect();
        for _ in 0..take {
            let mut winner: Option<(f64, usize)> = None;
            for (xpos, &x) in members.iter().enumerate() {
                if chosen[x] {
                    continue;
                }
                let mut total = 0.0;
                for &p in pool {
                    if chosen[p] || p == x {
                        continue;
                    }
                    let value = if feats[p].class == class {
                        let v = cache[position[p]][xpos];
                        Some(best[p].map_or(v, |b| b.max(v)))
                    } else {
                        best[p]
                    };
                    total += value.unwrap_or(0.0);
                }
                if beats(total, x, winner) {
                    winner = Some((total, x));
                }
            }
            let (_, x) = winner.expect("an unchosen member remains");
            chosen[x] = true;
            selected.push(x);
            let xpos = position[x];
            for &p in &members {
                let v = cache[position[p]][xpos];
                best[p] = Some(best[p].map_or(v, |b| b.max(v)));
            }
        }
    }
    GreedyOutcome { selected, warnings }
}

/// Upper level: per class, `M` greedy picks from `lower_set` maximising
/// [`clean_objective`] against `pool`.
pub fn greedy_upper(
    lower_set: &[usize],
    pool: &[usize],
    feats: &[UtilityFeatures],
    m: usize,
    k: usize,
    kind: CleanSimilarity,
) -> Result<GreedyOutcome> {
    if m == 0 {
        return Err(Error::config("M must be at least 1"));
    }
    if m >= k {
        return Err(Error::config(format!("M ({m}) must be smaller than K ({k})")));
    }
    let n = feats.len();
    let mut chosen = vec![false; n];
    let mut acc = vec![0.0; n];
    let mut selected = Vec::new();
    let mut warnings = Vec::new();
    for class in 0..num_classes(feats) {
        let members = members_of(lower_set, feats, class);
        let take = m.min(members.len());
        if take < m {
            warnings.push(SelectionWarning {
                stage: Stage::Upper,
                class,
                available: members.len(),
                requested: m,
            });
        }
        if take == 0 {
            continue;
        }
        let same_class: Vec<usize> = members_of(pool, feats, class);
        let mut position = vec![usize::MAX; n];
        for (pos, &p) in same_class.iter().enumerate() {
            position[p] = pos;
        }
        // cache[x][p] = similarity(candidate x, pool sample p)
        let cache: Vec<Vec<f64>> = members
            .iter()
            .map(|&x| same_class.iter().map(|&p| similarity(kind, &feats[x], &feats[p])).collect())
            .collect();
        for _ in 0..take {
            let mut winner: Option<(f64, usize, usize)> = None;
            for (xpos, &x) in members.iter().enumerate() {
                if chosen[x] {
                    continue;
                }
                let mut total = 0.0;
                for &p in pool {
                    if chosen[p] || p == x {
                        continue;
                    }
                    total += if feats[p].class == class {
                        acc[p] + cache[xpos][position[p]]
                    } else {
                        acc[p]
                    };
                }
                if beats(total, x, winner.map(|(s, i, _)| (s, i))) {
                    winner = Some((total, x, xpos));
                }
            }
            let (_, x, xpos) = winner.expect("an unchosen member remains");
            chosen[x] = true;
            selected.push(x);
            for &p in &same_class {
                acc[p] += cache[xpos][position[p]];
            }
        }
    }
    Ok(GreedyOutcome { selected, warnings })
}

/// Per class, `M` greedy picks maximising the summed meta-weight
/// `sum_{i in pool \ S} sum_{j in S} iota(i, j)` (all classes paired).
pub fn greedy_weight_sum(pool: &[usize], feats: &[UtilityFeatures], m: usize) -> GreedyOutcome {
    let n = feats.len();
    let mut chosen = vec![false; n];
    let mut selected: Vec<usize> = Vec::new();
    let mut warnings = Vec::new();
    for class in 0..num_classes(feats) {
        let members = members_of(pool, feats, class);
        let take = m.min(members.len());
        if take < m {
            warnings.push(SelectionWarning {
                stage: Stage::Upper,
                class,
                available: members.len(),
                requested: m,
            });
        }
        for _ in 0..take {
            let mut winner: Option<(f64, usize)> = None;
            for &x in &members {
                if chosen[x] {
                    continue;
                }
                let gained: f64 = pool
                    .iter()
                    .filter(|&&i| !chosen[i] && i != x)
                    .map(|&i| iota(&feats[i], &feats[x]))
                    .sum();
                let lost: f64 = selected.iter().map(|&j| iota(&feats[x], &feats[j])).sum();
                let gain = gained - lost;
                if beats(gain, x, winner) {
                    winner = Some((gain, x));
                }
            }
            let (_, x) = winner.expect("an unchosen member remains");
            chosen[x] = true;
            selected.push(x);
        }
    }
    GreedyOutcome { selected, warnings }
}

/// Both selection levels plus the induced training set `D \ D^(v)`.
pub fn max_utility(
    pool: &[usize],
    feats: &[UtilityFeatures],
    m: usize,
    k: usize,
    kind: CleanSimilarity,
) -> Result<SelectionResult> {
    if k == 0 {
        return Err(Error::config("K must be at least 1"));
    }
    if m == 0 || m >= k {
        return Err(Error::config(format!("M ({m}) must satisfy 1 <= M < K ({k})")));
    }
    let lower = greedy_lower(pool, feats, k);
    let upper = greedy_upper(&lower.selected, pool, feats, m, k, kind)?;
    let mut warnings = lower.warnings;
    warnings.extend(upper.warnings);
    let in_val = membership(&upper.selected, feats.len());
    let training_set = (0..feats.len()).filter(|&i| !in_val[i]).collect();
    Ok(SelectionResult {
        lower_objective: info_objective(&lower.selected, pool, feats),
        upper_objective: clean_objective(&upper.selected, pool, feats, kind),
        lower_set: lower.selected,
        validation_set: upper.selected,
        training_set,
        warnings,
    })
}
