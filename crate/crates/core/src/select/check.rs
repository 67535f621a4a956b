use super::greedy::SelectionResult;
use super::objectives::{membership, UtilityFeatures};

/// Verifies the structural contract of a selection.
///
/// Checks the subset chain `D^(v) ⊆ lower ⊆ pool ⊆ D^(c)`, per-class counts
/// `min(M, available in lower)` and `min(K, available in pool)`, and that the
/// training set is exactly the complement of the validation set in `0..n`.
pub fn check_selection(
    result: &SelectionResult,
    pseudo_clean: &[usize],
    pool: &[usize],
    feats: &[UtilityFeatures],
    m: usize,
    k: usize,
) -> Result<(), String> {
    let n = feats.len();
    let in_clean = membership(pseudo_clean, n);
    let in_pool = membership(pool, n);
    let in_lower = membership(&result.lower_set, n);
    let in_val = membership(&result.validation_set, n);
    if let Some(i) = pool.iter().find(|&&i| !in_clean[i]) {
        return Err(format!("pool member {i} is not pseudo-clean"));
    }
    if let Some(i) = result.lower_set.iter().find(|&&i| !in_pool[i]) {
        return Err(format!("lower-set member {i} is not in the pool"));
    }
    if let Some(i) = result.validation_set.iter().find(|&&i| !in_lower[i]) {
        return Err(format!("validation member {i} is not in the lower set"));
    }
    for (name, set) in [("lower", &result.lower_set), ("validation", &result.validation_set)] {
        let mut sorted = set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != set.len() {
            return Err(format!("{name} set has duplicates"));
        }
    }
    let classes = feats.first().map_or(0, |f| f.g.len());
    for c in 0..classes {
        let avail_pool = pool.iter().filter(|&&i| feats[i].class == c).count();
        let avail_lower = result.lower_set.iter().filter(|&&i| feats[i].class == c).count();
        let in_v = result.validation_set.iter().filter(|&&i| feats[i].class == c).count();
        if avail_lower != k.min(avail_pool) {
            return Err(format!("class {c}: lower set has {avail_lower}, expected {}", k.min(avail_pool)));
        }
        if in_v != m.min(avail_lower) {
            return Err(format!("class {c}: validation set has {in_v}, expected {}", m.min(avail_lower)));
        }
    }
    let mut covered = vec![false; n];
    for &i in &result.training_set {
        if i >= n {
            return Err(format!("training index {i} out of range"));
        }
        if in_val[i] {
            return Err(format!("sample {i} is in both training and validation sets"));
        }
        if covered[i] {
            return Err(format!("training set repeats {i}"));
        }
        covered[i] = true;
    }
    if let Some(i) = (0..n).find(|&i| !covered[i] && !in_val[i]) {
        return Err(format!("sample {i} is in neither set"));
    }
    Ok(())
}
