use super::objectives::{clean_objective, info_objective, CleanSimilarity, UtilityFeatures};
use crate::error::{Error, Result};

/// Largest number of class-balanced subsets the exhaustive search will visit.
pub const SEARCH_GUARD: u128 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Info,
    Clean(CleanSimilarity),
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Exact optimum over every subset of `pool` with `min(per_class, available)`
/// samples of each class present in the pool.
///
/// Returns the first maximiser in lexicographic enumeration order (indices
/// ascending) and its objective value.
pub fn brute_force_oracle(
    pool: &[usize],
    feats: &[UtilityFeatures],
    objective: Objective,
    per_class: usize,
) -> Result<(Vec<usize>, f64)> {
    let mut classes: Vec<usize> = pool.iter().map(|&i| feats[i].class).collect();
    classes.sort_unstable();
    classes.dedup();
    let groups: Vec<(Vec<usize>, usize)> = classes
        .iter()
        .map(|&c| {
            let mut members: Vec<usize> = pool.iter().copied().filter(|&i| feats[i].class == c).collect();
            members.sort_unstable();
            let take = per_class.min(members.len());
            (members, take)
        })
        .collect();
    let feasible = groups
        .iter()
        .fold(1u128, |acc, (m, t)| acc.saturating_mul(binomial(m.len(), *t)));
    if feasible > SEARCH_GUARD {
        return Err(Error::SearchTooLarge {
            feasible,
            guard: SEARCH_GUARD,
        });
    }
    let per_group: Vec<Vec<Vec<usize>>> = groups.iter().map(|(m, t)| combinations(m, *t)).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut odometer = vec![0usize; per_group.len()];
    loop {
        let mut subset: Vec<usize> = odometer
            .iter()
            .zip(&per_group)
            .flat_map(|(&k, combos)| combos[k].iter().copied())
            .collect();
        subset.sort_unstable();
        let value = match objective {
            Objective::Info => info_objective(&subset, pool, feats),
            Objective::Clean(kind) => clean_objective(&subset, pool, feats, kind),
        };
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((subset, value));
        }
        // advance the mixed-radix counter, last group fastest
        let mut g = per_group.len();
        loop {
            if g == 0 {
                return Ok(best.unwrap_or((Vec::new(), 0.0)));
            }
            g -= 1;
            odometer[g] += 1;
            if odometer[g] < per_group[g].len() {
                break;
            }
            odometer[g] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(z: f64, g: f64, class: usize) -> UtilityFeatures {
        UtilityFeatures {
            z: vec![z],
            g: vec![g, -g],
            class,
        }
    }

    #[test]
    fn four_samples_two_classes() {
        let feats = vec![feat(1.0, 0.5, 0), feat(2.0, 0.1, 0), feat(0.5, 1.0, 1), feat(1.5, 0.2, 1)];
        let pool = [0, 1, 2, 3];
        let (best, value) = brute_force_oracle(&pool, &feats, Objective::Info, 1).unwrap();
        // hand enumeration of the four subsets {a, b} with a in class 0, b in class 1
        let mut manual = Vec::new();
        for a in [0, 1] {
            for b in [2, 3] {
                manual.push((vec![a, b], info_objective(&[a, b], &pool, &feats)));
            }
        }
        let top = manual.iter().cloned().fold(None::<(Vec<usize>, f64)>, |acc, x| match acc {
            Some(a) if a.1 >= x.1 => Some(a),
            _ => Some(x),
        });
        assert_eq!(Some((best, value)), top);
    }

    #[test]
    fn full_classes_leave_one_subset() {
        let feats = vec![feat(1.0, 0.5, 0), feat(2.0, 0.1, 0), feat(0.5, 1.0, 1)];
        let (best, value) = brute_force_oracle(&[0, 1, 2], &feats, Objective::Clean(CleanSimilarity::Dot), 2).unwrap();
        assert_eq!(best, vec![0, 1, 2]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn guard_refuses_large_searches() {
        let feats: Vec<UtilityFeatures> = (0..40).map(|i| feat(i as f64, 0.1, 0)).collect();
        let pool: Vec<usize> = (0..40).collect();
        assert!(matches!(
            brute_force_oracle(&pool, &feats, Objective::Info, 10),
            Err(Error::SearchTooLarge { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(40, 10), 847_660_528);
        assert_eq!(combinations(&[1, 2, 3, 4], 2).len(), 6);
    }
}
