//! Post-stratification weights that match a sample's cell distribution to
//! target population shares.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Tolerance on the sum of target shares.
pub const TARGET_SUM_TOL: f64 = 1e-9;

/// Per-cell weight `target_share / sample_share`.
///
/// Every occupied sample cell needs a positive target and every positive
/// target needs sample mass, otherwise the weighted distribution cannot
/// equal the target.
pub fn raking_weights<K: Ord + Clone + Debug>(
    sample_counts: &BTreeMap<K, u64>,
    target_shares: &BTreeMap<K, f64>,
) -> Result<BTreeMap<K, f64>> {
    let total_target: f64 = target_shares.values().sum();
    if (total_target - 1.0).abs() > TARGET_SUM_TOL {
        return Err(Error::Data(format!("target shares sum to {total_target}, expected 1")));
    }
    if let Some((k, v)) = target_shares.iter().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Data(format!("negative target share {v} for cell {k:?}")));
    }
    let n: u64 = sample_counts.values().sum();
    if n == 0 {
        return Err(Error::Data("empty sample".into()));
    }

    let no_target: Vec<String> = sample_counts
        .iter()
        .filter(|(k, &c)| c > 0 && target_shares.get(k).copied().unwrap_or(0.0) <= 0.0)
        .map(|(k, _)| format!("{k:?}"))
        .collect();
    if !no_target.is_empty() {
        return Err(Error::Data(format!(
            "occupied sample cells without target share: {}",
            no_target.join(", ")
        )));
    }
    let no_sample: Vec<String> = target_shares
        .iter()
        .filter(|(k, &t)| t > 0.0 && sample_counts.get(k).copied().unwrap_or(0) == 0)
        .map(|(k, _)| format!("{k:?}"))
        .collect();
    if !no_sample.is_empty() {
        return Err(Error::Data(format!(
            "target cells without sample households: {}",
            no_sample.join(", ")
        )));
    }

    Ok(sample_counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k.clone(), target_shares[k] / (c as f64 / n as f64)))
        .collect())
}

/// Weighted cell shares `count * weight / n`.
pub fn weighted_distribution<K: Ord + Clone>(
    sample_counts: &BTreeMap<K, u64>,
    weights: &BTreeMap<K, f64>,
) -> BTreeMap<K, f64> {
    let n: u64 = sample_counts.values().sum();
    sample_counts
        .iter()
        .filter_map(|(k, &c)| weights.get(k).map(|w| (k.clone(), c as f64 * w / n as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_sample_gets_unit_weights() {
        let counts = BTreeMap::from([(1, 25u64), (2, 75)]);
        let target = BTreeMap::from([(1, 0.25), (2, 0.75)]);
        let w = raking_weights(&counts, &target).unwrap();
        assert_eq!(w.values().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
    }

    #[test]
    fn ratio_arithmetic() {
        let counts = BTreeMap::from([("a", 75u64), ("b", 25)]);
        let target = BTreeMap::from([("a", 0.5), ("b", 0.5)]);
        let w = raking_weights(&counts, &target).unwrap();
        assert!((w["a"] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(w["b"], 2.0);
    }

    #[test]
    fn missing_target_lists_cells() {
        let counts = BTreeMap::from([((1, 1), 3u64), ((1, 2), 4), ((2, 2), 1)]);
        let target = BTreeMap::from([((1, 1), 1.0), ((1, 2), 0.0)]);
        match raking_weights(&counts, &target).unwrap_err() {
            Error::Data(msg) => assert!(msg.contains("(1, 2)") && msg.contains("(2, 2)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn target_must_sum_to_one() {
        let counts = BTreeMap::from([(1, 1u64)]);
        assert!(raking_weights(&counts, &BTreeMap::from([(1, 0.9)])).is_err());
    }
}
