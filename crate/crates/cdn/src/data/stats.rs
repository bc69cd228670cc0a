//! Per-item frequency statistics, imbalance factor, and head/tail slicing.

use crate::data::InteractionLog;
use crate::error::{CdnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Slice {
    Head,
    Tail,
}

/// Frequency profile of a catalog under one interaction log (normally the
/// training split).
#[derive(Debug, Clone)]
pub struct CatalogStats {
    /// Positive-interaction count per item index.
    pub freq: Vec<u64>,
    /// Dense rank by descending frequency, ties broken by ascending item
    /// index; `rank[i] == 0` is the most frequent item.
    pub rank: Vec<u32>,
    /// Head/tail tag per item; all-Tail until `split_head_tail` runs.
    pub slice: Vec<Slice>,
    /// max freq / min positive freq. Items with zero interactions are kept in
    /// the vocab but excluded from the denominator.
    pub imbalance_factor: f64,
    /// The fraction used by `split_head_tail`, if it ran.
    pub head_fraction: Option<f64>,
}

impl CatalogStats {
    pub fn n_items(&self) -> usize {
        self.freq.len()
    }

    pub fn n_head(&self) -> usize {
        self.slice.iter().filter(|s| **s == Slice::Head).count()
    }

    pub fn n_tail(&self) -> usize {
        self.n_items() - self.n_head()
    }

    pub fn is_head(&self, item: u32) -> bool {
        self.slice[item as usize] == Slice::Head
    }

    /// Highest frequency among tail items. Errors when no tail item exists.
    pub fn max_tail_freq(&self) -> Result<u64> {
        self.freq
            .iter()
            .zip(&self.slice)
            .filter(|(_, s)| **s == Slice::Tail)
            .map(|(&f, _)| f)
            .max()
            .ok_or_else(|| CdnError::Data("no tail items in catalog".into()))
    }
}

/// Count positive feedback per item and derive rank and imbalance factor.
pub fn build_stats(log: &InteractionLog) -> Result<CatalogStats> {
    if log.is_empty() {
        return Err(CdnError::Data("cannot build stats from an empty log".into()));
    }
    let n = log.n_items();
    let mut freq = vec![0u64; n];
    for ev in &log.interactions {
        if ev.label == 1 {
            freq[ev.item as usize] += 1;
        }
    }

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(freq[i as usize]), i));
    let mut rank = vec![0u32; n];
    for (pos, &item) in order.iter().enumerate() {
        rank[item as usize] = pos as u32;
    }

    let max = freq.iter().copied().max().unwrap_or(0);
    let min_positive = freq.iter().copied().filter(|&f| f > 0).min().unwrap_or(0);
    if min_positive == 0 {
        return Err(CdnError::Data("log has no positive interactions".into()));
    }
    let imbalance_factor = max as f64 / min_positive as f64;

    Ok(CatalogStats {
        freq,
        rank,
        slice: vec![Slice::Tail; n],
        imbalance_factor,
        head_fraction: None,
    })
}

/// Tag the `ceil(head_fraction * n_items)` most frequent items as Head.
pub fn split_head_tail(stats: &CatalogStats, head_fraction: f64) -> Result<CatalogStats> {
    if !(head_fraction > 0.0 && head_fraction < 1.0) {
        return Err(CdnError::Config(format!(
            "head_fraction must be in (0, 1), got {head_fraction}"
        )));
    }
    let n = stats.n_items();
    let n_head = (head_fraction * n as f64).ceil() as usize;
    let mut out = stats.clone();
    for item in 0..n {
        out.slice[item] = if (out.rank[item] as usize) < n_head {
            Slice::Head
        } else {
            Slice::Tail
        };
    }
    out.head_fraction = Some(head_fraction);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::test_support::log_from_item_freqs;

    #[test]
    fn imbalance_factor_is_max_over_min_positive() {
        let log = log_from_item_freqs(&[10, 2, 1]);
        let stats = build_stats(&log).unwrap();
        assert_eq!(stats.imbalance_factor, 10.0);
    }

    #[test]
    fn equal_frequencies_give_if_one() {
        let log = log_from_item_freqs(&[3, 3, 3]);
        let stats = build_stats(&log).unwrap();
        assert_eq!(stats.imbalance_factor, 1.0);
    }

    #[test]
    fn zero_frequency_items_excluded_from_denominator() {
        let log = log_from_item_freqs(&[4, 2, 0]);
        let stats = build_stats(&log).unwrap();
        assert_eq!(stats.imbalance_factor, 2.0);
    }

    #[test]
    fn rank_breaks_ties_by_ascending_index() {
        let log = log_from_item_freqs(&[2, 5, 2]);
        let stats = build_stats(&log).unwrap();
        assert_eq!(stats.rank, vec![1, 0, 2]);
    }

    #[test]
    fn head_split_takes_most_frequent() {
        let freqs: Vec<u64> = (1..=10).rev().collect(); // item 0 most frequent
        let log = log_from_item_freqs(&freqs);
        let stats = build_stats(&log).unwrap();
        let split = split_head_tail(&stats, 0.2).unwrap();
        assert_eq!(split.n_head(), 2);
        assert!(split.is_head(0) && split.is_head(1));
    }

    #[test]
    fn two_items_half_fraction_is_one_each() {
        let log = log_from_item_freqs(&[5, 1]);
        let stats = build_stats(&log).unwrap();
        let split = split_head_tail(&stats, 0.5).unwrap();
        assert_eq!(split.n_head(), 1);
        assert_eq!(split.n_tail(), 1);
    }

    #[test]
    fn head_count_uses_ceiling() {
        // ceil(0.2 * 3706) = 742
        assert_eq!((0.2f64 * 3706.0).ceil() as usize, 742);
        let freqs: Vec<u64> = (0..3706).map(|i| 3706 - i as u64).collect();
        let log = log_from_item_freqs(&freqs);
        let stats = build_stats(&log).unwrap();
        let split = split_head_tail(&stats, 0.2).unwrap();
        assert_eq!(split.n_head(), 742);
    }

    #[test]
    fn fraction_bounds_rejected() {
        let log = log_from_item_freqs(&[1, 1]);
        let stats = build_stats(&log).unwrap();
        assert!(split_head_tail(&stats, 0.0).is_err());
        assert!(split_head_tail(&stats, 1.0).is_err());
        assert!(split_head_tail(&stats, 1.5).is_err());
    }
}
