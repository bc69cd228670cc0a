//! Dataset ingestion, long-tail statistics, splitting, and the rebalanced
//! regularizer distribution.

mod bookcrossing;
mod cache;
mod movielens;
mod split;
mod stats;
mod synth;
mod types;

pub use bookcrossing::{load_bookcrossing, JoinReport};
pub use cache::{
    config_fingerprint, read_cache, read_manifest, write_cache, CacheManifest, FieldInfo,
    PreparedDataset, CACHE_FORMAT_VERSION,
};
pub use movielens::load_movielens;
pub use split::{build_regularizer_distribution, chrono_split, SplitLog};
pub use stats::{build_stats, split_head_tail, CatalogStats, Slice};
pub use synth::synth_zipf;
pub use types::{Catalog, FeatureField, Interaction, InteractionLog, Vocab};


#[cfg(test)]
mod property_tests {
    use super::test_support::log_from_events;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// train + valid + test reproduce the input multiset exactly.
        #[test]
        fn chrono_split_partitions(events in proptest::collection::vec((0u32..6, 0u32..8, 0i64..100), 1..120)) {
            let log = log_from_events(6, 8, &events);
            let split = chrono_split(&log, (0.8, 0.1, 0.1)).unwrap();
            let mut combined: Vec<_> = split.train.interactions.iter()
                .chain(&split.valid.interactions)
                .chain(&split.test.interactions)
                .map(|ev| (ev.user, ev.item, ev.timestamp))
                .collect();
            let mut original: Vec<_> = log.interactions.iter().map(|ev| (ev.user, ev.item, ev.timestamp)).collect();
            combined.sort_unstable();
            original.sort_unstable();
            prop_assert_eq!(combined, original);
        }

        /// After rebalancing, no head item is more frequent than the most
        /// popular tail item.
        #[test]
        fn regularizer_cap_holds(events in proptest::collection::vec((0u32..6, 0u32..8, 0i64..100), 1..200), seed in 0u64..32) {
            let log = log_from_events(6, 8, &events);
            let stats = build_stats(&log).unwrap();
            let stats = split_head_tail(&stats, 0.25).unwrap();
            if stats.n_tail() == 0 {
                return Ok(());
            }
            let reg = build_regularizer_distribution(&log, &stats, seed).unwrap();
            let mut freq = vec![0u64; 8];
            for ev in &reg.interactions {
                freq[ev.item as usize] += 1;
            }
            let cap = stats.max_tail_freq().unwrap();
            for (item, &f) in freq.iter().enumerate() {
                if stats.is_head(item as u32) {
                    prop_assert!(f <= cap, "head item {} has {} > cap {}", item, f, cap);
                } else {
                    prop_assert_eq!(f, stats.freq[item], "tail item {} must keep all events", item);
                }
            }
        }

        /// Adding one more event for the most frequent item never lowers IF.
        #[test]
        fn imbalance_factor_monotone(events in proptest::collection::vec((0u32..6, 0u32..8, 0i64..100), 1..120)) {
            let log = log_from_events(6, 8, &events);
            let stats = build_stats(&log).unwrap();
            let top = (0..8u32).max_by_key(|&i| (stats.freq[i as usize], std::cmp::Reverse(i))).unwrap();
            let mut bigger = events.clone();
            bigger.push((0, top, 1000));
            let log2 = log_from_events(6, 8, &bigger);
            let stats2 = build_stats(&log2).unwrap();
            prop_assert!(stats2.imbalance_factor >= stats.imbalance_factor);
        }

        /// Raising the head fraction only grows the head set.
        #[test]
        fn head_sets_nest(events in proptest::collection::vec((0u32..6, 0u32..8, 0i64..100), 1..120),
                          lo in 1u32..5, hi_extra in 1u32..5) {
            let log = log_from_events(6, 8, &events);
            let stats = build_stats(&log).unwrap();
            let f_lo = lo as f64 / 10.0;
            let f_hi = ((lo + hi_extra) as f64 / 10.0).min(0.95);
            let small = split_head_tail(&stats, f_lo).unwrap();
            let large = split_head_tail(&stats, f_hi).unwrap();
            for item in 0..8u32 {
                if small.is_head(item) {
                    prop_assert!(large.is_head(item), "item {} fell out of the head set", item);
                }
            }
        }
    }
}
