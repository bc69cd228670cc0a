//! Chronological splitting and the rebalanced regularizer distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{CatalogStats, Interaction, InteractionLog, Slice};
use crate::error::{CdnError, Result};

/// Train/valid/test partition plus, once built, the rebalanced regularizer
/// stream (all tail feedback, head feedback capped at the most popular tail
/// item's frequency).
#[derive(Debug, Clone)]
pub struct SplitLog {
    pub train: InteractionLog,
    pub valid: InteractionLog,
    pub test: InteractionLog,
    pub regularizer: Option<InteractionLog>,
}

/// Per-user chronological split: earliest events to train, then valid, then
/// test. Users with fewer than 3 events go entirely to train.
pub fn chrono_split(log: &InteractionLog, ratios: (f64, f64, f64)) -> Result<SplitLog> {
    let (r_train, r_valid, r_test) = ratios;
    if r_train <= 0.0 || r_valid <= 0.0 || r_test <= 0.0 {
        return Err(CdnError::Config(format!("split ratios must be positive, got {ratios:?}")));
    }
    if (r_train + r_valid + r_test - 1.0).abs() > 1e-9 {
        return Err(CdnError::Config(format!("split ratios must sum to 1, got {ratios:?}")));
    }

    let mut per_user: Vec<Vec<usize>> = vec![Vec::new(); log.n_users()];
    for (pos, ev) in log.interactions.iter().enumerate() {
        per_user[ev.user as usize].push(pos);
    }

    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for events in &mut per_user {
        // stable within equal timestamps: original position breaks ties
        events.sort_by_key(|&pos| (log.interactions[pos].timestamp, pos));
        let n = events.len();
        if n < 3 {
            train.extend(events.iter().map(|&p| log.interactions[p]));
            continue;
        }
        let n_test = ((n as f64 * r_test).floor() as usize).max(1);
        let n_valid = ((n as f64 * r_valid).floor() as usize).max(1);
        let n_train = n - n_valid - n_test;
        for (k, &pos) in events.iter().enumerate() {
            let ev = log.interactions[pos];
            if k < n_train {
                train.push(ev);
            } else if k < n_train + n_valid {
                valid.push(ev);
            } else {
                test.push(ev);
            }
        }
    }

    Ok(SplitLog {
        train: log.with_events(train),
        valid: log.with_events(valid),
        test: log.with_events(test),
        regularizer: None,
    })
}

/// Build the rebalanced stream: keep every tail-item event; for each head
/// item keep a seeded uniform subsample of at most `max tail frequency`
/// events. Event order of the input is preserved.
pub fn build_regularizer_distribution(
    train: &InteractionLog,
    stats: &CatalogStats,
    seed: u64,
) -> Result<InteractionLog> {
    if stats.n_items() != train.n_items() {
        return Err(CdnError::Data(format!(
            "stats cover {} items, log has {}",
            stats.n_items(),
            train.n_items()
        )));
    }
    let cap = stats.max_tail_freq()? as usize;

    let mut per_item: Vec<Vec<usize>> = vec![Vec::new(); train.n_items()];
    for (pos, ev) in train.interactions.iter().enumerate() {
        per_item[ev.item as usize].push(pos);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; train.len()];
    for (item, positions) in per_item.iter().enumerate() {
        let head = stats.slice[item] == Slice::Head;
        if head && positions.len() > cap {
            for idx in rand::seq::index::sample(&mut rng, positions.len(), cap) {
                keep[positions[idx]] = true;
            }
        } else {
            for &pos in positions {
                keep[pos] = true;
            }
        }
    }

    let events: Vec<Interaction> = train
        .interactions
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(ev, _)| *ev)
        .collect();
    Ok(train.with_events(events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::test_support::{log_from_events, log_from_item_freqs};
    use crate::data::{build_stats, split_head_tail};

    #[test]
    fn user_with_ten_events_splits_8_1_1() {
        // one user, ten events with increasing timestamps
        let events: Vec<(u32, u32, i64)> = (0..10).map(|t| (0, t as u32 % 3, t as i64)).collect();
        let log = log_from_events(1, 3, &events);
        let split = chrono_split(&log, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(split.train.len(), 8);
        assert_eq!(split.valid.len(), 1);
        assert_eq!(split.test.len(), 1);
        // the held-out test event is the newest
        assert_eq!(split.test.interactions[0].timestamp, 9);
    }

    #[test]
    fn tiny_users_stay_in_train() {
        let log = log_from_events(1, 2, &[(0, 0, 5), (0, 1, 2)]);
        let split = chrono_split(&log, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(split.train.len(), 2);
        assert!(split.valid.is_empty() && split.test.is_empty());
    }

    #[test]
    fn split_is_a_partition() {
        let events: Vec<(u32, u32, i64)> = (0..50)
            .map(|k| ((k % 7) as u32, (k % 5) as u32, (97 * k % 31) as i64))
            .collect();
        let log = log_from_events(7, 5, &events);
        let split = chrono_split(&log, (0.6, 0.2, 0.2)).unwrap();
        assert_eq!(split.train.len() + split.valid.len() + split.test.len(), log.len());

        let mut all: Vec<_> = split
            .train
            .interactions
            .iter()
            .chain(&split.valid.interactions)
            .chain(&split.test.interactions)
            .map(|ev| (ev.user, ev.item, ev.timestamp))
            .collect();
        let mut original: Vec<_> = log
            .interactions
            .iter()
            .map(|ev| (ev.user, ev.item, ev.timestamp))
            .collect();
        all.sort_unstable();
        original.sort_unstable();
        assert_eq!(all, original);
    }

    #[test]
    fn bad_ratios_rejected() {
        let log = log_from_item_freqs(&[1]);
        assert!(chrono_split(&log, (0.5, 0.2, 0.2)).is_err());
        assert!(chrono_split(&log, (1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn regularizer_caps_head_items_and_keeps_tail() {
        // item 0: 100 events (head), item 1: 7 (tail cap), item 2: 3 (tail)
        let log = log_from_item_freqs(&[100, 7, 3]);
        let stats = split_head_tail(&build_stats(&log).unwrap(), 0.2).unwrap();
        assert_eq!(stats.n_head(), 1);
        let reg = build_regularizer_distribution(&log, &stats, 11).unwrap();
        let reg_stats_freq = |item: u32| reg.interactions.iter().filter(|ev| ev.item == item).count();
        assert_eq!(reg_stats_freq(0), 7, "head item capped at max tail frequency");
        assert_eq!(reg_stats_freq(1), 7, "tail items keep everything");
        assert_eq!(reg_stats_freq(2), 3);
    }

    #[test]
    fn regularizer_is_deterministic_per_seed() {
        let log = log_from_item_freqs(&[50, 5, 2]);
        let stats = split_head_tail(&build_stats(&log).unwrap(), 0.2).unwrap();
        let a = build_regularizer_distribution(&log, &stats, 7).unwrap();
        let b = build_regularizer_distribution(&log, &stats, 7).unwrap();
        assert_eq!(a.interactions, b.interactions);
        let c = build_regularizer_distribution(&log, &stats, 8).unwrap();
        assert_eq!(c.len(), a.len());
    }

    #[test]
    fn no_tail_items_is_an_error() {
        let log = log_from_item_freqs(&[4, 4]);
        let mut stats = build_stats(&log).unwrap();
        stats.slice = vec![Slice::Head, Slice::Head];
        assert!(build_regularizer_distribution(&log, &stats, 0).is_err());
    }
}
