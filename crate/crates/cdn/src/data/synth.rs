//! Seeded synthetic interaction logs with a Zipf item popularity profile and
//! genre structure that makes generalization features informative.

use std::collections::HashSet;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Catalog, FeatureField, Interaction, InteractionLog, Vocab};
use crate::error::{CdnError, Result};

/// Probability that an event is drawn from the user's preferred genres
/// rather than global popularity.
const PREF_PROB: f64 = 0.7;
/// Attempts to find an unseen (user, item) pair before accepting a repeat.
const UNIQUE_ATTEMPTS: usize = 30;

/// Generate `n_events` positive interactions where item popularity follows
/// `rank^(-exponent)` and users favor two preferred genres. Timestamps are
/// the event sequence numbers, so chronological splits are well defined.
/// Byte-identical output for a fixed seed.
pub fn synth_zipf(
    n_users: usize,
    n_items: usize,
    exponent: f64,
    n_events: usize,
    n_genres: usize,
    seed: u64,
) -> Result<InteractionLog> {
    if n_users == 0 || n_items == 0 || n_events == 0 || n_genres == 0 {
        return Err(CdnError::Config("synthetic counts must all be positive".into()));
    }
    if exponent < 0.0 {
        return Err(CdnError::Config(format!("zipf exponent must be >= 0, got {exponent}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // item k has popularity weight (k+1)^-exponent: item 0 is the head
    let weights: Vec<f64> = (0..n_items).map(|k| ((k + 1) as f64).powf(-exponent)).collect();
    let global = WeightedIndex::new(&weights)
        .map_err(|e| CdnError::Numeric(format!("bad zipf weights: {e}")))?;

    // round-robin genre assignment: balanced genre sizes keep the aggregate
    // item marginal proportional to the popularity weights (exactly uniform
    // in the exponent-0 case), while each user's events still concentrate on
    // two genres
    let bags: Vec<Vec<u32>> = (0..n_items).map(|k| vec![(k % n_genres) as u32]).collect();

    // per-genre popularity-weighted samplers over member items
    let mut genre_members: Vec<Vec<usize>> = vec![Vec::new(); n_genres];
    for (item, bag) in bags.iter().enumerate() {
        for &g in bag {
            genre_members[g as usize].push(item);
        }
    }
    let genre_samplers: Vec<Option<WeightedIndex<f64>>> = genre_members
        .iter()
        .map(|members| {
            if members.is_empty() {
                None
            } else {
                WeightedIndex::new(members.iter().map(|&i| weights[i])).ok()
            }
        })
        .collect();

    // two distinct preferred genres per user (one when n_genres == 1)
    let prefs: Vec<(u32, u32)> = (0..n_users)
        .map(|_| {
            let a = rng.gen_range(0..n_genres) as u32;
            if n_genres == 1 {
                return (a, a);
            }
            let mut b = rng.gen_range(0..n_genres) as u32;
            while b == a {
                b = rng.gen_range(0..n_genres) as u32;
            }
            (a, b)
        })
        .collect();

    let mut seen: Vec<HashSet<u32>> = vec![HashSet::new(); n_users];
    let mut interactions = Vec::with_capacity(n_events);
    for t in 0..n_events {
        let user = rng.gen_range(0..n_users);
        let mut item = 0u32;
        for attempt in 0..=UNIQUE_ATTEMPTS {
            let candidate = if rng.gen_bool(PREF_PROB) {
                let (a, b) = prefs[user];
                let genre = if rng.gen_bool(0.5) { a } else { b } as usize;
                match &genre_samplers[genre] {
                    Some(sampler) => genre_members[genre][sampler.sample(&mut rng)] as u32,
                    None => global.sample(&mut rng) as u32,
                }
            } else {
                global.sample(&mut rng) as u32
            };
            item = candidate;
            if attempt == UNIQUE_ATTEMPTS || !seen[user].contains(&candidate) {
                break;
            }
        }
        seen[user].insert(item);
        interactions.push(Interaction {
            user: user as u32,
            item,
            timestamp: t as i64,
            label: 1,
        });
    }

    let users = Vocab::from_ids((0..n_users).map(|u| format!("u{u}")).collect())?;
    let items = Vocab::from_ids((0..n_items).map(|i| format!("i{i}")).collect())?;
    let genre_vocab = Vocab::from_ids((0..n_genres).map(|g| format!("g{g}")).collect())?;
    let catalog = Arc::new(Catalog {
        users,
        items,
        gen_fields: vec![FeatureField {
            name: "genre".into(),
            vocab: genre_vocab,
            bags,
        }],
    });
    InteractionLog::new(catalog, interactions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_stats;

    #[test]
    fn zero_exponent_is_roughly_uniform() {
        let log = synth_zipf(2000, 20, 0.0, 20_000, 4, 3).unwrap();
        let stats = build_stats(&log).unwrap();
        let expected = 20_000.0 / 20.0;
        // ~5 sigma binomial envelope around the uniform expectation
        let sigma = (20_000.0_f64 * (1.0 / 20.0) * (19.0 / 20.0)).sqrt();
        for (item, &f) in stats.freq.iter().enumerate() {
            assert!(
                (f as f64 - expected).abs() < 5.0 * sigma,
                "item {item} freq {f} too far from uniform {expected}"
            );
        }
    }

    #[test]
    fn imbalance_grows_with_exponent() {
        let low = synth_zipf(500, 100, 0.5, 30_000, 8, 42).unwrap();
        let high = synth_zipf(500, 100, 1.5, 30_000, 8, 42).unwrap();
        let if_low = build_stats(&low).unwrap().imbalance_factor;
        let if_high = build_stats(&high).unwrap().imbalance_factor;
        assert!(
            if_high > if_low,
            "IF(1.5)={if_high} should exceed IF(0.5)={if_low}"
        );
    }

    #[test]
    fn fixed_seed_is_byte_identical() {
        let a = synth_zipf(50, 30, 1.2, 2000, 4, 9).unwrap();
        let b = synth_zipf(50, 30, 1.2, 2000, 4, 9).unwrap();
        assert_eq!(a.interactions, b.interactions);
        assert_eq!(a.catalog.gen_fields[0].bags, b.catalog.gen_fields[0].bags);
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(synth_zipf(0, 10, 1.0, 10, 2, 0).is_err());
        assert!(synth_zipf(10, 10, 1.0, 0, 2, 0).is_err());
    }
}
