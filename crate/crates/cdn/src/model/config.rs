//! Tower configuration and the memorization/generalization feature split.

use serde::{Deserialize, Serialize};

use crate::data::Catalog;
use crate::error::{CdnError, Result};

/// Item-side expert mixture dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemTowerConfig {
    pub n_mem_experts: usize,
    pub n_gen_experts: usize,
    pub expert_hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub output_dim: usize,
    /// Number of log2 frequency buckets encoded one-hot as the gate input.
    pub freq_buckets: usize,
}

impl ItemTowerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mem_experts < 1 || self.n_gen_experts < 1 {
            return Err(CdnError::Config(
                "need at least one memorization and one generalization expert".into(),
            ));
        }
        for &d in self
            .expert_hidden_dims
            .iter()
            .chain([&self.embedding_dim, &self.output_dim, &self.freq_buckets])
        {
            if d == 0 {
                return Err(CdnError::Config("tower dimensions must be positive".into()));
            }
        }
        Ok(())
    }
}

/// User-side shared trunk and branch heads. The two heads are configured
/// identically but hold separate parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserTowerConfig {
    pub shared_dims: Vec<usize>,
    pub branch_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub output_dim: usize,
}

impl UserTowerConfig {
    pub fn validate(&self, item: &ItemTowerConfig) -> Result<()> {
        for &d in self
            .shared_dims
            .iter()
            .chain(&self.branch_dims)
            .chain([&self.embedding_dim, &self.output_dim])
        {
            if d == 0 {
                return Err(CdnError::Config("tower dimensions must be positive".into()));
            }
        }
        if self.output_dim != item.output_dim {
            return Err(CdnError::Config(format!(
                "user output_dim {} must match item output_dim {}",
                self.output_dim, item.output_dim
            )));
        }
        Ok(())
    }
}

/// Which catalog features feed the memorization experts versus the
/// generalization experts. The item id is the canonical memorization
/// feature; any extra memorization field must hold exactly one value per
/// item and be injective across items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFeatureSplit {
    pub memorization: Vec<String>,
    pub generalization: Vec<String>,
}

pub const ITEM_ID_FEATURE: &str = "item_id";

impl ItemFeatureSplit {
    /// item id memorizes, every catalog field generalizes.
    pub fn infer(catalog: &Catalog) -> Self {
        ItemFeatureSplit {
            memorization: vec![ITEM_ID_FEATURE.to_string()],
            generalization: catalog.gen_fields.iter().map(|f| f.name.clone()).collect(),
        }
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        for name in &self.memorization {
            if self.generalization.contains(name) {
                return Err(CdnError::Config(format!(
                    "feature {name:?} cannot be both memorization and generalization"
                )));
            }
            if name == ITEM_ID_FEATURE {
                continue;
            }
            let field = catalog.field(name).ok_or_else(|| {
                CdnError::Config(format!("memorization feature {name:?} not in catalog"))
            })?;
            let mut seen = std::collections::HashSet::new();
            for (item, bag) in field.bags.iter().enumerate() {
                if bag.len() != 1 {
                    return Err(CdnError::Config(format!(
                        "memorization feature {name:?} has {} values for item {item}; uniqueness requires exactly one",
                        bag.len()
                    )));
                }
                if !seen.insert(bag[0]) {
                    return Err(CdnError::Config(format!(
                        "memorization feature {name:?} is not injective: value {} repeats",
                        bag[0]
                    )));
                }
            }
        }
        for name in &self.generalization {
            if catalog.field(name).is_none() {
                return Err(CdnError::Config(format!(
                    "generalization feature {name:?} not in catalog"
                )));
            }
        }
        if !self.memorization.iter().any(|n| n == ITEM_ID_FEATURE) {
            return Err(CdnError::Config(
                "memorization features must include item_id".into(),
            ));
        }
        Ok(())
    }
}

/// Log2 bucket index for a raw frequency; frequency 0 maps to bucket 0.
pub fn freq_bucket(freq: u64, n_buckets: usize) -> usize {
    let shifted = freq.saturating_add(1);
    let bits = 64 - shifted.leading_zeros() as usize - 1; // floor(log2(freq+1))
    bits.min(n_buckets - 1)
}
