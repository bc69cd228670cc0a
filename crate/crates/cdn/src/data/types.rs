//! Interaction logs and catalog metadata.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{CdnError, Result};

/// One positive/negative feedback event. `label` is 1 for observed positive
/// feedback; loaders emit positives only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub timestamp: i64,
    pub label: u8,
}

/// Bijective id <-> dense index map.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Vocab::default()
    }

    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut v = Vocab::new();
        for id in ids {
            let before = v.len();
            v.intern(&id);
            if v.len() == before {
                return Err(CdnError::Data(format!("duplicate vocab id {id:?}")));
            }
        }
        Ok(v)
    }

    /// Returns the dense index for `id`, inserting it if unseen.
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: u32) -> &str {
        &self.ids[index as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// One categorical generalization feature: a vocab of values plus, per item,
/// the (possibly multi-valued) bag of value indices.
#[derive(Debug, Clone)]
pub struct FeatureField {
    pub name: String,
    pub vocab: Vocab,
    /// `bags[item_index]` lists this item's value indices; never empty once
    /// the catalog is finalized (missing values map to a sentinel).
    pub bags: Vec<Vec<u32>>,
}

/// Shared immutable description of users, items, and item content features.
/// Item id is the memorization feature; the fields here are the
/// generalization features.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub users: Vocab,
    pub items: Vocab,
    pub gen_fields: Vec<FeatureField>,
}

impl Catalog {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn field(&self, name: &str) -> Option<&FeatureField> {
        self.gen_fields.iter().find(|f| f.name == name)
    }

    fn validate(&self) -> Result<()> {
        for field in &self.gen_fields {
            if field.bags.len() != self.n_items() {
                return Err(CdnError::Data(format!(
                    "feature field {:?} covers {} items, catalog has {}",
                    field.name,
                    field.bags.len(),
                    self.n_items()
                )));
            }
            for (item, bag) in field.bags.iter().enumerate() {
                if bag.is_empty() {
                    return Err(CdnError::Data(format!(
                        "feature field {:?} has empty bag for item {item}",
                        field.name
                    )));
                }
                if let Some(&v) = bag.iter().find(|&&v| v as usize >= field.vocab.len()) {
                    return Err(CdnError::Data(format!(
                        "feature field {:?} value index {v} out of range",
                        field.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ordered interaction events over a shared catalog.
#[derive(Debug, Clone)]
pub struct InteractionLog {
    pub catalog: Arc<Catalog>,
    pub interactions: Vec<Interaction>,
}

impl InteractionLog {
    pub fn new(catalog: Arc<Catalog>, interactions: Vec<Interaction>) -> Result<Self> {
        catalog.validate()?;
        let (nu, ni) = (catalog.n_users() as u32, catalog.n_items() as u32);
        for (k, ev) in interactions.iter().enumerate() {
            if ev.user >= nu || ev.item >= ni {
                return Err(CdnError::Data(format!(
                    "interaction {k} references user {} / item {} outside vocab ({nu} users, {ni} items)",
                    ev.user, ev.item
                )));
            }
            if ev.label > 1 {
                return Err(CdnError::Data(format!("interaction {k} label must be 0 or 1")));
            }
        }
        Ok(InteractionLog { catalog, interactions })
    }

    /// Same catalog, different events. Invariants already hold for subsets.
    pub fn with_events(&self, interactions: Vec<Interaction>) -> InteractionLog {
        InteractionLog {
            catalog: Arc::clone(&self.catalog),
            interactions,
        }
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.catalog.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.catalog.n_items()
    }
}
