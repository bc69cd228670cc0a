//! Training and evaluation toolkit for long-tail item retrieval.
//!
//! The centerpiece is a cross-decoupled two-tower model: the item tower
//! mixes memorization-focused and generalization-focused experts under a
//! frequency-based gate, the user tower trains two branch heads over a
//! shared trunk (one on the raw interaction stream, one on a rebalanced
//! stream), and an epoch-indexed adapter blends the two during training.
//! Serving always uses the main branch alone.
//!
//! The same infrastructure hosts the plain two-tower backbone,
//! re-balancing baselines (class-balanced weighting, logQ correction),
//! decoupling baselines (two-stage retraining, bilateral-branch training),
//! and ablation variants, so method comparisons isolate the modeling
//! change. Evaluation reports HR@K / NDCG@K sliced by head, tail, and
//! overall items.

pub mod data;
pub mod error;
pub mod numerics;

pub use error::{CdnError, Result};
