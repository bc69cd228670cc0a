//! Epoch-indexed adapter: the mixing weight between main-branch and
//! regularizer-branch logits.

use crate::error::{CdnError, Result};

/// `1 - (t / (gamma * T))^2`. The raw formula, exposed for analysis; the
/// schedule type validates `gamma > 1` for training use.
pub fn cdn_alpha(gamma: f64, t: usize, total_epochs: usize) -> f64 {
    let ratio = t as f64 / (gamma * total_epochs as f64);
    1.0 - ratio * ratio
}

/// `1 - (t / T)^2`: cumulative-learning decay that reaches 0 at the final
/// epoch.
pub fn bbn_alpha(t: usize, total_epochs: usize) -> f64 {
    let ratio = t as f64 / total_epochs as f64;
    1.0 - ratio * ratio
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleVariant {
    /// Regularizer-rate schedule; `gamma > 1` keeps the focus on the main
    /// branch through the whole run (`alpha_T = 1 - 1/gamma^2 > 0`).
    Cdn { gamma: f64 },
    /// Cumulative learning: alpha reaches 0 at the final epoch.
    Bbn,
    /// Constant mixing weight.
    Fixed { alpha0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdapterSchedule {
    pub variant: ScheduleVariant,
    pub total_epochs: usize,
}

impl AdapterSchedule {
    pub fn new(variant: ScheduleVariant, total_epochs: usize) -> Result<Self> {
        if total_epochs < 1 {
            return Err(CdnError::Config("total_epochs must be >= 1".into()));
        }
        match variant {
            ScheduleVariant::Cdn { gamma } if !(gamma > 1.0) => Err(CdnError::Config(format!(
                "the regularizer rate gamma must be > 1, got {gamma}"
            ))),
            ScheduleVariant::Fixed { alpha0 } if !(0.0..=1.0).contains(&alpha0) => Err(
                CdnError::Config(format!("fixed alpha must be in [0, 1], got {alpha0}")),
            ),
            _ => Ok(AdapterSchedule {
                variant,
                total_epochs,
            }),
        }
    }

    /// Mixing weight for completed-epoch count `t`, `0 <= t <= T`.
    pub fn alpha(&self, t: usize) -> Result<f64> {
        if t > self.total_epochs {
            return Err(CdnError::Config(format!(
                "epoch index {t} outside schedule range 0..={}",
                self.total_epochs
            )));
        }
        Ok(match self.variant {
            ScheduleVariant::Cdn { gamma } => cdn_alpha(gamma, t, self.total_epochs),
            ScheduleVariant::Bbn => bbn_alpha(t, self.total_epochs),
            ScheduleVariant::Fixed { alpha0 } => alpha0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_starts_at_one() {
        for schedule in [
            AdapterSchedule::new(ScheduleVariant::Cdn { gamma: 2.0 }, 10).unwrap(),
            AdapterSchedule::new(ScheduleVariant::Bbn, 10).unwrap(),
        ] {
            assert_eq!(schedule.alpha(0).unwrap(), 1.0);
        }
    }

    #[test]
    fn cdn_final_alpha_is_one_minus_inverse_gamma_squared() {
        let schedule = AdapterSchedule::new(ScheduleVariant::Cdn { gamma: 2.0 }, 7).unwrap();
        assert!((schedule.alpha(7).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn bbn_final_alpha_is_zero_and_matches_cdn_at_gamma_one() {
        let t_total = 9;
        let schedule = AdapterSchedule::new(ScheduleVariant::Bbn, t_total).unwrap();
        assert_eq!(schedule.alpha(t_total).unwrap(), 0.0);
        for t in 0..=t_total {
            let bbn = schedule.alpha(t).unwrap();
            let cdn_at_one = cdn_alpha(1.0, t, t_total);
            assert!((bbn - cdn_at_one).abs() < 1e-15, "t={t}");
        }
    }

    #[test]
    fn gamma_at_most_one_is_rejected() {
        assert!(AdapterSchedule::new(ScheduleVariant::Cdn { gamma: 1.0 }, 5).is_err());
        assert!(AdapterSchedule::new(ScheduleVariant::Cdn { gamma: 0.5 }, 5).is_err());
    }

    #[test]
    fn alpha_is_non_increasing() {
        let schedule = AdapterSchedule::new(ScheduleVariant::Cdn { gamma: 1.5 }, 20).unwrap();
        let mut prev = f64::INFINITY;
        for t in 0..=20 {
            let a = schedule.alpha(t).unwrap();
            assert!(a <= prev);
            prev = a;
        }
    }
}
