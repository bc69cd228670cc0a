//! Central finite-difference validation of reverse-mode gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numerics::{NodeId, ParamStore, Tape};

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    /// Number of coordinates to check (skipped kink coordinates excluded).
    pub n_samples: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            n_samples: 200,
            epsilon: 1e-5,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub n_checked: usize,
    /// Coordinates skipped because some evaluation landed within epsilon of a
    /// relu kink (non-differentiable point).
    pub n_skipped: usize,
    pub max_rel_err: f64,
    /// (parameter name, flat index) of the worst coordinate.
    pub worst_coordinate: Option<(String, usize)>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.n_checked > 0 && self.max_rel_err < self.tolerance
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - b).abs() / scale.max(1e-8)
    }
}

/// Compare reverse-mode gradients against central differences at randomly
/// sampled coordinates. `build` must construct the same forward graph from
/// the current parameter values each time it is called and return the loss
/// node; its tape supplies both the analytic gradients and the relu-kink
/// proximity signal.
pub fn check_gradients<F>(
    store: &mut ParamStore,
    mut build: F,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(Tape, NodeId)>,
{
    // analytic gradients at the base point
    store.zero_grads();
    let (tape, loss) = build(store)?;
    tape.backward(loss, store)?;
    let base_kink = tape.min_relu_abs();
    let analytic: Vec<Vec<f64>> = store
        .ids()
        .map(|id| store.grad(id).data().to_vec())
        .collect();

    // flat coordinate space over every parameter
    let sizes: Vec<usize> = store.ids().map(|id| store.value(id).len()).collect();
    let total: usize = sizes.iter().sum();
    let ids: Vec<_> = store.ids().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut n_checked = 0;
    let mut n_skipped = 0;
    let mut max_rel_err: f64 = 0.0;
    let mut worst = None;

    let max_attempts = opts.n_samples.saturating_mul(20).max(opts.n_samples);
    let mut attempts = 0;
    while n_checked < opts.n_samples && attempts < max_attempts {
        attempts += 1;
        let mut flat = rng.gen_range(0..total);
        let mut slot = 0;
        while flat >= sizes[slot] {
            flat -= sizes[slot];
            slot += 1;
        }
        let id = ids[slot];

        let original = store.value(id).data()[flat];
        store.value_mut(id).data_mut()[flat] = original + opts.epsilon;
        let (tape_p, loss_p) = build(store)?;
        let (lp, kink_p) = (tape_p.scalar(loss_p), tape_p.min_relu_abs());
        store.value_mut(id).data_mut()[flat] = original - opts.epsilon;
        let (tape_m, loss_m) = build(store)?;
        let (lm, kink_m) = (tape_m.scalar(loss_m), tape_m.min_relu_abs());
        store.value_mut(id).data_mut()[flat] = original;

        if base_kink <= opts.epsilon || kink_p <= opts.epsilon || kink_m <= opts.epsilon {
            n_skipped += 1;
            continue;
        }

        let fd = (lp - lm) / (2.0 * opts.epsilon);
        let err = rel_err(fd, analytic[slot][flat]);
        if err > max_rel_err {
            max_rel_err = err;
            worst = Some((store.name(id).to_string(), flat));
        }
        n_checked += 1;
    }

    store.zero_grads();
    Ok(GradCheckReport {
        n_checked,
        n_skipped,
        max_rel_err,
        worst_coordinate: worst,
        tolerance: opts.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn linear_model_passes_tightly() {
        // loss = sum((W x + b)^2), no relu anywhere
        let mut store = ParamStore::new();
        let w = store
            .register("w", Matrix::from_rows(&[&[0.4, -0.7], &[1.2, 0.3]]))
            .unwrap();
        let b = store.register("b", Matrix::from_rows(&[&[0.1, -0.2]])).unwrap();
        let x_val = Matrix::from_rows(&[&[0.5, -1.5]]);

        let report = check_gradients(
            &mut store,
            |store| {
                let mut tape = Tape::new();
                let wn = tape.param(store, w);
                let bn = tape.param(store, b);
                let x = tape.input(x_val.clone());
                let y = tape.matmul_nt(x, wn)?; // 1x2
                let y = tape.add_bias(y, bn)?;
                let sq = tape.matmul_nt(y, y)?; // 1x1
                Ok((tape, sq))
            },
            &GradCheckOptions {
                n_samples: 6,
                epsilon: 1e-5,
                tolerance: 1e-6,
                seed: 7,
            },
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.n_skipped, 0);
    }

    #[test]
    fn relu_at_exact_zero_is_skipped() {
        let mut store = ParamStore::new();
        let w = store.register("w", Matrix::from_rows(&[&[0.0]])).unwrap();
        let report = check_gradients(
            &mut store,
            |store| {
                let mut tape = Tape::new();
                let wn = tape.param(store, w);
                let r = tape.relu(wn);
                let sq = tape.matmul_nt(r, r)?;
                Ok((tape, sq))
            },
            &GradCheckOptions {
                n_samples: 3,
                epsilon: 1e-5,
                tolerance: 1e-4,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(report.n_checked, 0);
        assert!(report.n_skipped > 0, "kink coordinates must be noted");
        assert!(!report.passed());
    }

    #[test]
    fn relu_network_passes_away_from_kinks() {
        let mut store = ParamStore::new();
        let w = store
            .register("w", Matrix::from_rows(&[&[0.9, -0.4], &[0.3, 0.8]]))
            .unwrap();
        let x_val = Matrix::from_rows(&[&[1.0, 2.0]]);
        let report = check_gradients(
            &mut store,
            |store| {
                let mut tape = Tape::new();
                let wn = tape.param(store, w);
                let x = tape.input(x_val.clone());
                let h = tape.matmul_nt(x, wn)?;
                let h = tape.relu(h);
                let sq = tape.matmul_nt(h, h)?;
                Ok((tape, sq))
            },
            &GradCheckOptions {
                n_samples: 4,
                epsilon: 1e-5,
                tolerance: 1e-6,
                seed: 3,
            },
        )
        .unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
