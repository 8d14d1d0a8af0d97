use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::AutodiffError;
use crate::param::ParamStore;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub epsilon: f64,
    /// Coordinates checked per parameter; all of them when the parameter is
    /// smaller than this.
    pub coords_per_param: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            epsilon: 1e-5,
            coords_per_param: 16,
            seed: 0,
        }
    }
}

fn eval<F, E>(store: &ParamStore<f64>, loss_fn: &mut F) -> std::result::Result<f64, E>
where
    F: FnMut(&mut Tape<f64>, &ParamStore<f64>) -> std::result::Result<Var, E>,
    E: From<AutodiffError>,
{
    let mut tape = Tape::new();
    let loss = loss_fn(&mut tape, store)?;
    let v = tape.value(loss);
    if v.len() != 1 {
        return Err(AutodiffError::Invalid {
            op: "grad_check",
            msg: format!("loss must be scalar, got {:?}", v.shape()),
        }
        .into());
    }
    Ok(v.item())
}

/// Compares analytic gradients with central finite differences.
///
/// Returns the largest `|g_fd - g_an| / max(|g_fd|, |g_an|, 1e-8)` over the
/// sampled coordinates. Parameter values are restored before returning and
/// gradient buffers are left holding the analytic gradient.
///
/// The loss closure may use any error type that an [`AutodiffError`]
/// converts into.
pub fn grad_check<F, E>(
    store: &mut ParamStore<f64>,
    config: GradCheckConfig,
    mut loss_fn: F,
) -> std::result::Result<f64, E>
where
    F: FnMut(&mut Tape<f64>, &ParamStore<f64>) -> std::result::Result<Var, E>,
    E: From<AutodiffError>,
{
    store.zero_grads();
    {
        let mut tape = Tape::new();
        let loss = loss_fn(&mut tape, store)?;
        tape.backward(loss, store)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let eps = config.epsilon;
    let mut worst = 0.0f64;
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let n = store.value(id).len();
        let coords: Vec<usize> = if n <= config.coords_per_param {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, config.coords_per_param).into_vec();
            c.sort_unstable();
            c
        };
        for i in coords {
            let orig = store.value(id).data()[i];
            store.get_mut(id).value.data_mut()[i] = orig + eps;
            let plus = eval(store, &mut loss_fn)?;
            store.get_mut(id).value.data_mut()[i] = orig - eps;
            let minus = eval(store, &mut loss_fn)?;
            store.get_mut(id).value.data_mut()[i] = orig;

            let fd = (plus - minus) / (2.0 * eps);
            let an = store.grad(id).data()[i];
            let denom = fd.abs().max(an.abs()).max(1e-8);
            worst = worst.max((fd - an).abs() / denom);
        }
    }
    Ok(worst)
}
