use ratnmt_autodiff::{Real, Tape, Tensor, Var, MASK_NEG};

use crate::error::{Error, Result};

/// Sinusoidal position table of shape `length x d_model`: even columns
/// `sin(pos / 10000^(2i/d))`, odd columns the matching cosine.
pub fn positional_encoding<T: Real>(length: usize, d_model: usize) -> Result<Tensor<T>> {
    if d_model % 2 != 0 {
        return Err(Error::Config(format!(
            "positional encoding needs an even width, got {d_model}"
        )));
    }
    let mut pe = Tensor::zeros(&[length, d_model]);
    for pos in 0..length {
        let row = pe.row_mut(pos);
        for i in 0..d_model / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            row[2 * i] = T::from_lit(angle.sin());
            row[2 * i + 1] = T::from_lit(angle.cos());
        }
    }
    Ok(pe)
}

/// Additive mask hiding future positions: `MASK_NEG` above the diagonal.
pub fn causal_mask<T: Real>(n: usize) -> Tensor<T> {
    let mut m = Tensor::zeros(&[n, n]);
    for r in 0..n {
        for c in r + 1..n {
            m.row_mut(r)[c] = T::from_lit(MASK_NEG);
        }
    }
    m
}

/// `softmax(Q Kᵀ / sqrt(d_k) + mask) V` for one head.
pub fn scaled_dot_attention<T: Real>(
    tape: &mut Tape<T>,
    q: Var,
    k: Var,
    v: Var,
    mask: Option<&Tensor<T>>,
) -> Result<Var> {
    let d_k = tape.value(q).cols();
    let scores = tape.matmul_nt(q, k)?;
    let mut scores = tape.scale(scores, T::from_lit(1.0 / (d_k as f64).sqrt()))?;
    if let Some(m) = mask {
        let mv = tape.constant(m.clone());
        scores = tape.add(scores, mv)?;
    }
    let weights = tape.softmax(scores)?;
    Ok(tape.matmul(weights, v)?)
}
