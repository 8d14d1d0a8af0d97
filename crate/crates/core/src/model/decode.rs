use std::cmp::Ordering;

use ratnmt_autodiff::{Real, Tape, Var};

use super::{Dropout, Model};
use crate::corpus::{Vocabulary, BOS, EOS};
use crate::error::{Error, Result};
use crate::textprep::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStrategy {
    Greedy,
    Beam(usize),
}

impl DecodeStrategy {
    /// `greedy` or `beam:<width>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(DecodeStrategy::Greedy),
            _ => s
                .strip_prefix("beam:")
                .and_then(|w| w.parse().ok())
                .filter(|&w| w >= 1)
                .map(DecodeStrategy::Beam)
                .ok_or_else(|| Error::Config(format!("unknown decoding strategy {s:?}"))),
        }
    }
}

struct Encoded<T> {
    tape: Tape<T>,
    memory: Var,
    len: usize,
}

fn encode<T: Real>(model: &Model<T>, source: &[usize]) -> Result<Encoded<T>> {
    if source.is_empty() {
        return Err(Error::data("cannot translate an empty source"));
    }
    let source = &source[..source.len().min(model.config().max_len)];
    let mut tape = Tape::new();
    let memory = model
        .net
        .encode(&mut tape, &model.store, &[source], &mut Dropout::off())?;
    Ok(Encoded {
        tape,
        memory,
        len: source.len(),
    })
}

/// Log-probabilities of the next token after each prefix.
fn next_log_probs<T: Real>(model: &Model<T>, enc: &mut Encoded<T>, prefixes: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
    let memory = if prefixes.len() == 1 {
        enc.memory
    } else {
        enc.tape.concat_rows(&vec![enc.memory; prefixes.len()])?
    };
    let inputs: Vec<Vec<usize>> = prefixes
        .iter()
        .map(|p| std::iter::once(BOS).chain(p.iter().copied()).collect())
        .collect();
    let refs: Vec<&[usize]> = inputs.iter().map(Vec::as_slice).collect();
    let mem_lens = vec![enc.len; prefixes.len()];
    let logits = model.net.decode_logits(
        &mut enc.tape,
        &model.store,
        memory,
        &mem_lens,
        &refs,
        &mut Dropout::off(),
    )?;
    let values = enc.tape.value(logits);
    let mut row_end = 0;
    Ok(inputs
        .iter()
        .map(|inp| {
            row_end += inp.len();
            let row: Vec<f64> = values.row(row_end - 1).iter().map(|x| x.as_f64()).collect();
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = row.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
            row.into_iter().map(|x| x - lse).collect()
        })
        .collect())
}

/// Token order used by both decoders: higher log-probability first, lower
/// index on ties.
fn ranked_tokens(lp: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lp.len()).collect();
    idx.sort_by(|&a, &b| lp[b].total_cmp(&lp[a]).then(a.cmp(&b)));
    idx
}

fn step_limit<T: Real>(model: &Model<T>, max_len: usize) -> usize {
    max_len.min(model.config().max_len)
}

/// Most probable token at every step until `<eos>` or `max_len` tokens.
pub fn greedy<T: Real>(model: &Model<T>, source: &[usize], max_len: usize) -> Result<Vec<usize>> {
    let mut enc = encode(model, source)?;
    let mut out = Vec::new();
    for _ in 0..step_limit(model, max_len) {
        let lp = next_log_probs(model, &mut enc, std::slice::from_ref(&out))?;
        let best = ranked_tokens(&lp[0])[0];
        if best == EOS {
            break;
        }
        out.push(best);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct Hypothesis {
    tokens: Vec<usize>,
    score: f64,
    done: bool,
}

/// Beam search without length normalization. Width 1 reproduces
/// [`greedy`] exactly.
pub fn beam_search<T: Real>(model: &Model<T>, source: &[usize], width: usize, max_len: usize) -> Result<Vec<usize>> {
    if width == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    let mut enc = encode(model, source)?;
    let mut beams = vec![Hypothesis {
        tokens: Vec::new(),
        score: 0.0,
        done: false,
    }];
    for _ in 0..step_limit(model, max_len) {
        let live: Vec<usize> = (0..beams.len()).filter(|&i| !beams[i].done).collect();
        if live.is_empty() {
            break;
        }
        let prefixes: Vec<Vec<usize>> = live.iter().map(|&i| beams[i].tokens.clone()).collect();
        let lps = next_log_probs(model, &mut enc, &prefixes)?;
        // (hypothesis, parent rank, token log-prob, token)
        let mut pool: Vec<(Hypothesis, usize, f64, usize)> = beams
            .iter()
            .enumerate()
            .filter(|(_, h)| h.done)
            .map(|(r, h)| (h.clone(), r, 0.0, 0))
            .collect();
        for (&parent, lp) in live.iter().zip(&lps) {
            for &tok in ranked_tokens(lp).iter().take(width) {
                let mut h = beams[parent].clone();
                h.score += lp[tok];
                if tok == EOS {
                    h.done = true;
                } else {
                    h.tokens.push(tok);
                }
                pool.push((h, parent, lp[tok], tok));
            }
        }
        pool.sort_by(|a, b| {
            b.0.score
                .total_cmp(&a.0.score)
                .then(a.1.cmp(&b.1))
                .then(b.2.total_cmp(&a.2))
                .then(a.3.cmp(&b.3))
        });
        beams = pool.into_iter().take(width).map(|(h, ..)| h).collect();
    }
    Ok(beams
        .into_iter()
        .enumerate()
        .min_by(|a, b| match b.1.score.total_cmp(&a.1.score) {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        })
        .map(|(_, h)| h.tokens)
        .unwrap_or_default())
}

/// Decodes `source` and maps the output back to target tokens, dropping
/// special symbols. Sources longer than the model's `max_len` are truncated.
pub fn translate<T: Real>(
    model: &Model<T>,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
    source: &[String],
    strategy: DecodeStrategy,
    max_len: usize,
) -> Result<TokenSeq> {
    let ids = src_vocab.encode(source);
    let out = match strategy {
        DecodeStrategy::Greedy => greedy(model, &ids, max_len)?,
        DecodeStrategy::Beam(w) => beam_search(model, &ids, w, max_len)?,
    };
    Ok(tgt_vocab.decode(&out))
}
