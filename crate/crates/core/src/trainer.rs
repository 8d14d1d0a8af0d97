//! Baseline warm-up and multi-task training.
//!
//! Both phases walk the same seeded batch stream, so a run started from a
//! saved state at step `s` sees exactly the batches an uninterrupted run
//! would have seen after step `s`. In the multi-task phase each batch first
//! drives a word-embedding update from the CBOW pairs of its own sentences,
//! then the translation update; each task has its own Adam state.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use ratnmt_autodiff::{Adam, AdamConfig, ParamId, Tape, Tensor};

use crate::corpus::{ParallelPair, QrelSet, Vocabulary};
use crate::error::{Error, Result};
use crate::io::ArtifactHeader;
use crate::metrics::{average_precision, mean};
use crate::model::{translate, Checkpoint, DecodeStrategy, Dropout, EncodedPair, Model};
use crate::ratgen::{ContextPivotPair, RatDataset};
use crate::retrieval::InvertedIndex;
use crate::seed::{rng_for, Stream};
use crate::textprep::TokenSeq;

/// Minimum gain in validation MAP that counts as an improvement.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_nmt: f64,
    pub lr_we: f64,
    /// Weight of the word-embedding loss.
    pub alpha: f64,
    /// Upper bound on target tokens per batch.
    pub batch_token_budget: usize,
    pub validate_every: u64,
    pub patience: usize,
    /// Steps to run in one call, counted from the starting state.
    pub max_steps: u64,
    pub seed: u64,
    /// CBOW window over augmented sequences.
    pub window: usize,
    /// Re-permute augmented sequences every epoch.
    pub reshuffle: bool,
    /// Run the word-embedding update before the translation update.
    pub we_first: bool,
    /// Longest translation produced during validation.
    pub decode_max_len: usize,
    /// Write elapsed milliseconds into telemetry; zero when disabled.
    pub record_wall_time: bool,
    /// Pairs with the highest ids kept out of training; when non-zero the
    /// telemetry loss is measured on them after every step.
    pub probe_pairs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_nmt: 0.01,
            lr_we: 1e-5,
            alpha: 0.1,
            batch_token_budget: 512,
            validate_every: 500,
            patience: 5,
            max_steps: 2000,
            seed: 0,
            window: 5,
            reshuffle: false,
            we_first: true,
            decode_max_len: 32,
            record_wall_time: true,
            probe_pairs: 0,
        }
    }
}

impl TrainConfig {
    /// `alpha` may be zero, which turns the auxiliary task into a no-op.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr_nmt > 0.0 && self.lr_we > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a non-negative number");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.validate_every == 0 {
            return bad("validate_every must be at least 1");
        }
        if self.batch_token_budget == 0 {
            return bad("batch token budget must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        Ok(())
    }
}

/// Groups item indices into batches of at most `budget` tokens.
///
/// Items are shuffled with the epoch's generator, stably sorted by length
/// so equal lengths stay shuffled, packed greedily, and the batch order is
/// shuffled again.
pub fn make_batches(items: &[(u64, usize)], budget: usize, seed: u64, epoch: u64) -> Result<Vec<Vec<usize>>> {
    if let Some(&(id, len)) = items.iter().find(|(_, len)| *len > budget) {
        return Err(Error::Config(format!(
            "pair {id} has {len} target tokens, more than the batch budget of {budget}"
        )));
    }
    let mut rng = rng_for(seed, Stream::Batches, epoch);
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| items[i].1);
    let mut batches = Vec::new();
    let mut current = Vec::new();
    let mut tokens = 0;
    for i in order {
        let len = items[i].1;
        if !current.is_empty() && tokens + len > budget {
            batches.push(std::mem::take(&mut current));
            tokens = 0;
        }
        current.push(i);
        tokens += len;
    }
    if !current.is_empty() {
        batches.push(current);
    }
    batches.shuffle(&mut rng);
    Ok(batches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub stop: bool,
    /// Index of the best validation so far.
    pub best: usize,
}

/// Stops once `patience` validations in a row failed to beat the best by
/// more than [`MIN_IMPROVEMENT`].
pub fn early_stop(history: &[f64], patience: usize) -> Result<StopDecision> {
    let (&first, rest) = history
        .split_first()
        .ok_or_else(|| Error::data("early stopping needs at least one validation"))?;
    let mut best = 0;
    let mut best_map = first;
    for (i, &m) in rest.iter().enumerate() {
        if m > best_map + MIN_IMPROVEMENT {
            best = i + 1;
            best_map = m;
        }
    }
    Ok(StopDecision {
        stop: history.len() - 1 - best >= patience,
        best,
    })
}

/// What validation needs: topics in the source language plus the
/// retrieval side to score their translations.
pub struct ValBundle<'a> {
    /// Query id and preprocessed source-language query tokens.
    pub topics: Vec<(String, TokenSeq)>,
    pub index: &'a InvertedIndex,
    pub qrels: &'a QrelSet,
    pub mu: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub map: f64,
    pub per_query: Vec<(String, f64)>,
    /// Topics whose translation was empty or matched nothing in the index.
    pub unanswered: Vec<String>,
}

/// Translates every topic with relevant documents, retrieves, and averages AP.
pub fn validate(model: &Model<f32>, vocabs: &Vocabs, bundle: &ValBundle, max_len: usize) -> Result<Validation> {
    let mut per_query = Vec::new();
    let mut unanswered = Vec::new();
    for (qid, query) in &bundle.topics {
        if bundle.qrels.relevant_count(qid) == 0 {
            continue;
        }
        let translated = translate(model, vocabs.src, vocabs.tgt, query, DecodeStrategy::Greedy, max_len)?;
        let hits = if translated.is_empty() {
            None
        } else {
            match bundle.index.search(&translated, bundle.depth, bundle.mu) {
                Ok(h) => Some(h),
                Err(Error::Unscoreable) => None,
                Err(e) => return Err(e),
            }
        };
        let ap = match hits {
            Some(h) => average_precision(h.iter().map(|h| h.doc_id.as_str()), qid, bundle.qrels)?,
            None => {
                log::warn!("topic {qid}: translation {:?} retrieves nothing, AP = 0", translated.0);
                unanswered.push(qid.clone());
                0.0
            }
        };
        per_query.push((qid.clone(), ap));
    }
    if per_query.is_empty() {
        return Err(Error::data("no validation topic has a relevant document"));
    }
    let map = mean(&per_query.iter().map(|(_, ap)| *ap).collect::<Vec<_>>())?;
    Ok(Validation {
        map,
        per_query,
        unanswered,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Vocabs<'a> {
    pub src: &'a Vocabulary,
    pub tgt: &'a Vocabulary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub step: u64,
    /// Translation loss per predicted token, on the probe pairs when
    /// configured and on the training batch otherwise.
    pub l_nmt: f64,
    /// Weighted CBOW loss per pair; absent when the update was skipped.
    pub l_we: Option<f64>,
    pub val_map: Option<f64>,
    pub wall_ms: u64,
}

pub fn telemetry_csv(rows: &[TelemetryRow], header: &ArtifactHeader) -> String {
    let mut out = header.comment_line();
    out.push_str("step,l_nmt,l_we,val_map,wall_ms\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{}",
            r.step,
            r.l_nmt,
            opt(r.l_we),
            opt(r.val_map),
            r.wall_ms
        );
    }
    out
}

/// Parses rows written by [`telemetry_csv`].
pub fn parse_telemetry(text: &str) -> Result<Vec<TelemetryRow>> {
    let path = std::path::Path::new("telemetry");
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("step,") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = || Error::parse(path, ln + 1, format!("bad telemetry row {line:?}"));
        if f.len() != 5 {
            return Err(err());
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err())
            }
        };
        rows.push(TelemetryRow {
            step: f[0].parse().map_err(|_| err())?,
            l_nmt: f[1].parse().map_err(|_| err())?,
            l_we: opt(f[2])?,
            val_map: opt(f[3])?,
            wall_ms: f[4].parse().map_err(|_| err())?,
        });
    }
    Ok(rows)
}

/// Model plus both optimizers and the global step count.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub model: Model<f32>,
    pub nmt_opt: Adam<f32>,
    pub we_opt: Adam<f32>,
    pub step: u64,
}

impl TrainState {
    pub fn new(model: Model<f32>, config: &TrainConfig) -> Self {
        let nmt_group = model.net.nmt_group(&model.store);
        let we_group = model.net.we_group();
        let nmt_opt = Adam::new(AdamConfig::with_lr(config.lr_nmt), &model.store, nmt_group);
        let we_opt = Adam::new(AdamConfig::with_lr(config.lr_we), &model.store, we_group);
        TrainState {
            model,
            nmt_opt,
            we_opt,
            step: 0,
        }
    }

    /// Applies the learning rates of `config` to both optimizers.
    pub fn set_learning_rates(&mut self, config: &TrainConfig) {
        self.nmt_opt.config.lr = config.lr_nmt;
        self.we_opt.config.lr = config.lr_we;
    }

    /// One word-embedding update on `alpha` times the summed CBOW loss.
    /// Returns the weighted loss.
    pub fn we_step(&mut self, pairs: &[ContextPivotPair], alpha: f64) -> Result<f64> {
        let mut tape = Tape::new();
        let loss = self.model.net.cbow_loss(&mut tape, &self.model.store, pairs)?;
        let scaled = tape.scale(loss, alpha as f32)?;
        let value = tape.value(scaled).item() as f64;
        tape.backward(scaled, &mut self.model.store)?;
        self.we_opt.step(&mut self.model.store);
        Ok(value)
    }

    /// One translation update; dropout masks come from the step's own stream.
    /// Returns the summed loss.
    pub fn nmt_step(&mut self, batch: &[EncodedPair], seed: u64, step: u64) -> Result<f64> {
        let mut rng = rng_for(seed, Stream::Dropout, step);
        let rate = self.model.config().dropout;
        let mut tape = Tape::new();
        let loss = self
            .model
            .net
            .nmt_loss(&mut tape, &self.model.store, batch, &mut Dropout::new(rate, &mut rng))?;
        let value = tape.value(loss).item() as f64;
        tape.backward(loss, &mut self.model.store)?;
        self.nmt_opt.step(&mut self.model.store);
        Ok(value)
    }

    pub fn to_checkpoint(&self, header: ArtifactHeader, vocabs: &Vocabs) -> Checkpoint {
        let mut ck = Checkpoint::new(header);
        ck.set_meta("step", self.step);
        self.model.store_into(&mut ck, &vocabs.src.hash(), &vocabs.tgt.hash());
        for (tag, opt) in [("nmt", &self.nmt_opt), ("we", &self.we_opt)] {
            ck.set_meta(&format!("adam_{tag}_t"), opt.steps());
            let (m, v) = opt.moments();
            for (k, &id) in opt.group().iter().enumerate() {
                let name = &self.model.store.get(id).name;
                ck.tensors.push((format!("adam.{tag}.m.{name}"), m[k].clone()));
                ck.tensors.push((format!("adam.{tag}.v.{name}"), v[k].clone()));
            }
        }
        ck
    }

    /// Restores a state saved by [`TrainState::to_checkpoint`]. Checkpoints
    /// without optimizer moments start both optimizers fresh.
    pub fn from_checkpoint(ck: &Checkpoint, vocabs: &Vocabs, config: &TrainConfig) -> Result<Self> {
        let model = Model::from_checkpoint(ck, &vocabs.src.hash(), &vocabs.tgt.hash())?;
        let mut state = TrainState::new(model, config);
        state.step = ck.meta_parse("step").unwrap_or(0);
        let store = &state.model.store;
        for (tag, opt) in [("nmt", &mut state.nmt_opt), ("we", &mut state.we_opt)] {
            let Ok(t) = ck.meta_parse::<u64>(&format!("adam_{tag}_t")) else {
                continue;
            };
            let fetch = |kind: &str, id: ParamId| -> Result<Tensor<f32>> {
                let name = format!("adam.{tag}.{kind}.{}", store.get(id).name);
                ck.tensor(&name)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("checkpoint lacks optimizer tensor {name}")))
            };
            let m = opt
                .group()
                .iter()
                .map(|&id| fetch("m", id))
                .collect::<Result<Vec<_>>>()?;
            let v = opt
                .group()
                .iter()
                .map(|&id| fetch("v", id))
                .collect::<Result<Vec<_>>>()?;
            opt.restore(m, v, t);
        }
        Ok(state)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// State at the best validation, or the last state if none improved.
    pub best: TrainState,
    pub best_map: Option<f64>,
    pub last_step: u64,
    pub telemetry: Vec<TelemetryRow>,
    pub stopped_early: bool,
    /// Batches whose sentences produced no CBOW pairs.
    pub skipped_we: usize,
    /// Sentence pairs cut to the model's maximum length.
    pub truncated: usize,
    /// Per-token loss over all training pairs at the last step, without
    /// dropout.
    pub final_train_loss: f64,
}

/// Translation-only training from `state`.
pub fn pretrain_baseline(
    state: TrainState,
    pairs: &[ParallelPair],
    vocabs: &Vocabs,
    val: &ValBundle,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    run(state, pairs, None, vocabs, val, config)
}

/// Interleaved training on the augmented corpus, usually from a baseline
/// state.
pub fn train_multitask(
    state: TrainState,
    rat: &RatDataset,
    vocabs: &Vocabs,
    val: &ValBundle,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    run(state, &rat.pairs(), Some(rat), vocabs, val, config)
}

/// Encodes a pair, cutting source and target to what the model can attend to.
fn encode_pair(pair: &ParallelPair, vocabs: &Vocabs, max_len: usize) -> (EncodedPair, bool) {
    let mut enc = EncodedPair::new(pair, vocabs.src, vocabs.tgt);
    let cut = enc.src.len() > max_len || enc.tgt.len() + 1 > max_len;
    enc.src.truncate(max_len);
    enc.tgt.truncate(max_len - 1);
    (enc, cut)
}

fn run(
    mut state: TrainState,
    pairs: &[ParallelPair],
    rat: Option<&RatDataset>,
    vocabs: &Vocabs,
    val: &ValBundle,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.len() <= config.probe_pairs {
        return Err(Error::data(format!(
            "{} training pairs leave nothing to train on after holding out {} probe pairs",
            pairs.len(),
            config.probe_pairs
        )));
    }
    state.set_learning_rates(config);
    let max_len = state.model.config().max_len;
    let mut truncated = 0;
    let encoded: Vec<EncodedPair> = pairs
        .iter()
        .map(|p| {
            let (e, cut) = encode_pair(p, vocabs, max_len);
            truncated += cut as usize;
            e
        })
        .collect();
    if truncated > 0 {
        log::warn!("{truncated} pairs truncated to {max_len} tokens");
    }
    let mut by_id: Vec<usize> = (0..pairs.len()).collect();
    by_id.sort_by_key(|&i| pairs[i].id);
    let probe_idx: Vec<usize> = by_id.split_off(pairs.len() - config.probe_pairs);
    // `by_id` now lists the training pairs in id order
    let train_idx = by_id;
    let probe: Vec<EncodedPair> = probe_idx.iter().map(|&i| encoded[i].clone()).collect();
    let lengths: Vec<(u64, usize)> = train_idx
        .iter()
        .map(|&i| (encoded[i].id, encoded[i].tgt.len()))
        .collect();

    let start = Instant::now();
    let wall = || {
        if config.record_wall_time {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    };
    let first_step = state.step;
    let end_step = first_step + config.max_steps;
    let mut telemetry = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<(TrainState, f64)> = None;
    let mut stopped_early = false;
    let mut skipped_we = 0;
    let mut consumed = 0u64;

    'epochs: for epoch in 0u64.. {
        if state.step >= end_step {
            break;
        }
        let batches = make_batches(&lengths, config.batch_token_budget, config.seed, epoch)?;
        let groups = rat.map(|r| {
            let shuffle = config.reshuffle.then_some((config.seed, epoch));
            let mut by_id: HashMap<u64, Vec<ContextPivotPair>> = HashMap::new();
            for g in r.groups(config.window, vocabs.tgt, shuffle) {
                by_id.insert(g.id, g.pairs);
            }
            by_id
        });
        for batch in batches {
            let batch: Vec<usize> = batch.into_iter().map(|k| train_idx[k]).collect();
            // replay the stream up to the starting step
            consumed += 1;
            if consumed <= first_step {
                continue;
            }
            if state.step >= end_step {
                break 'epochs;
            }
            let step = state.step + 1;
            let nmt_batch: Vec<EncodedPair> = batch.iter().map(|&i| encoded[i].clone()).collect();
            let predicted: usize = nmt_batch.iter().map(|e| e.tgt.len() + 1).sum();

            let we_pairs: Option<Vec<ContextPivotPair>> = groups.as_ref().map(|g| {
                batch
                    .iter()
                    .flat_map(|&i| g.get(&pairs[i].id).into_iter().flatten().cloned())
                    .collect()
            });
            let mut l_we = None;
            let mut we_update = |state: &mut TrainState| -> Result<()> {
                if let Some(wp) = &we_pairs {
                    if wp.is_empty() {
                        log::info!("step {step}: batch has no CBOW pairs, skipping the embedding update");
                        skipped_we += 1;
                    } else {
                        l_we = Some(state.we_step(wp, config.alpha)? / wp.len() as f64);
                    }
                }
                Ok(())
            };
            let l_nmt = if config.we_first {
                we_update(&mut state)?;
                state.nmt_step(&nmt_batch, config.seed, step)?
            } else {
                let l = state.nmt_step(&nmt_batch, config.seed, step)?;
                we_update(&mut state)?;
                l
            };
            state.step = step;
            if !l_nmt.is_finite() {
                return Err(Error::data(format!("translation loss diverged at step {step}")));
            }

            let last = step == end_step;
            let mut val_map = None;
            if (step - first_step) % config.validate_every == 0 || last {
                let v = validate(&state.model, vocabs, val, config.decode_max_len)?;
                log::info!("step {step}: validation MAP {:.4}", v.map);
                val_map = Some(v.map);
                history.push(v.map);
                let decision = early_stop(&history, config.patience)?;
                if decision.best == history.len() - 1 {
                    best = Some((state.clone(), v.map));
                }
                stopped_early = decision.stop && !last;
            }
            let l_nmt = if probe.is_empty() {
                l_nmt / predicted as f64
            } else {
                per_token_loss(&state.model, &probe)?
            };
            telemetry.push(TelemetryRow {
                step,
                l_nmt,
                l_we,
                val_map,
                wall_ms: wall(),
            });
            if stopped_early {
                break 'epochs;
            }
        }
    }
    let last_step = state.step;
    let train_set: Vec<EncodedPair> = train_idx.iter().map(|&i| encoded[i].clone()).collect();
    let final_train_loss = per_token_loss(&state.model, &train_set)?;
    let (best, best_map) = match best {
        Some((s, m)) => (s, Some(m)),
        None => (state, None),
    };
    Ok(TrainOutcome {
        best,
        best_map,
        last_step,
        telemetry,
        stopped_early,
        skipped_we,
        truncated,
        final_train_loss,
    })
}

/// Summed translation loss divided by the number of predicted tokens,
/// evaluated in chunks without dropout.
pub fn per_token_loss(model: &Model<f32>, pairs: &[EncodedPair]) -> Result<f64> {
    let mut loss = 0.0;
    for chunk in pairs.chunks(64) {
        loss += model.eval_nmt_loss(chunk)? as f64;
    }
    let tokens: usize = pairs.iter().map(|e| e.tgt.len() + 1).sum();
    Ok(loss / tokens as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_respect_budget() {
        let items = [(0, 4), (1, 4), (2, 4)];
        let b = make_batches(&items, 8, 1, 0).unwrap();
        let mut sizes: Vec<usize> = b.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
        assert_eq!(make_batches(&items, 100, 1, 0).unwrap().len(), 1);
        assert_eq!(b, make_batches(&items, 8, 1, 0).unwrap());
        let err = make_batches(&[(7, 9)], 8, 1, 0).unwrap_err();
        assert!(err.to_string().contains('7'));
    }

    #[test]
    fn batches_cover_every_item_once() {
        let items: Vec<(u64, usize)> = (0..50).map(|i| (i, 1 + (i as usize * 7) % 9)).collect();
        for epoch in 0..3 {
            let b = make_batches(&items, 20, 4, epoch).unwrap();
            let mut all: Vec<usize> = b.iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, (0..50).collect::<Vec<_>>());
            for batch in &b {
                assert!(batch.iter().map(|&i| items[i].1).sum::<usize>() <= 20);
            }
        }
    }

    #[test]
    fn early_stopping_rule() {
        let d = early_stop(&[0.1, 0.2, 0.19, 0.19, 0.19], 3).unwrap();
        assert_eq!(d, StopDecision { stop: true, best: 1 });
        assert!(!early_stop(&[0.1, 0.2, 0.19, 0.19], 3).unwrap().stop);
        let rising: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        for n in 1..=rising.len() {
            assert!(!early_stop(&rising[..n], 1).unwrap().stop);
        }
        assert!(!early_stop(&[0.3], 1).unwrap().stop);
        assert_eq!(
            early_stop(&[0.3, 0.3], 1).unwrap(),
            StopDecision { stop: true, best: 0 }
        );
        assert!(early_stop(&[], 1).is_err());
        // gains below the threshold do not count
        assert!(early_stop(&[0.3, 0.3 + 1e-7], 1).unwrap().stop);
    }

    #[test]
    fn telemetry_round_trip() {
        let rows = vec![
            TelemetryRow {
                step: 1,
                l_nmt: 2.5,
                l_we: Some(0.25),
                val_map: None,
                wall_ms: 3,
            },
            TelemetryRow {
                step: 2,
                l_nmt: 1.25,
                l_we: None,
                val_map: Some(0.5),
                wall_ms: 9,
            },
        ];
        let text = telemetry_csv(&rows, &ArtifactHeader::new(1, "h"));
        assert!(text.lines().nth(1) == Some("step,l_nmt,l_we,val_map,wall_ms"));
        assert_eq!(parse_telemetry(&text).unwrap(), rows);
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                lr_nmt: 0.0,
                ..Default::default()
            },
            TrainConfig {
                alpha: -1.0,
                ..Default::default()
            },
            TrainConfig {
                patience: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
