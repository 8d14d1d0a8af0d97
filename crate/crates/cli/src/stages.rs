use std::path::{Path, PathBuf};

use ratnmt_core::corpus::{
    load_documents, load_parallel, load_qrels, load_topics, pairs_to_jsonl, parse_pairs_jsonl, topic_query_tokens,
    Document, ParallelPair, Vocabulary,
};
use ratnmt_core::io::{self, read_to_string, ArtifactHeader};
use ratnmt_core::metrics::{evaluate, format_translations, load_translations, TermStats, TranslationRecord};
use ratnmt_core::model::{translate, Checkpoint, Model};
use ratnmt_core::ratgen::{build_tc_prime, RatDataset};
use ratnmt_core::retrieval::{format_run, InvertedIndex, RankedList};
use ratnmt_core::synth::{SynthConfig, SynthCorpus};
use ratnmt_core::textprep::{preprocess, StopList};
use ratnmt_core::trainer::{
    pretrain_baseline, telemetry_csv, train_multitask, TrainOutcome, TrainState, ValBundle, Vocabs,
};
use ratnmt_core::{Error, Result};
use serde_json::json;

use crate::config::RunConfig;
use crate::stamp::Stage;

const RUN_TAG: &str = "ratnmt";

const MODEL_KEYS: &[&str] = &[
    "d_model", "n_heads", "n_layers", "d_ff", "max_len", "dropout", "sharing",
];
const TRAIN_KEYS: &[&str] = &[
    "seed",
    "lr_nmt",
    "lr_we",
    "alpha",
    "batch_token_budget",
    "validate_every",
    "patience",
    "max_steps",
    "probe_pairs",
    "reshuffle",
    "we_first",
    "record_wall_time",
    "window",
    "decode_max_len",
    "mu",
    "depth",
];

fn execute(stage: Stage, force: bool, seed: u64, body: impl FnOnce(&ArtifactHeader) -> Result<()>) -> Result<()> {
    if !force && stage.up_to_date() {
        log::info!("{}: up to date", stage.name());
        return Ok(());
    }
    let header = ArtifactHeader::new(seed, stage.config_hash());
    body(&header)?;
    stage.seal()?;
    log::info!("{}: done", stage.name());
    Ok(())
}

fn with_header(header: &ArtifactHeader, body: &str) -> String {
    let mut out = header.comment_line();
    out.push_str(body);
    out
}

fn stoplist_terms(s: &StopList) -> String {
    s.iter().collect::<Vec<_>>().join("\n")
}

struct Workspace {
    tc: PathBuf,
    rc: PathBuf,
    vocab_src: PathBuf,
    vocab_tgt: PathBuf,
    index: PathBuf,
    tc_prime: PathBuf,
}

impl Workspace {
    fn new(cfg: &RunConfig) -> Self {
        Workspace {
            tc: cfg.in_workdir("tc.jsonl"),
            rc: cfg.in_workdir("rc.jsonl"),
            vocab_src: cfg.in_workdir("vocab.src.tsv"),
            vocab_tgt: cfg.in_workdir("vocab.tgt.tsv"),
            index: cfg.in_workdir("index.bin"),
            tc_prime: cfg.in_workdir("tc_prime.jsonl"),
        }
    }

    fn load_pairs(&self) -> Result<Vec<ParallelPair>> {
        parse_pairs_jsonl(&read_to_string(&self.tc)?, &self.tc)
    }

    fn load_vocabs(&self) -> Result<(Vocabulary, Vocabulary)> {
        Ok((
            Vocabulary::load_tsv(&self.vocab_src)?,
            Vocabulary::load_tsv(&self.vocab_tgt)?,
        ))
    }
}

/// Writes the synthetic corpus and a config fragment naming its files.
pub fn synth(cfg: &RunConfig, out: &Path, force: bool) -> Result<()> {
    let names = [
        "tc.tsv",
        "rc.jsonl",
        "topics.val.jsonl",
        "topics.test.jsonl",
        "qrels.txt",
        "lexicon.tsv",
        "data.conf",
    ];
    let outputs = names.iter().map(|n| out.join(n)).collect();
    let stage = Stage::new("synth", cfg, &["seed"], &[], outputs)?;
    execute(stage, force, cfg.seed, |header| {
        let corpus = SynthCorpus::generate(&SynthConfig {
            seed: cfg.seed,
            ..Default::default()
        })?;
        corpus.write_to(out, header)?;
        let conf = "tc = tc.tsv\nrc = rc.jsonl\nval_topics = topics.val.jsonl\ntopics = topics.test.jsonl\n\
                    qrels = qrels.txt\nsrc_stoplist = synthetic\ntgt_stoplist = synthetic\n";
        io::write(out.join("data.conf"), with_header(header, conf))
    })
}

pub fn prep(cfg: &RunConfig, force: bool) -> Result<()> {
    let (tc, rc) = (cfg.require("tc")?, cfg.require("rc")?);
    let src_stop = StopList::resolve(&cfg.src_stoplist)?;
    let tgt_stop = StopList::resolve(&cfg.tgt_stoplist)?;
    let ws = Workspace::new(cfg);
    let outputs = vec![ws.tc.clone(), ws.rc.clone(), ws.vocab_src.clone(), ws.vocab_tgt.clone()];
    let stage = Stage::new("prep", cfg, &[], &[&tc, &rc], outputs)?
        .with_extra("src_stoplist", &stoplist_terms(&src_stop))
        .with_extra("tgt_stoplist", &stoplist_terms(&tgt_stop));
    execute(stage, force, cfg.seed, |header| {
        let corpus = load_parallel(&tc, &src_stop, &tgt_stop)?;
        if corpus.dropped > 0 {
            log::warn!(
                "{} sentence pairs dropped: one side empty after preprocessing",
                corpus.dropped
            );
        }
        if corpus.pairs.is_empty() {
            return Err(Error::data(format!("{} has no usable sentence pairs", tc.display())));
        }
        let docs = load_documents(&rc, &tgt_stop)?;
        if docs.is_empty() {
            return Err(Error::data(format!("{} has no documents with content", rc.display())));
        }
        let mut docs_out = String::new();
        for d in &docs {
            docs_out.push_str(&json!({"id": d.doc_id, "text": d.tokens.join()}).to_string());
            docs_out.push('\n');
        }
        log::info!("prep: {} sentence pairs, {} documents", corpus.pairs.len(), docs.len());
        io::write(&ws.tc, with_header(header, &pairs_to_jsonl(&corpus.pairs)))?;
        io::write(&ws.rc, with_header(header, &docs_out))?;
        let src = Vocabulary::build_source(&corpus.pairs);
        let tgt = Vocabulary::build(&corpus.pairs, &docs);
        io::write(&ws.vocab_src, with_header(header, &src.to_tsv()))?;
        io::write(&ws.vocab_tgt, with_header(header, &tgt.to_tsv()))
    })
}

fn load_prepared_docs(path: &Path) -> Result<Vec<Document>> {
    load_documents(path, &StopList::empty("prepared"))
}

pub fn index_build(cfg: &RunConfig, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let stage = Stage::new("index build", cfg, &[], &[&ws.rc], vec![ws.index.clone()])?;
    execute(stage, force, cfg.seed, |header| {
        let index = InvertedIndex::build(&load_prepared_docs(&ws.rc)?)?;
        log::info!("index: {} documents, {} terms", index.doc_count(), index.term_count());
        index.save(&ws.index, header)
    })
}

pub fn ratgen(cfg: &RunConfig, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let keys = ["cap", "window", "mu", "seed"];
    let stage = Stage::new("ratgen", cfg, &keys, &[&ws.tc, &ws.index], vec![ws.tc_prime.clone()])?;
    execute(stage, force, cfg.seed, |header| {
        let index = InvertedIndex::load(&ws.index)?;
        let rat = build_tc_prime(&ws.load_pairs()?, &index, &cfg.rat_config())?;
        if rat.degraded > 0 {
            log::warn!(
                "{} sentences matched no document and were kept unaugmented",
                rat.degraded
            );
        }
        io::write(&ws.tc_prime, with_header(header, &rat.to_jsonl()))
    })
}

fn val_topics(cfg: &RunConfig, stop: &StopList) -> Result<Vec<(String, ratnmt_core::textprep::TokenSeq)>> {
    load_topics(cfg.require("val_topics")?)?
        .iter()
        .map(|t| Ok((t.qid.clone(), topic_query_tokens(t, stop)?)))
        .collect()
}

fn save_outcome(
    out: &TrainOutcome,
    phase: &str,
    header: &ArtifactHeader,
    vocabs: &Vocabs,
    ckpt: &Path,
    telemetry: &Path,
) -> Result<()> {
    let mut ck = out.best.to_checkpoint(header.clone(), vocabs);
    ck.set_meta("phase", phase);
    ck.set_meta("last_step", out.last_step);
    ck.set_meta("final_train_loss", format!("{:.6}", out.final_train_loss));
    ck.set_meta("stopped_early", out.stopped_early);
    if let Some(m) = out.best_map {
        ck.set_meta("best_map", format!("{m:.6}"));
    }
    ck.save(ckpt)?;
    io::write(telemetry, telemetry_csv(&out.telemetry, header))?;
    log::info!(
        "{phase}: stopped at step {}, best validation MAP {}, kept step {}, train loss/token {:.4}",
        out.last_step,
        out.best_map.map_or_else(|| "n/a".to_string(), |m| format!("{m:.4}")),
        out.best.step,
        out.final_train_loss
    );
    Ok(())
}

pub fn train_base(cfg: &RunConfig, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let (val_path, qrels_path) = (cfg.require("val_topics")?, cfg.require("qrels")?);
    let src_stop = StopList::resolve(&cfg.src_stoplist)?;
    let ckpt = cfg.in_workdir("baseline.ckpt");
    let telemetry = cfg.in_workdir("telemetry.baseline.csv");
    let keys = [MODEL_KEYS, TRAIN_KEYS].concat();
    let inputs: [&Path; 6] = [&ws.tc, &ws.vocab_src, &ws.vocab_tgt, &ws.index, &val_path, &qrels_path];
    let stage = Stage::new(
        "train baseline",
        cfg,
        &keys,
        &inputs,
        vec![ckpt.clone(), telemetry.clone()],
    )?
    .with_extra("src_stoplist", &stoplist_terms(&src_stop));
    execute(stage, force, cfg.seed, |header| {
        let (src, tgt) = ws.load_vocabs()?;
        let vocabs = Vocabs { src: &src, tgt: &tgt };
        let index = InvertedIndex::load(&ws.index)?;
        let qrels = load_qrels(&qrels_path)?;
        let val = ValBundle {
            topics: val_topics(cfg, &src_stop)?,
            index: &index,
            qrels: &qrels,
            mu: cfg.mu,
            depth: cfg.depth,
        };
        let tcfg = cfg.train_config();
        let model = Model::new(cfg.model_config(src.len(), tgt.len()), cfg.sharing, cfg.seed)?;
        let out = pretrain_baseline(TrainState::new(model, &tcfg), &ws.load_pairs()?, &vocabs, &val, &tcfg)?;
        save_outcome(&out, "baseline", header, &vocabs, &ckpt, &telemetry)
    })
}

pub fn train_multi(cfg: &RunConfig, from: Option<&Path>, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let from = from.map_or_else(|| cfg.in_workdir("baseline.ckpt"), Path::to_path_buf);
    let (val_path, qrels_path) = (cfg.require("val_topics")?, cfg.require("qrels")?);
    let src_stop = StopList::resolve(&cfg.src_stoplist)?;
    let ckpt = cfg.in_workdir("multitask.ckpt");
    let telemetry = cfg.in_workdir("telemetry.multitask.csv");
    let inputs: [&Path; 7] = [
        &ws.tc_prime,
        &from,
        &ws.vocab_src,
        &ws.vocab_tgt,
        &ws.index,
        &val_path,
        &qrels_path,
    ];
    let stage = Stage::new(
        "train multitask",
        cfg,
        TRAIN_KEYS,
        &inputs,
        vec![ckpt.clone(), telemetry.clone()],
    )?
    .with_extra("src_stoplist", &stoplist_terms(&src_stop));
    execute(stage, force, cfg.seed, |header| {
        let (src, tgt) = ws.load_vocabs()?;
        let vocabs = Vocabs { src: &src, tgt: &tgt };
        let index = InvertedIndex::load(&ws.index)?;
        let qrels = load_qrels(&qrels_path)?;
        let val = ValBundle {
            topics: val_topics(cfg, &src_stop)?,
            index: &index,
            qrels: &qrels,
            mu: cfg.mu,
            depth: cfg.depth,
        };
        let tcfg = cfg.train_config();
        let state = TrainState::from_checkpoint(&Checkpoint::load(&from)?, &vocabs, &tcfg)?;
        let rat = RatDataset::load(&ws.tc_prime)?;
        let out = train_multitask(state, &rat, &vocabs, &val, &tcfg)?;
        save_outcome(&out, "multitask", header, &vocabs, &ckpt, &telemetry)
    })
}

pub fn translate_topics(cfg: &RunConfig, checkpoint: &Path, topics: &Path, out: &Path, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let src_stop = StopList::resolve(&cfg.src_stoplist)?;
    let tgt_stop = StopList::resolve(&cfg.tgt_stoplist)?;
    let keys = ["decode", "decode_max_len"];
    let inputs: [&Path; 4] = [checkpoint, topics, &ws.vocab_src, &ws.vocab_tgt];
    let stage = Stage::new("translate", cfg, &keys, &inputs, vec![out.to_path_buf()])?
        .with_extra("src_stoplist", &stoplist_terms(&src_stop))
        .with_extra("tgt_stoplist", &stoplist_terms(&tgt_stop));
    execute(stage, force, cfg.seed, |header| {
        let (src, tgt) = ws.load_vocabs()?;
        let model = Model::from_checkpoint(&Checkpoint::load(checkpoint)?, &src.hash(), &tgt.hash())?;
        let mut records = Vec::new();
        for topic in load_topics(topics)? {
            let query = topic_query_tokens(&topic, &src_stop)?;
            let output = translate(&model, &src, &tgt, &query, cfg.decode, cfg.decode_max_len)?;
            let human = topic
                .human
                .as_deref()
                .map(|h| preprocess(h, &tgt_stop).into_inner())
                .unwrap_or_default();
            records.push(TranslationRecord::new(topic.qid, output.into_inner(), human));
        }
        io::write(out, with_header(header, &format_translations(&records)))
    })
}

pub fn retrieve(cfg: &RunConfig, translations: &Path, out: &Path, force: bool) -> Result<()> {
    let ws = Workspace::new(cfg);
    let stage = Stage::new(
        "retrieve",
        cfg,
        &["mu", "depth"],
        &[translations, &ws.index],
        vec![out.to_path_buf()],
    )?;
    execute(stage, force, cfg.seed, |header| {
        let index = InvertedIndex::load(&ws.index)?;
        let mut lists = Vec::new();
        for rec in load_translations(translations)? {
            let hits = match index.search(rec.query(), cfg.depth, cfg.mu) {
                Ok(h) => h,
                Err(Error::Unscoreable) => {
                    log::warn!("query {}: no term occurs in the collection, nothing retrieved", rec.qid);
                    Vec::new()
                }
                Err(e) => return Err(e),
            };
            lists.push(RankedList::new(rec.qid, hits));
        }
        io::write(out, with_header(header, &format_run(&lists, RUN_TAG)))
    })
}

pub struct EvalInputs<'a> {
    pub run: &'a Path,
    pub qrels: &'a Path,
    pub translations: Option<&'a Path>,
    pub vocab: &'a Path,
    pub out_dir: &'a Path,
}

pub fn eval(cfg: &RunConfig, args: &EvalInputs, force: bool) -> Result<()> {
    let mut inputs = vec![args.run, args.qrels];
    if let Some(t) = args.translations {
        inputs.extend([t, args.vocab]);
    }
    let summary_path = args.out_dir.join("summary.csv");
    let per_query_path = args.out_dir.join("per_query.csv");
    let stage = Stage::new(
        "eval",
        cfg,
        &[],
        &inputs,
        vec![summary_path.clone(), per_query_path.clone()],
    )?;
    execute(stage, force, cfg.seed, |header| {
        let runs = ratnmt_core::retrieval::load_run(args.run)?;
        let qrels = load_qrels(args.qrels)?;
        let summary = match args.translations {
            Some(t) => {
                let records = load_translations(t)?;
                let stats = TermStats::from_vocab(&Vocabulary::load_tsv(args.vocab)?);
                evaluate(&runs, &qrels, Some((&records, &stats)))?
            }
            None => evaluate(&runs, &qrels, None)?,
        };
        io::write(&summary_path, with_header(header, &summary.summary_csv()))?;
        io::write(&per_query_path, with_header(header, &summary.per_query_csv()))?;
        print!("{}", summary.summary_csv());
        Ok(())
    })
}
