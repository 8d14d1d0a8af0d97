//! Query-translation NMT trained jointly with a relevance-based auxiliary
//! word-embedding task, and the cross-lingual retrieval loop used to
//! evaluate it.

pub mod corpus;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod ratgen;
pub mod retrieval;
pub mod seed;
pub mod synth;
pub mod textprep;
pub mod trainer;

pub use error::{Error, Result};
