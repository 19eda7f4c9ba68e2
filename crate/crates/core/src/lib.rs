//! Auditing toolkit for systematic sentiment disagreement between classifiers
//! on Arabic news-headline corpora.
//!
//! The pipeline runs in this order: [`corpus`] ingestion, [`normalize`]
//! cleaning, frame/sentiment classification through pluggable [`backends`]
//! speaking the [`protocol`], a majority-vote [`ensemble`] benchmark, the
//! information-theoretic [`metrics`], and finally the tables in [`report`].

pub mod backends;
pub mod config;
pub mod corpus;
pub mod ensemble;
pub mod hashing;
pub mod metrics;
pub mod normalize;
pub mod protocol;
pub mod reference;
pub mod report;
pub mod simulation;

pub use corpus::{Corpus, HeadlineRecord, KeywordStream};
pub use metrics::SentimentDistribution;
pub use normalize::{CleanHeadline, NormalizationConfig};
pub use protocol::{Frame, Sentiment};

/// Tool version stamped into every exported artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
