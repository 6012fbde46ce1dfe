//! Rare-disease publication retrieval, funding-acknowledgement
//! classification and field-normalized citation indicators.
//!
//! The pipeline runs corpus ingestion and filtering, disease-term matching,
//! funder classification per focal country, and P/MNCS aggregation. Every
//! per-record stage is a pure function and can run on a rayon pool (feature
//! `parallel`, on by default) with results merged in record order.

pub mod corpus;
pub mod country;
pub mod funders;
pub mod indicators;
pub mod lexicon;
pub mod matcher;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod text;

