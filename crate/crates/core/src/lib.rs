//! Streaming variant annotation into block-compressed, range-indexed project
//! files, and fast random-access queries over them.
//!
//! The pipeline has two halves. The annotator reads a VCF, METAL or generic
//! tab file once, attaches gene, region and score annotations, and writes a
//! BGZF file plus a tabix-compatible `.tbi` index. The query side opens that
//! project and extracts records by range, gene or annotation type, including
//! genotype matrices and summary-statistic rows.

pub mod annotator;
pub mod bgzf;
pub mod error;
pub mod genemodel;
pub mod metrics;
pub mod query;
pub mod records;
pub mod tabindex;

pub use error::{Error, ErrorClass, Result};
