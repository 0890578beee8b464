//! Single-pass annotation of VCF, METAL and generic tab files into an indexed project file.

mod genes;
mod intervals;
mod keys;
mod scoredb;
mod stream;
mod summary;

use std::path::PathBuf;
use std::time::Instant;

pub use genes::GeneDb;
pub use intervals::{build_interval_db, IntervalSet, OrderedIntervals};
pub use scoredb::ScoreDb;
pub use keys::{full_text, headline_text, parse_full, parse_headline, GeneEntry, Headline, ANNOFULL_KEY, ANNO_KEY};
pub use stream::AnnotatedOutput;
pub use summary::{peak_rss_kb, RunSummary};

use crate::error::{Error, Result};
use crate::genemodel::{classify, classify_span, Annotation, Flanks, GeneticCode};
use crate::records::{open_text_input, Genome, IndexedFasta, MarkerSpec, Variant};
use crate::tabindex::TabSchema;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputFormat {
    Vcf,
    /// Generic tab file located through a schema; records carry no alleles.
    Tab(TabSchema),
    /// Header row plus a `chr:pos[:ref[:alt]]` marker column or explicit CHR/POS columns.
    Metal(MarkerSpec),
}

#[derive(Debug, Clone)]
pub struct AnnotationConfig {
    pub gene_path: PathBuf,
    pub reference_path: PathBuf,
    pub regions: Vec<(String, PathBuf)>,
    pub scores: Vec<(String, PathBuf)>,
    pub flanks: Flanks,
    pub input: InputFormat,
}

impl AnnotationConfig {
    pub fn new(gene_path: impl Into<PathBuf>, reference_path: impl Into<PathBuf>) -> Self {
        AnnotationConfig {
            gene_path: gene_path.into(),
            reference_path: reference_path.into(),
            regions: Vec::new(),
            scores: Vec::new(),
            flanks: Flanks::default(),
            input: InputFormat::Vcf,
        }
    }

    /// Labels must be unique, match `[A-Za-z0-9_]+`, and not shadow the annotation keys.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for label in self.regions.iter().chain(&self.scores).map(|(l, _)| l) {
            if label.is_empty() || !label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                return Err(Error::Usage(format!("label '{label}' must match [A-Za-z0-9_]+")));
            }
            if label == ANNO_KEY || label == ANNOFULL_KEY || label == "CHROM" || label == "POS" {
                return Err(Error::Usage(format!("label '{label}' is reserved")));
            }
            if !seen.insert(label) {
                return Err(Error::Usage(format!("label '{label}' is used twice")));
            }
        }
        Ok(())
    }
}

/// Loaded databases plus the reference; the per-record work happens in [`Annotator::run`].
pub struct Annotator {
    genes: GeneDb,
    genome: Box<dyn Genome + Send + Sync>,
    regions: Vec<(String, IntervalSet)>,
    scores: Vec<ScoreDb>,
    code: GeneticCode,
    started: Instant,
}

impl Annotator {
    pub fn new(
        genes: GeneDb,
        genome: Box<dyn Genome + Send + Sync>,
        regions: Vec<(String, IntervalSet)>,
        scores: Vec<ScoreDb>,
    ) -> Self {
        Annotator { genes, genome, regions, scores, code: GeneticCode::universal(), started: Instant::now() }
    }

    /// Loads everything named by the configuration.
    pub fn open(config: &AnnotationConfig) -> Result<Self> {
        config.validate()?;
        let started = Instant::now();
        let genes = GeneDb::load(&config.gene_path, config.flanks)?;
        let genome = IndexedFasta::open(&config.reference_path)?;
        let mut regions = Vec::new();
        for (label, path) in &config.regions {
            let set = build_interval_db(open_text_input(path)?)
                .map_err(|e| Error::Config(format!("region database {label} ({}): {e}", path.display())))?;
            regions.push((label.clone(), set));
        }
        let scores = config.scores.iter().map(|(l, p)| ScoreDb::open(l, p)).collect::<Result<_>>()?;
        let mut a = Annotator::new(genes, Box::new(genome), regions, scores);
        a.started = started;
        Ok(a)
    }

    pub fn genes(&self) -> &GeneDb {
        &self.genes
    }

    pub fn genome(&self) -> &dyn Genome {
        self.genome.as_ref()
    }

    /// Per-transcript annotations of one allele, in transcript start order.
    pub fn annotate_variant(&self, v: &Variant) -> Result<Vec<Annotation>> {
        let beg = v.start().saturating_sub(1);
        let end = v.start() + v.ref_allele.len() as u64 + 1;
        let flanks = self.genes.flanks();
        let mut out = Vec::new();
        for t in self.genes.near(&v.chrom, beg, end) {
            if let Some(a) = classify(t, v, self.genome.as_ref(), flanks, &self.code)? {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Annotations of a bare position (0-based), used when alleles are unknown.
    pub fn annotate_position(&self, chrom: &str, pos: u64) -> Vec<Annotation> {
        let flanks = self.genes.flanks();
        self.genes
            .near(chrom, pos, pos + 1)
            .into_iter()
            .filter_map(|t| classify_span(t, pos..pos + 1, flanks))
            .collect()
    }

    /// Names of the regions of database `i` containing 0-based `pos`.
    pub fn region_names(&self, i: usize, chrom: &str, pos: u64) -> Vec<&str> {
        self.regions[i].1.at(chrom, pos).into_iter().map(String::as_str).collect()
    }

    pub fn region_labels(&self) -> impl Iterator<Item = &str> {
        self.regions.iter().map(|(l, _)| l.as_str())
    }

    pub fn score_labels(&self) -> impl Iterator<Item = &str> {
        self.scores.iter().map(|s| s.label())
    }
}
