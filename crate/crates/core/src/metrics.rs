//! One-pass QC summaries: transition/transversion ratio and annotation-type counts.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::io::BufRead;

use crate::annotator::{parse_headline, ANNO_KEY};
use crate::error::{Error, Result};
use crate::genemodel::{prioritize, AnnotationType};
use crate::records::read_line_into;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TsTvCounts {
    pub transitions: u64,
    pub transversions: u64,
    /// Alleles that are not single-base A/C/G/T substitutions.
    pub non_snv: u64,
}

fn purine(b: u8) -> bool {
    matches!(b, b'A' | b'G')
}

fn is_acgt(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'T')
}

impl TsTvCounts {
    pub fn add(&mut self, ref_allele: &str, alt: &str) {
        let (r, a) = (ref_allele.as_bytes(), alt.as_bytes());
        if r.len() != 1 || a.len() != 1 {
            self.non_snv += 1;
            return;
        }
        let (r, a) = (r[0].to_ascii_uppercase(), a[0].to_ascii_uppercase());
        if !is_acgt(r) || !is_acgt(a) || r == a {
            self.non_snv += 1;
        } else if purine(r) == purine(a) {
            self.transitions += 1;
        } else {
            self.transversions += 1;
        }
    }

    pub fn merge(&mut self, other: &TsTvCounts) {
        self.transitions += other.transitions;
        self.transversions += other.transversions;
        self.non_snv += other.non_snv;
    }

    /// None when there are no transversions.
    pub fn ratio(&self) -> Option<f64> {
        (self.transversions > 0).then(|| self.transitions as f64 / self.transversions as f64)
    }

    /// Four decimals, or `NA`.
    pub fn ratio_text(&self) -> String {
        self.ratio().map(|r| format!("{r:.4}")).unwrap_or_else(|| "NA".to_string())
    }
}

/// Ts/Tv over (ref, alts) pairs; every alternate allele counts once.
pub fn tstv<'a>(sites: impl IntoIterator<Item = (&'a str, &'a [&'a str])>) -> TsTvCounts {
    let mut c = TsTvCounts::default();
    for (r, alts) in sites {
        for a in alts {
            c.add(r, a);
        }
    }
    c
}

/// Name under which records without an ANNO headline are counted.
pub const UNANNOTATED: &str = "Unannotated";

/// Counts of headline types, one per record (the most severe across its alleles).
pub fn type_counts<'a>(anno_values: impl IntoIterator<Item = Option<&'a str>>) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for v in anno_values {
        *counts.entry(record_type(v).to_string()).or_default() += 1;
    }
    counts
}

/// Most severe headline type in an ANNO value, or [`UNANNOTATED`].
pub fn record_type(anno: Option<&str>) -> &'static str {
    let kinds: Vec<AnnotationType> =
        anno.into_iter().flat_map(|v| v.split(',')).filter_map(|h| parse_headline(h).map(|h| h.kind)).collect();
    if kinds.is_empty() {
        UNANNOTATED
    } else {
        prioritize(&kinds).name()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub records: u64,
    pub tstv: TsTvCounts,
    pub types: BTreeMap<String, u64>,
}

impl DatasetStats {
    /// `key: value` lines; types follow the annotation precedence order.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records: {}", self.records);
        let _ = writeln!(s, "transitions: {}", self.tstv.transitions);
        let _ = writeln!(s, "transversions: {}", self.tstv.transversions);
        let _ = writeln!(s, "non_snv: {}", self.tstv.non_snv);
        let _ = writeln!(s, "tstv: {}", self.tstv.ratio_text());
        let order = AnnotationType::ALL.iter().map(|t| t.name()).chain([UNANNOTATED]);
        for name in order {
            if let Some(n) = self.types.get(name) {
                let _ = writeln!(s, "type.{name}: {n}");
            }
        }
        s
    }

    /// Tab-delimited `key<TAB>value` form of the report.
    pub fn report_tsv(&self) -> String {
        self.report().lines().filter_map(|l| l.split_once(": ")).map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }
}

/// Streams VCF-like text (`#` headers, then CHROM POS ID REF ALT ... INFO).
pub fn dataset_stats(mut reader: impl BufRead) -> Result<DatasetStats> {
    let mut stats = DatasetStats::default();
    let mut line = String::new();
    let mut n = 0u64;
    while read_line_into(&mut reader, &mut line)? {
        n += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.splitn(9, '\t').collect();
        if cols.len() < 5 {
            return Err(Error::Format(format!("line {n}: expected at least 5 columns")));
        }
        stats.records += 1;
        for alt in cols[4].split(',') {
            stats.tstv.add(cols[3], alt);
        }
        let anno = cols.get(7).and_then(|info| info.split(';').find_map(|kv| kv.strip_prefix(ANNO_KEY)?.strip_prefix('=')));
        *stats.types.entry(record_type(anno).to_string()).or_default() += 1;
    }
    Ok(stats)
}
