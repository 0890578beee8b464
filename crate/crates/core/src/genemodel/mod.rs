//! Transcript coordinate math: genomic to CDS mapping, codons, and variant classes.

mod classify;
mod code;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

pub use classify::{classify, classify_span, headline, Annotation, CodingChange};
pub use code::{complement, reverse_complement, GeneticCode};

use crate::error::{Error, Result};
use crate::records::Genome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strand {
    Forward,
    Reverse,
}

/// Per-transcript consequence classes, declared from most to least severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnotationType {
    StopGain,
    StopLoss,
    StartLoss,
    FrameshiftIndel,
    Nonsynonymous,
    InframeIndel,
    SpliceSite,
    Synonymous,
    Utr5,
    Utr3,
    NoncodingExon,
    Intron,
    Upstream,
    Downstream,
    Intergenic,
    Unknown,
}

impl AnnotationType {
    pub const ALL: [AnnotationType; 16] = [
        AnnotationType::StopGain,
        AnnotationType::StopLoss,
        AnnotationType::StartLoss,
        AnnotationType::FrameshiftIndel,
        AnnotationType::Nonsynonymous,
        AnnotationType::InframeIndel,
        AnnotationType::SpliceSite,
        AnnotationType::Synonymous,
        AnnotationType::Utr5,
        AnnotationType::Utr3,
        AnnotationType::NoncodingExon,
        AnnotationType::Intron,
        AnnotationType::Upstream,
        AnnotationType::Downstream,
        AnnotationType::Intergenic,
        AnnotationType::Unknown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnnotationType::StopGain => "StopGain",
            AnnotationType::StopLoss => "StopLoss",
            AnnotationType::StartLoss => "StartLoss",
            AnnotationType::FrameshiftIndel => "FrameshiftIndel",
            AnnotationType::Nonsynonymous => "Nonsynonymous",
            AnnotationType::InframeIndel => "InframeIndel",
            AnnotationType::SpliceSite => "SpliceSite",
            AnnotationType::Synonymous => "Synonymous",
            AnnotationType::Utr5 => "Utr5",
            AnnotationType::Utr3 => "Utr3",
            AnnotationType::NoncodingExon => "NoncodingExon",
            AnnotationType::Intron => "Intron",
            AnnotationType::Upstream => "Upstream",
            AnnotationType::Downstream => "Downstream",
            AnnotationType::Intergenic => "Intergenic",
            AnnotationType::Unknown => "Unknown",
        }
    }

    /// Position in the precedence order, 0 being the highest.
    pub fn rank(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AnnotationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnnotationType {
    type Err = Error;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        AnnotationType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown annotation type '{s}'")))
    }
}

/// The highest-precedence type; ties go to the earliest element.
///
/// # Panics
/// On an empty slice.
pub fn prioritize(types: &[AnnotationType]) -> AnnotationType {
    *types
        .iter()
        .min_by_key(|t| t.rank())
        .expect("prioritize needs at least one annotation")
}

/// Upstream and downstream window sizes in bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flanks {
    pub upstream: u64,
    pub downstream: u64,
}

impl Default for Flanks {
    fn default() -> Self {
        Flanks { upstream: 1000, downstream: 1000 }
    }
}

/// Bases on the intron side of an exon boundary that count as splice site.
pub const SPLICE_WINDOW: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CdsPosition {
    pub offset: u64,
    pub frame: u8,
    pub codon_index: u64,
}

impl CdsPosition {
    fn new(offset: u64) -> Self {
        CdsPosition { offset, frame: (offset % 3) as u8, codon_index: offset / 3 }
    }
}

/// Where a genomic position falls relative to one transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locus {
    Coding(CdsPosition),
    Region(AnnotationType),
    /// Beyond the transcript and its flanking windows.
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptModel {
    pub gene: String,
    pub name: String,
    pub chrom: String,
    pub strand: Strand,
    pub tx: Range<u64>,
    /// Empty for non-coding transcripts.
    pub cds: Range<u64>,
    pub exons: Vec<Range<u64>>,
    coding: Vec<Range<u64>>,
    coding_before: Vec<u64>,
    cds_len: u64,
}

impl TranscriptModel {
    pub fn new(
        gene: &str,
        name: &str,
        chrom: &str,
        strand: Strand,
        tx: Range<u64>,
        cds: Range<u64>,
        exons: Vec<Range<u64>>,
    ) -> Result<Self> {
        let bad = |msg: String| Error::parse(format!("transcript {name}: {msg}"));
        if tx.start >= tx.end {
            return Err(bad(format!("empty transcript span {}-{}", tx.start, tx.end)));
        }
        if exons.is_empty() {
            return Err(bad("no exons".into()));
        }
        for (i, e) in exons.iter().enumerate() {
            if e.start >= e.end || e.start < tx.start || e.end > tx.end {
                return Err(bad(format!("exon {}-{} is empty or outside the transcript", e.start, e.end)));
            }
            if i > 0 && e.start < exons[i - 1].end {
                return Err(bad("exons overlap or are not ascending".into()));
            }
        }
        let cds = if cds.start >= cds.end { cds.start..cds.start } else { cds };
        let mut coding = Vec::new();
        let mut coding_before = Vec::new();
        let mut cds_len = 0;
        if !cds.is_empty() {
            if cds.start < tx.start || cds.end > tx.end {
                return Err(bad("CDS outside the transcript".into()));
            }
            let inside = |p: u64| exons.iter().any(|e| e.contains(&p));
            if !inside(cds.start) || !inside(cds.end - 1) {
                return Err(bad("CDS boundary falls outside an exon".into()));
            }
            for e in &exons {
                let (b, en) = (e.start.max(cds.start), e.end.min(cds.end));
                if b < en {
                    coding_before.push(cds_len);
                    coding.push(b..en);
                    cds_len += en - b;
                }
            }
        }
        Ok(TranscriptModel {
            gene: gene.to_string(),
            name: name.to_string(),
            chrom: chrom.to_string(),
            strand,
            tx,
            cds,
            exons,
            coding,
            coding_before,
            cds_len,
        })
    }

    pub fn is_coding(&self) -> bool {
        !self.cds.is_empty()
    }

    /// Spliced CDS length.
    pub fn cds_len(&self) -> u64 {
        self.cds_len
    }

    /// Set when the spliced CDS is not a whole number of codons.
    pub fn frame_warning(&self) -> bool {
        self.is_coding() && !self.cds_len.is_multiple_of(3)
    }

    /// Span covered by the transcript plus its flanking windows.
    pub fn extended(&self, flanks: Flanks) -> Range<u64> {
        let (left, right) = match self.strand {
            Strand::Forward => (flanks.upstream, flanks.downstream),
            Strand::Reverse => (flanks.downstream, flanks.upstream),
        };
        self.tx.start.saturating_sub(left)..self.tx.end + right
    }

    /// Strand-oriented CDS offset of a coding base.
    pub fn cds_offset(&self, gpos: u64) -> Option<u64> {
        let i = self.coding.partition_point(|s| s.end <= gpos);
        let seg = self.coding.get(i).filter(|s| s.contains(&gpos))?;
        let fwd = self.coding_before[i] + (gpos - seg.start);
        Some(match self.strand {
            Strand::Forward => fwd,
            Strand::Reverse => self.cds_len - 1 - fwd,
        })
    }

    /// Genomic position of a strand-oriented CDS offset.
    pub fn genomic_pos(&self, offset: u64) -> Option<u64> {
        if offset >= self.cds_len {
            return None;
        }
        let fwd = match self.strand {
            Strand::Forward => offset,
            Strand::Reverse => self.cds_len - 1 - offset,
        };
        let i = self.coding_before.partition_point(|&b| b <= fwd) - 1;
        Some(self.coding[i].start + (fwd - self.coding_before[i]))
    }

    pub fn locate(&self, gpos: u64, flanks: Flanks) -> Locus {
        use AnnotationType::*;
        let fwd = self.strand == Strand::Forward;
        if gpos < self.tx.start {
            let (window, kind) = if fwd { (flanks.upstream, Upstream) } else { (flanks.downstream, Downstream) };
            return if self.tx.start - gpos <= window { Locus::Region(kind) } else { Locus::Outside };
        }
        if gpos >= self.tx.end {
            let (window, kind) = if fwd { (flanks.downstream, Downstream) } else { (flanks.upstream, Upstream) };
            return if gpos - self.tx.end < window { Locus::Region(kind) } else { Locus::Outside };
        }
        let i = self.exons.partition_point(|e| e.end <= gpos);
        if self.exons.get(i).is_some_and(|e| e.contains(&gpos)) {
            if !self.is_coding() {
                return Locus::Region(NoncodingExon);
            }
            if let Some(off) = self.cds_offset(gpos) {
                return Locus::Coding(CdsPosition::new(off));
            }
            let before_cds = gpos < self.cds.start;
            return Locus::Region(if before_cds == fwd { Utr5 } else { Utr3 });
        }
        // intronic: exons[i-1] (if any) ends at or before gpos, exons[i] (if any) starts after it
        let after_donor = i > 0 && i < self.exons.len() && gpos < self.exons[i - 1].end + SPLICE_WINDOW;
        let before_acceptor = i > 0 && i < self.exons.len() && self.exons[i].start - gpos <= SPLICE_WINDOW;
        Locus::Region(if after_donor || before_acceptor { SpliceSite } else { Intron })
    }

    /// The three bases of codon `codon_index` in transcript orientation, or None when the
    /// codon runs past the end of the annotated CDS.
    pub fn codon_at(&self, genome: &dyn Genome, codon_index: u64) -> Result<Option<String>> {
        let first = codon_index * 3;
        if first + 3 > self.cds_len {
            return Ok(None);
        }
        let pos: Vec<u64> = (first..first + 3).map(|o| self.genomic_pos(o).expect("offset within CDS")).collect();
        let (lo, hi) = (*pos.iter().min().unwrap(), *pos.iter().max().unwrap());
        let forward = if hi - lo == 2 {
            genome.fetch(&self.chrom, lo, hi + 1)?
        } else {
            let mut sorted = pos.clone();
            sorted.sort_unstable();
            let mut s = String::with_capacity(3);
            for p in sorted {
                s.push_str(&genome.fetch(&self.chrom, p, p + 1)?);
            }
            s
        };
        Ok(Some(match self.strand {
            Strand::Forward => forward,
            Strand::Reverse => reverse_complement(&forward)?,
        }))
    }
}
