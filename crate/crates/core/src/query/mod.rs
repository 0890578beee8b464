//! Random-access extraction from annotated project files.

mod matrix;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use matrix::{parse_dosage, GenotypeMatrix, VariantDescriptor};

use crate::annotator::{parse_full, parse_headline, ANNOFULL_KEY, ANNO_KEY};
use crate::annotator::GeneDb;
use crate::bgzf::{BgzfReader, VirtualOffset};
use crate::error::{Error, Result};
use crate::genemodel::{prioritize, AnnotationType, Flanks};
use crate::records::{normalize_chrom, VcfHeader};
use crate::tabindex::{fetch_region, index_path_for, read_index_file, IndexedRecord, Preset, TabixIndex, MAX_COORD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectFormat {
    Vcf,
    Tab,
}

/// Set of annotation types to keep; empty keeps everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeFilter(pub BTreeSet<AnnotationType>);

impl TypeFilter {
    pub fn accepts(&self, t: AnnotationType) -> bool {
        self.0.is_empty() || self.0.contains(&t)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for TypeFilter {
    type Err = Error;

    /// Comma-separated type names.
    fn from_str(s: &str) -> Result<Self> {
        s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>().map(TypeFilter)
    }
}

#[derive(Debug, Clone)]
pub struct OpenOptions {
    /// Defaults to the data path with `.tbi` appended.
    pub index: Option<PathBuf>,
    /// refFlat table used to resolve gene names to ranges.
    pub gene_def: Option<PathBuf>,
    /// Inferred from the index preset when absent.
    pub format: Option<ProjectFormat>,
    /// Added on both sides of each transcript; should match the annotation windows.
    pub gene_flank: u64,
}

impl Default for OpenOptions {
    fn default() -> Self {
        OpenOptions { index: None, gene_def: None, format: None, gene_flank: Flanks::default().upstream }
    }
}

/// Records returned by a query, in file order, with bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryResult {
    pub records: Vec<IndexedRecord>,
    pub warnings: Vec<String>,
    /// Compressed bytes read from the data file.
    pub bytes_read: u64,
}

impl QueryResult {
    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.line.as_str())
    }
}

/// Merged `(chrom, beg, end)` spans per gene symbol.
type GeneRanges = HashMap<String, Vec<(String, u64, u64)>>;

/// An annotated data file with its index and, optionally, gene ranges.
#[derive(Debug)]
pub struct Project {
    data: PathBuf,
    index: TabixIndex,
    format: ProjectFormat,
    raw_names: HashMap<String, String>,
    gene_ranges: Option<GeneRanges>,
    header_lines: Vec<String>,
    vcf_header: Option<VcfHeader>,
    columns: Vec<String>,
    anno_col: Option<usize>,
}

impl Project {
    pub fn open(data: &Path, opts: &OpenOptions) -> Result<Self> {
        let index_path = opts.index.clone().unwrap_or_else(|| index_path_for(data));
        let index = read_index_file(&index_path)?;
        let format = opts.format.unwrap_or(match index.schema.preset {
            Preset::Vcf => ProjectFormat::Vcf,
            _ => ProjectFormat::Tab,
        });
        let mut reader = BgzfReader::new(BufReader::new(File::open(data)?));
        let mut header_lines = Vec::new();
        let mut line = String::new();
        let mut n = 0u32;
        while reader.read_line(&mut line)? {
            n += 1;
            if n > index.schema.skip_lines && !index.schema.is_meta(&line) {
                break;
            }
            header_lines.push(line.clone());
        }
        let vcf_header = match format {
            ProjectFormat::Vcf => {
                let mut h = VcfHeader::default();
                for l in header_lines.iter().filter(|l| l.starts_with('#')) {
                    h.push_line(l)?;
                }
                Some(h)
            }
            ProjectFormat::Tab => None,
        };
        let columns: Vec<String> = header_lines
            .last()
            .map(|h| h.split('\t').map(str::to_string).collect())
            .unwrap_or_default();
        let anno_col = match format {
            ProjectFormat::Tab => columns.iter().position(|c| c == ANNO_KEY),
            ProjectFormat::Vcf => None,
        };
        let gene_ranges = match &opts.gene_def {
            Some(p) => Some(gene_ranges(&GeneDb::load(p, Flanks::default())?, opts.gene_flank)),
            None => None,
        };
        let raw_names = index.names().iter().map(|n| (normalize_chrom(n), n.clone())).collect();
        Ok(Project {
            data: data.to_path_buf(),
            index,
            format,
            raw_names,
            gene_ranges,
            header_lines,
            vcf_header,
            columns,
            anno_col,
        })
    }

    pub fn format(&self) -> ProjectFormat {
        self.format
    }

    pub fn index(&self) -> &TabixIndex {
        &self.index
    }

    pub fn header_lines(&self) -> &[String] {
        &self.header_lines
    }

    /// Sample names from the `#CHROM` line (VCF projects).
    pub fn samples(&self) -> &[String] {
        self.vcf_header.as_ref().map(|h| h.samples.as_slice()).unwrap_or(&[])
    }

    /// Column names from the last header line (tab projects).
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn has_genes(&self) -> bool {
        self.gene_ranges.is_some()
    }

    /// Merged ranges (0-based half-open, normalized chromosome) of a gene.
    pub fn gene_ranges(&self, gene: &str) -> Option<&[(String, u64, u64)]> {
        self.gene_ranges.as_ref()?.get(gene.trim()).map(Vec::as_slice)
    }

    fn reader(&self) -> Result<BgzfReader<BufReader<File>>> {
        Ok(BgzfReader::new(BufReader::with_capacity(1 << 16, File::open(&self.data)?)))
    }

    fn scan(
        &self,
        reader: &mut BgzfReader<BufReader<File>>,
        chrom: &str,
        beg: u64,
        end: u64,
        visit: impl FnMut(IndexedRecord) -> Result<()>,
    ) -> Result<()> {
        if beg >= end {
            return Err(Error::Range(format!("empty range [{beg}, {end})")));
        }
        if end > MAX_COORD {
            return Err(Error::Range(format!("range end {end} exceeds the 2^29 coordinate limit")));
        }
        let raw = match self.raw_names.get(&normalize_chrom(chrom)) {
            Some(r) => r,
            None => return Ok(()),
        };
        fetch_region(&self.index, reader, raw, beg, end, visit)
    }

    /// Records overlapping 0-based half-open `[beg, end)`.
    pub fn fetch_range(&self, chrom: &str, beg: u64, end: u64) -> Result<QueryResult> {
        let mut reader = self.reader()?;
        let mut records = Vec::new();
        self.scan(&mut reader, chrom, beg, end, |r| {
            records.push(r);
            Ok(())
        })?;
        Ok(QueryResult { records, warnings: Vec::new(), bytes_read: reader.compressed_bytes_read() })
    }

    /// Records annotated to any of `genes` whose gene-level type passes `filter`.
    pub fn fetch_gene(&self, genes: &[String], filter: &TypeFilter) -> Result<QueryResult> {
        let Some(ranges) = &self.gene_ranges else {
            return Err(Error::Usage("gene queries need a gene definition (--gene-def)".into()));
        };
        if self.format == ProjectFormat::Tab && self.anno_col.is_none() {
            return Err(Error::Usage(format!(
                "{} has no {ANNO_KEY} column; run the annotate command on it first",
                self.data.display()
            )));
        }
        let mut reader = self.reader()?;
        let mut found: BTreeMap<VirtualOffset, IndexedRecord> = BTreeMap::new();
        let mut warnings = Vec::new();
        let mut seen = BTreeSet::new();
        for gene in genes.iter().map(|g| g.trim()).filter(|g| !g.is_empty()) {
            if !seen.insert(gene) {
                continue;
            }
            let Some(gr) = ranges.get(gene) else {
                warnings.push(format!("unknown gene {gene}"));
                continue;
            };
            for (chrom, beg, end) in gr {
                self.scan(&mut reader, chrom, *beg, *end, |r| {
                    if !found.contains_key(&r.voffset) && self.gene_type(&r.line, gene).is_some_and(|t| filter.accepts(t)) {
                        found.insert(r.voffset, r);
                    }
                    Ok(())
                })?;
            }
        }
        Ok(QueryResult { records: found.into_values().collect(), warnings, bytes_read: reader.compressed_bytes_read() })
    }

    /// Summary-statistic rows of an annotated tab or METAL project for the given genes.
    pub fn fetch_tab_stats(&self, genes: &[String], filter: &TypeFilter) -> Result<QueryResult> {
        if self.format != ProjectFormat::Tab {
            return Err(Error::Usage("summary-statistic queries need a tab or METAL project".into()));
        }
        self.fetch_gene(genes, filter)
    }

    /// The type a record carries for `gene`, or None if the record does not name it.
    pub fn gene_type(&self, line: &str, gene: &str) -> Option<AnnotationType> {
        match self.format {
            ProjectFormat::Vcf => {
                let info = line.split('\t').nth(7)?;
                let full = info.split(';').find_map(|kv| kv.strip_prefix(ANNOFULL_KEY)?.strip_prefix('='))?;
                let kinds: Vec<AnnotationType> = full
                    .split('&')
                    .flat_map(parse_full)
                    .filter(|g| g.gene == gene)
                    .flat_map(|g| g.transcripts.into_iter().map(|(_, k)| k))
                    .collect();
                (!kinds.is_empty()).then(|| prioritize(&kinds))
            }
            ProjectFormat::Tab => {
                let h = parse_headline(line.split('\t').nth(self.anno_col?)?)?;
                (h.gene.as_deref() == Some(gene)).then_some(h.kind)
            }
        }
    }

    /// Genotype dosages and requested FORMAT fields for records of this (VCF) project.
    pub fn genotype_matrix(&self, records: &[IndexedRecord], fields: &[String]) -> Result<GenotypeMatrix> {
        let header = self
            .vcf_header
            .as_ref()
            .ok_or_else(|| Error::Usage("genotype matrices need a VCF project".into()))?;
        GenotypeMatrix::build(header, records.iter().map(|r| r.line.as_str()), fields)
    }
}

fn gene_ranges(db: &GeneDb, flank: u64) -> GeneRanges {
    let mut spans: HashMap<String, Vec<(String, u64, u64)>> = HashMap::new();
    for t in db.transcripts() {
        let span = (t.chrom.clone(), t.tx.start.saturating_sub(flank), (t.tx.end + flank).min(MAX_COORD));
        spans.entry(t.gene.trim().to_string()).or_default().push(span);
    }
    for v in spans.values_mut() {
        v.sort();
        let mut merged: Vec<(String, u64, u64)> = Vec::new();
        for (c, b, e) in v.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == c && b <= last.2 => last.2 = last.2.max(e),
                _ => merged.push((c, b, e)),
            }
        }
        *v = merged;
    }
    spans
}

/// Reads a gene list (one symbol per line, `#` comments allowed), the stand-in for a pathway.
pub fn read_gene_list(reader: impl BufRead) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let g = line.trim();
        if !g.is_empty() && !g.starts_with('#') {
            out.push(g.to_string());
        }
    }
    Ok(out)
}
