use std::io::{BufRead, Write};

use crate::bgzf::BgzfWriter;
use crate::error::{Error, Result};
use crate::genemodel::{headline, prioritize, Annotation, AnnotationType};
use crate::records::{parse_metal_record, parse_vcf_site, read_line_into, MetalHeader, Variant, VcfHeader};
use crate::tabindex::{IndexBuilder, TabSchema, TabixIndex};

use super::keys::{full_text, headline_text, ANNOFULL_KEY, ANNO_KEY};
use super::{peak_rss_kb, Annotator, InputFormat, RunSummary};

/// What a run produced: the finished sink, the index built while writing, and counters.
pub struct AnnotatedOutput<W> {
    pub sink: W,
    pub index: Option<TabixIndex>,
    pub summary: RunSummary,
}

/// Writes lines into the BGZF sink and, optionally, the index.
struct Emitter<W: Write> {
    out: BgzfWriter<W>,
    index: Option<IndexBuilder>,
    line_no: u64,
}

impl<W: Write> Emitter<W> {
    fn header(&mut self, line: &str) -> Result<()> {
        self.line_no += 1;
        self.out.append(line.as_bytes())?;
        self.out.append(b"\n")
    }

    fn record(&mut self, line: &str, chrom: &str, beg: u64, end: u64) -> Result<()> {
        self.line_no += 1;
        let start = self.out.current_voffset();
        self.out.append(line.as_bytes())?;
        self.out.append(b"\n")?;
        if let Some(b) = &mut self.index {
            b.push(self.line_no, chrom, beg, end, start, self.out.current_voffset())?;
        }
        Ok(())
    }
}

impl Annotator {
    /// Streams `input` once, writing the annotated file as BGZF into `out`.
    pub fn run<R: BufRead, W: Write>(
        &mut self,
        input: R,
        format: &InputFormat,
        out: W,
        emit_index: bool,
    ) -> Result<AnnotatedOutput<W>> {
        let mut summary = RunSummary {
            transcripts: self.genes.transcripts().len() as u64,
            transcript_warnings: self
                .genes
                .transcripts()
                .iter()
                .filter(|t| t.frame_warning())
                .map(|t| t.name.clone())
                .collect(),
            ..Default::default()
        };
        let (sink, index) = match format {
            InputFormat::Vcf => self.run_vcf(input, out, emit_index, &mut summary)?,
            InputFormat::Tab(schema) => self.run_tab(input, schema, out, emit_index, &mut summary)?,
            InputFormat::Metal(spec) => self.run_metal(input, spec, out, emit_index, &mut summary)?,
        };
        summary.wall_time = self.started.elapsed();
        summary.peak_rss_kb = peak_rss_kb();
        Ok(AnnotatedOutput { sink, index, summary })
    }

    fn emitter<W: Write>(out: W, schema: Option<TabSchema>) -> Emitter<W> {
        Emitter { out: BgzfWriter::new(out), index: schema.map(IndexBuilder::new), line_no: 0 }
    }

    fn finish<W: Write>(mut em: Emitter<W>) -> Result<(W, Option<TabixIndex>)> {
        // a reader sitting at the end of a block reports the start of the next one
        let tail = em.out.current_voffset();
        em.out.flush_block()?;
        if let Some(b) = &mut em.index {
            b.remap_end(tail, em.out.current_voffset());
        }
        let sink = em.out.finish()?;
        Ok((sink, em.index.map(IndexBuilder::finish)))
    }

    fn info_headers(&self) -> Vec<String> {
        let mut h = vec![
            format!(
                "##INFO=<ID={ANNO_KEY},Number=.,Type=String,Description=\"Headline annotation per alternate allele: Gene:Type[:codonChange:aaChange]\">"
            ),
            format!(
                "##INFO=<ID={ANNOFULL_KEY},Number=.,Type=String,Description=\"All transcript annotations; alleles separated by '&', genes by '|', transcripts by ','\">"
            ),
        ];
        for l in self.region_labels() {
            h.push(format!("##INFO=<ID={l},Number=.,Type=String,Description=\"Names of {l} regions containing the variant\">"));
        }
        for s in &self.scores {
            h.push(format!(
                "##INFO=<ID={},Number=.,Type=String,Description=\"{} values ({}) per alternate allele\">",
                s.label(),
                s.label(),
                s.value_names().join("|")
            ));
        }
        h
    }

    /// Annotations for one allele, counting recoverable problems into the summary.
    fn allele_annotations(&self, v: Option<&Variant>, summary: &mut RunSummary) -> Result<Vec<Annotation>> {
        match v {
            Some(v) => self.annotate_variant(v),
            None => {
                summary.invalid_alleles += 1;
                Ok(Vec::new())
            }
        }
    }

    fn score_field(&mut self, i: usize, v: Option<&Variant>) -> Result<String> {
        let Some(v) = v else { return Ok(".".to_string()) };
        let vals = self.scores[i].lookup(v)?;
        Ok(if vals.is_empty() {
            ".".to_string()
        } else {
            vals.into_iter().map(|(_, x)| x).collect::<Vec<_>>().join("|")
        })
    }

    fn region_field(&self, i: usize, chrom: &str, pos: u64) -> Option<String> {
        let names = self.region_names(i, chrom, pos);
        (!names.is_empty()).then(|| names.join(","))
    }

    fn run_vcf<R: BufRead, W: Write>(
        &mut self,
        mut input: R,
        out: W,
        emit_index: bool,
        summary: &mut RunSummary,
    ) -> Result<(W, Option<TabixIndex>)> {
        let mut em = Self::emitter(out, emit_index.then(TabSchema::vcf));
        let mut header = VcfHeader::default();
        let mut in_header = true;
        let mut line = String::new();
        let mut n = 0u64;
        let mut appended = String::new();
        while read_line_into(&mut input, &mut line)? {
            n += 1;
            if in_header && line.starts_with('#') {
                if line.starts_with("#CHROM") {
                    for h in self.info_headers() {
                        em.header(&h)?;
                    }
                    summary.header_lines += 1;
                    in_header = false;
                }
                header.push_line(&line).map_err(|e| Error::Format(format!("line {n}: {e}")))?;
                em.header(&line)?;
                summary.header_lines += 1;
                continue;
            }
            if in_header {
                // no #CHROM line: declare our keys before the first record
                for h in self.info_headers() {
                    em.header(&h)?;
                }
                in_header = false;
            }
            if line.is_empty() {
                continue;
            }
            summary.records_read += 1;
            let site = parse_vcf_site(&line, &header).map_err(|e| match e {
                Error::Format(m) => Error::Format(format!("line {n}: {m}")),
                other => other.at_line(n),
            })?;
            if self.genome.length(&site.chrom).is_none() {
                summary.unknown_chrom += 1;
            }
            let variants: Vec<Option<Variant>> = site
                .alts
                .iter()
                .map(|alt| Variant::new(&site.chrom, site.pos, &site.ref_allele, alt).ok())
                .collect();

            appended.clear();
            let mut heads = Vec::with_capacity(variants.len());
            let mut fulls = Vec::with_capacity(variants.len());
            let mut kinds = Vec::with_capacity(variants.len());
            let mut mismatch = false;
            for v in &variants {
                let anns = self.allele_annotations(v.as_ref(), summary)?;
                mismatch |= anns.iter().any(|a| a.ref_mismatch);
                kinds.push(match (v, headline(&anns)) {
                    (None, _) => AnnotationType::Unknown,
                    (_, None) => AnnotationType::Intergenic,
                    (_, Some(a)) => a.kind,
                });
                heads.push(if v.is_some() { headline_text(&anns) } else { AnnotationType::Unknown.name().to_string() });
                fulls.push(full_text(&anns));
            }
            summary.ref_mismatches += mismatch as u64;
            *summary.types.entry(prioritize(&kinds)).or_default() += 1;

            appended.push_str(ANNO_KEY);
            appended.push('=');
            appended.push_str(&heads.join(","));
            if fulls.iter().any(Option::is_some) {
                let f: Vec<&str> = fulls.iter().map(|f| f.as_deref().unwrap_or(".")).collect();
                appended.push_str(&format!(";{ANNOFULL_KEY}={}", f.join("&")));
            }
            for i in 0..self.regions.len() {
                if let Some(names) = self.region_field(i, &site.chrom, site.pos - 1) {
                    appended.push_str(&format!(";{}={names}", self.regions[i].0));
                }
            }
            for i in 0..self.scores.len() {
                let vals: Vec<String> = variants.iter().map(|v| self.score_field(i, v.as_ref())).collect::<Result<_>>()?;
                if vals.iter().any(|v| v != ".") {
                    appended.push_str(&format!(";{}={}", self.scores[i].label(), vals.join(",")));
                }
            }

            let out_line = splice_info(&line, &appended);
            let (name, beg, end) = TabSchema::vcf().record_span(&out_line)?;
            em.record(&out_line, name, beg, end)?;
            summary.records_written += 1;
        }
        if in_header {
            for h in self.info_headers() {
                em.header(&h)?;
            }
        }
        Self::finish(em)
    }

    fn tab_columns(&mut self, chrom: &str, pos: u64, v: Option<&Variant>, summary: &mut RunSummary) -> Result<String> {
        let anns = match v {
            Some(v) => self.annotate_variant(v)?,
            None => self.annotate_position(chrom, pos),
        };
        if anns.iter().any(|a| a.ref_mismatch) {
            summary.ref_mismatches += 1;
        }
        if self.genome.length(chrom).is_none() {
            summary.unknown_chrom += 1;
        }
        let kind = headline(&anns).map(|a| a.kind).unwrap_or(AnnotationType::Intergenic);
        *summary.types.entry(kind).or_default() += 1;
        let mut s = headline_text(&anns);
        for i in 0..self.regions.len() {
            s.push('\t');
            s.push_str(self.region_field(i, chrom, pos).as_deref().unwrap_or("."));
        }
        for i in 0..self.scores.len() {
            s.push('\t');
            s.push_str(&self.score_field(i, v)?);
        }
        Ok(s)
    }

    fn label_header(&self) -> String {
        let mut s = ANNO_KEY.to_string();
        for l in self.region_labels().chain(self.score_labels()) {
            s.push('\t');
            s.push_str(l);
        }
        s
    }

    fn run_tab<R: BufRead, W: Write>(
        &mut self,
        mut input: R,
        schema: &TabSchema,
        out: W,
        emit_index: bool,
        summary: &mut RunSummary,
    ) -> Result<(W, Option<TabixIndex>)> {
        schema.validate()?;
        let mut em = Self::emitter(out, emit_index.then(|| schema.clone()));
        let mut pending: Vec<String> = Vec::new();
        let mut in_header = true;
        let mut line = String::new();
        let mut n = 0u64;
        while read_line_into(&mut input, &mut line)? {
            n += 1;
            let is_header = n <= schema.skip_lines as u64 || schema.is_meta(&line);
            if in_header && is_header {
                pending.push(line.clone());
                continue;
            }
            if in_header {
                self.flush_tab_header(&mut em, &mut pending, summary)?;
                in_header = false;
            }
            if is_header || line.is_empty() {
                em.header(&line)?;
                summary.header_lines += 1;
                continue;
            }
            summary.records_read += 1;
            let (name, beg, end) = schema.record_span(&line).map_err(|e| match e {
                Error::Schema(m) => Error::Schema(format!("line {n}: {m}")),
                other => other.at_line(n),
            })?;
            let chrom = crate::records::normalize_chrom(name);
            let cols = self.tab_columns(&chrom, beg, None, summary)?;
            let out_line = format!("{line}\t{cols}");
            em.record(&out_line, name, beg, end)?;
            summary.records_written += 1;
        }
        if in_header {
            self.flush_tab_header(&mut em, &mut pending, summary)?;
        }
        Self::finish(em)
    }

    fn flush_tab_header<W: Write>(&self, em: &mut Emitter<W>, pending: &mut Vec<String>, summary: &mut RunSummary) -> Result<()> {
        let last = pending.len().saturating_sub(1);
        for (i, h) in pending.drain(..).enumerate() {
            if i == last {
                em.header(&format!("{h}\t{}", self.label_header()))?;
            } else {
                em.header(&h)?;
            }
            summary.header_lines += 1;
        }
        Ok(())
    }

    fn run_metal<R: BufRead, W: Write>(
        &mut self,
        mut input: R,
        spec: &crate::records::MarkerSpec,
        out: W,
        emit_index: bool,
        summary: &mut RunSummary,
    ) -> Result<(W, Option<TabixIndex>)> {
        let mut line = String::new();
        let mut n = 0u64;
        let mut header_line = None;
        while read_line_into(&mut input, &mut line)? {
            n += 1;
            if !line.trim().is_empty() {
                header_line = Some(line.clone());
                break;
            }
        }
        let Some(header_text) = header_line else {
            let em = Self::emitter(out, emit_index.then(|| metal_schema(1, 0)));
            return Self::finish(em);
        };
        let header = MetalHeader::parse(&header_text, spec).map_err(|e| Error::Format(format!("line {n}: {e}")))?;
        let ntab = header_text.split('\t').count();
        let schema = metal_schema(ntab, n as u32);
        let mut em = Self::emitter(out, emit_index.then(|| schema.clone()));
        for _ in 1..n {
            em.header("")?;
        }
        em.header(&format!("{header_text}\tCHROM\tPOS\t{}", self.label_header()))?;
        summary.header_lines = n;

        while read_line_into(&mut input, &mut line)? {
            n += 1;
            if line.trim().is_empty() {
                em.header(&line)?;
                summary.header_lines += 1;
                continue;
            }
            summary.records_read += 1;
            if line.split('\t').count() != ntab {
                return Err(Error::parse_at(n, format!("row has a different number of tab-separated fields than the header ({ntab})")));
            }
            let rec = parse_metal_record(&line, &header).map_err(|e| e.at_line(n))?;
            let v = match (&rec.ref_allele, &rec.alt) {
                (Some(r), Some(a)) => Variant::new(&rec.chrom, rec.pos, r, a).ok(),
                _ => None,
            };
            let cols = self.tab_columns(&rec.chrom, rec.pos - 1, v.as_ref(), summary)?;
            let out_line = format!("{line}\t{}\t{}\t{cols}", rec.chrom, rec.pos);
            em.record(&out_line, &rec.chrom, rec.pos - 1, rec.pos)?;
            summary.records_written += 1;
        }
        Self::finish(em)
    }
}

/// Index layout of an annotated METAL file: CHROM and POS follow the `ntab` original fields.
fn metal_schema(ntab: usize, header_line: u32) -> TabSchema {
    let mut s = TabSchema::generic(ntab + 1, ntab + 2, 0, false).expect("columns are >= 1");
    s.skip_lines = header_line;
    s
}

/// Appends `extra` to the INFO column (column 8), replacing a `.` placeholder.
fn splice_info(line: &str, extra: &str) -> String {
    let mut starts = line.match_indices('\t').map(|(i, _)| i + 1);
    let info_start = starts.nth(6).expect("record already has 8 columns");
    let info_end = line[info_start..].find('\t').map(|i| info_start + i).unwrap_or(line.len());
    let info = &line[info_start..info_end];
    let mut s = String::with_capacity(line.len() + extra.len() + 1);
    s.push_str(&line[..info_start]);
    if info != "." && !info.is_empty() {
        s.push_str(info);
        s.push(';');
    }
    s.push_str(extra);
    s.push_str(&line[info_end..]);
    s
}
