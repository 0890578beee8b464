use std::io::BufRead;
use std::path::Path;

use crate::error::Result;
use crate::genemodel::{Flanks, TranscriptModel};
use crate::records::{open_text_input, parse_refflat, read_line_into};

use super::intervals::OrderedIntervals;

/// All transcripts of a gene definition, searchable by the span they influence
/// (transcript plus flanking windows).
#[derive(Debug, Clone)]
pub struct GeneDb {
    transcripts: Vec<TranscriptModel>,
    by_span: OrderedIntervals<usize>,
    flanks: Flanks,
}

impl GeneDb {
    pub fn new(transcripts: Vec<TranscriptModel>, flanks: Flanks) -> Self {
        let by_span = OrderedIntervals::build(transcripts.iter().enumerate().map(|(i, t)| {
            let span = t.extended(flanks);
            (t.chrom.clone(), span.start, span.end, i)
        }));
        GeneDb { transcripts, by_span, flanks }
    }

    /// Reads a refFlat table; `#` lines are skipped.
    pub fn from_reader(mut reader: impl BufRead, flanks: Flanks) -> Result<Self> {
        let mut transcripts = Vec::new();
        let mut line = String::new();
        let mut n = 0;
        while read_line_into(&mut reader, &mut line)? {
            n += 1;
            let l = line.trim_end_matches('\r');
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            transcripts.push(parse_refflat(l).map_err(|e| e.at_line(n))?);
        }
        Ok(Self::new(transcripts, flanks))
    }

    pub fn load(path: &Path, flanks: Flanks) -> Result<Self> {
        Self::from_reader(open_text_input(path)?, flanks)
    }

    pub fn flanks(&self) -> Flanks {
        self.flanks
    }

    pub fn transcripts(&self) -> &[TranscriptModel] {
        &self.transcripts
    }

    /// Transcripts whose extended span overlaps `[beg, end)`, in start order.
    pub fn near(&self, chrom: &str, beg: u64, end: u64) -> Vec<&TranscriptModel> {
        let mut out = Vec::new();
        self.by_span.for_each_overlap(chrom, beg, end, |&i| out.push(&self.transcripts[i]));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFFLAT: &str = "\
#geneName\tname\tchrom\tstrand\ttxStart\ttxEnd\tcdsStart\tcdsEnd\texonCount\texonStarts\texonEnds
G1\tNM_1\tchr1\t+\t3500\t6000\t5100\t5900\t1\t3500,\t6000,
G2\tNM_2\tchr1\t-\t1000\t2000\t1100\t1900\t1\t1000,\t2000,
";

    #[test]
    fn near_uses_flanks() {
        let db = GeneDb::from_reader(REFFLAT.as_bytes(), Flanks::default()).unwrap();
        assert_eq!(db.transcripts().len(), 2);
        let names = |p: u64| db.near("1", p, p + 1).iter().map(|t| t.gene.as_str()).collect::<Vec<_>>();
        assert_eq!(names(2600), ["G2", "G1"]);
        assert_eq!(names(3000), ["G1"]);
        assert_eq!(names(2499), ["G2"]);
        assert_eq!(names(6999), ["G1"]);
        assert!(names(7000).is_empty());
    }

    #[test]
    fn parse_error_has_line() {
        let err = GeneDb::from_reader("G\tT\t1\t+\t1\t2\n".as_bytes(), Flanks::default()).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
