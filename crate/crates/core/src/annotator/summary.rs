use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Duration;

use crate::genemodel::AnnotationType;

/// Counters collected over one annotation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub records_read: u64,
    pub records_written: u64,
    pub header_lines: u64,
    /// Headline type per record (prioritized across its alternate alleles).
    pub types: BTreeMap<AnnotationType, u64>,
    pub ref_mismatches: u64,
    pub unknown_chrom: u64,
    pub invalid_alleles: u64,
    pub transcripts: u64,
    /// Transcripts whose CDS length is not a multiple of 3.
    pub transcript_warnings: Vec<String>,
    pub wall_time: Duration,
    pub peak_rss_kb: Option<u64>,
}

impl RunSummary {
    /// `key: value` lines. Run-dependent measurements go on lines starting with `# `.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "records_read: {}", self.records_read);
        let _ = writeln!(s, "records_written: {}", self.records_written);
        let _ = writeln!(s, "header_lines: {}", self.header_lines);
        let _ = writeln!(s, "ref_mismatch: {}", self.ref_mismatches);
        let _ = writeln!(s, "unknown_chrom: {}", self.unknown_chrom);
        let _ = writeln!(s, "invalid_alleles: {}", self.invalid_alleles);
        let _ = writeln!(s, "transcripts: {}", self.transcripts);
        let _ = writeln!(s, "transcript_warnings: {}", self.transcript_warnings.len());
        for t in &self.transcript_warnings {
            let _ = writeln!(s, "transcript_warning: {t} CDS length is not a multiple of 3");
        }
        for (t, n) in &self.types {
            let _ = writeln!(s, "type.{t}: {n}");
        }
        let secs = self.wall_time.as_secs_f64();
        let _ = writeln!(s, "# wall_seconds: {secs:.3}");
        if secs > 0.0 {
            let _ = writeln!(s, "# records_per_second: {:.0}", self.records_read as f64 / secs);
        }
        if let Some(kb) = self.peak_rss_kb {
            let _ = writeln!(s, "# peak_rss_kb: {kb}");
        }
        s
    }
}

/// Peak resident set size of this process in kB (Linux only).
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_lines() {
        let mut s = RunSummary { records_read: 3, records_written: 3, ..Default::default() };
        s.types.insert(AnnotationType::Intron, 2);
        s.types.insert(AnnotationType::Nonsynonymous, 1);
        s.transcript_warnings.push("NM_9".into());
        let r = s.report();
        assert!(r.contains("records_written: 3\n"));
        assert!(r.contains("type.Nonsynonymous: 1\ntype.Intron: 2\n"));
        assert!(r.contains("transcript_warning: NM_9"));
        assert!(r.lines().filter(|l| l.contains("wall")).all(|l| l.starts_with("# ")));
    }

    #[cfg(target_os = "linux")]
    #[test]
    fn rss_is_readable() {
        assert!(peak_rss_kb().unwrap() > 0);
    }
}
