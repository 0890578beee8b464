use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::bgzf::{BgzfReader, VirtualOffset};
use crate::error::{Error, Result};
use crate::records::{normalize_chrom, Variant};
use crate::tabindex::{index_path_for, read_index_file, TabSchema, TabixIndex};

/// Position/allele keyed scores in a sorted, BGZF-compressed, indexed tab file with
/// columns `chrom pos ref alt value...`. Value names come from a `#` header line.
pub struct ScoreDb {
    label: String,
    names: Vec<String>,
    index: TabixIndex,
    raw_names: HashMap<String, String>,
    reader: BgzfReader<BufReader<File>>,
    cursor: Option<Cursor>,
    line: String,
}

/// Where the previous lookup stopped: every record of `chrom` between the seek point
/// and `at` starts before `beg`.
struct Cursor {
    chrom: String,
    beg: u64,
    at: VirtualOffset,
}

impl ScoreDb {
    pub fn open(label: &str, path: &Path) -> Result<Self> {
        let cfg = |e: Error| Error::Config(format!("score database {label} ({}): {e}", path.display()));
        let index = read_index_file(&index_path_for(path)).map_err(cfg)?;
        let file = File::open(path).map_err(|e| cfg(e.into()))?;
        let mut reader = BgzfReader::new(BufReader::new(file));
        let mut first = String::new();
        reader.read_line(&mut first).map_err(cfg)?;
        let names = match first.strip_prefix('#') {
            Some(h) if h.split('\t').count() > 4 => h.split('\t').skip(4).map(str::to_string).collect(),
            _ => {
                let n = first.split('\t').count().saturating_sub(4).max(1);
                if n == 1 {
                    vec!["score".to_string()]
                } else {
                    (1..=n).map(|i| format!("score{i}")).collect()
                }
            }
        };
        let raw_names = index.names().iter().map(|n| (normalize_chrom(n), n.clone())).collect();
        Ok(ScoreDb {
            label: label.to_string(),
            names,
            index,
            raw_names,
            reader,
            cursor: None,
            line: String::new(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value_names(&self) -> &[String] {
        &self.names
    }

    /// Values for an exact (chrom, pos, ref, alt) match; empty when absent.
    pub fn lookup(&mut self, v: &Variant) -> Result<Vec<(String, String)>> {
        let Some(raw) = self.raw_names.get(&v.chrom) else {
            return Ok(Vec::new());
        };
        let beg = v.pos - 1;
        let chunks = self.index.query_chunks(raw, beg, v.pos);
        let Some(first) = chunks.first() else {
            return Ok(Vec::new());
        };
        let resume = match &self.cursor {
            Some(c) if &c.chrom == raw && c.beg <= beg && c.at >= first.begin => Some(c.at),
            _ => None,
        };
        self.reader.seek(resume.unwrap_or(first.begin))?;
        let schema = TabSchema::generic(1, 2, 0, false)?;
        let mut out = Vec::new();
        let mut stop_at = None;
        loop {
            let at = self.reader.tell();
            if !self.reader.read_line(&mut self.line)? {
                stop_at.get_or_insert(at);
                break;
            }
            if self.line.is_empty() || self.line.starts_with('#') {
                continue;
            }
            let row_err = |e: Error| Error::Format(format!("score database {}: bad row '{}': {e}", self.label, self.line));
            let (chrom, rbeg, _) = schema.record_span(&self.line).map_err(row_err)?;
            if chrom != raw || rbeg > beg {
                stop_at.get_or_insert(at);
                break;
            }
            if rbeg < beg {
                continue;
            }
            stop_at.get_or_insert(at);
            let cols: Vec<&str> = self.line.split('\t').collect();
            if cols.len() < 5 {
                return Err(row_err(Error::parse("fewer than 5 columns")));
            }
            if cols[2].eq_ignore_ascii_case(&v.ref_allele) && cols[3].eq_ignore_ascii_case(&v.alt) {
                for (name, value) in self.names.iter().zip(&cols[4..]) {
                    if value.parse::<f64>().is_err() {
                        return Err(row_err(Error::parse(format!("value '{value}' is not a number"))));
                    }
                    out.push((name.clone(), value.to_string()));
                }
            }
        }
        self.cursor = stop_at.map(|at| Cursor { chrom: raw.clone(), beg, at });
        Ok(out)
    }
}
