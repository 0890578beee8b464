use crate::error::Result;
use crate::tabindex::TabSchema;

/// A generic tab-delimited record with its location resolved through a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabRecord {
    raw: String,
    pub chrom: String,
    /// 0-based half-open span.
    pub beg: u64,
    pub end: u64,
}

impl TabRecord {
    pub fn parse(line: &str, schema: &TabSchema) -> Result<Self> {
        let (chrom, beg, end) = schema.record_span(line)?;
        Ok(TabRecord { chrom: chrom.to_string(), beg, end, raw: line.to_string() })
    }

    pub fn line(&self) -> &str {
        &self.raw
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.raw.split('\t')
    }
}
