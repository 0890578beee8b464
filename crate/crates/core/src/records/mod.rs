//! Line-level parsers for the text formats the pipeline consumes.

mod bed;
mod fasta;
mod metal;
mod refflat;
mod tab;
mod vcf;

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

pub use bed::{parse_bed_line, BedRecord};
pub use fasta::{FaiEntry, FastaIndex, Genome, InMemoryGenome, IndexedFasta};
pub use metal::{parse_metal_record, MarkerSpec, MetalHeader, MetalRecord};
pub use refflat::parse_refflat;
pub use tab::TabRecord;
pub use vcf::{parse_vcf_site, VcfHeader, VcfSite};

use crate::error::{Error, Result};

/// Canonical chromosome naming shared by every format: drops a `chr` prefix
/// and folds the mitochondrial names `M`/`MT` together.
pub fn normalize_chrom(name: &str) -> String {
    let mut s = name;
    loop {
        let stripped = ["chr", "Chr", "CHR"].iter().find_map(|p| s.strip_prefix(p));
        match stripped {
            Some(rest) if !rest.is_empty() => s = rest,
            _ => break,
        }
    }
    if s == "M" {
        "MT".to_string()
    } else {
        s.to_string()
    }
}

/// A single reference/alternate allele pair at a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variant {
    pub chrom: String,
    pub pos: u64,
    pub ref_allele: String,
    pub alt: String,
}

impl Variant {
    pub fn new(chrom: &str, pos: u64, ref_allele: &str, alt: &str) -> Result<Self> {
        if pos == 0 {
            return Err(Error::parse("variant position must be >= 1"));
        }
        let ref_allele = ref_allele.to_ascii_uppercase();
        if ref_allele.is_empty() || !ref_allele.bytes().all(is_base) {
            return Err(Error::parse(format!("invalid reference allele '{ref_allele}'")));
        }
        let alt = if is_symbolic(alt) { alt.to_string() } else { alt.to_ascii_uppercase() };
        if alt.is_empty() || !(is_symbolic(&alt) || alt.bytes().all(is_base)) {
            return Err(Error::parse(format!("invalid alternate allele '{alt}'")));
        }
        Ok(Variant { chrom: normalize_chrom(chrom), pos, ref_allele, alt })
    }

    pub fn is_snv(&self) -> bool {
        self.ref_allele.len() == 1
            && self.alt.len() == 1
            && matches!(self.ref_allele.as_bytes()[0], b'A' | b'C' | b'G' | b'T')
            && matches!(self.alt.as_bytes()[0], b'A' | b'C' | b'G' | b'T')
    }

    pub fn is_symbolic(&self) -> bool {
        is_symbolic(&self.alt)
    }

    /// 0-based start of the reference allele.
    pub fn start(&self) -> u64 {
        self.pos - 1
    }
}

fn is_base(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'T' | b'N')
}

fn is_symbolic(alt: &str) -> bool {
    alt.starts_with('<') || alt.contains('[') || alt.contains(']') || alt == "*" || alt == "."
}

/// Opens a text input that may be plain, gzip or BGZF compressed (detected by magic bytes).
pub fn open_text_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut magic = [0u8; 2];
    let n = read_up_to(&mut file, &mut magic)?;
    let file = File::open(path)?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(BufReader::new(file)))))
    } else {
        Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

/// Reads one line, stripping the trailing `\n`. Returns false at end of input.
pub fn read_line_into(reader: &mut impl BufRead, line: &mut String) -> Result<bool> {
    line.clear();
    if reader.read_line(line)? == 0 {
        return Ok(false);
    }
    if line.ends_with('\n') {
        line.pop();
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chrom_names() {
        assert_eq!(normalize_chrom("chr1"), "1");
        assert_eq!(normalize_chrom("1"), "1");
        assert_eq!(normalize_chrom("chrM"), "MT");
        assert_eq!(normalize_chrom("MT"), "MT");
        assert_eq!(normalize_chrom("CHRX"), "X");
        assert_eq!(normalize_chrom("chr"), "chr");
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(name in "(chr|Chr|CHR){0,3}[0-9XYMT]{0,3}") {
            let once = normalize_chrom(&name);
            prop_assert_eq!(normalize_chrom(&once), once);
        }
    }

    #[test]
    fn variant_classes() {
        assert!(Variant::new("1", 5, "a", "g").unwrap().is_snv());
        assert!(!Variant::new("1", 5, "A", "N").unwrap().is_snv());
        assert!(!Variant::new("1", 5, "AT", "A").unwrap().is_snv());
        assert!(Variant::new("1", 5, "A", "<DEL>").unwrap().is_symbolic());
        assert!(Variant::new("1", 0, "A", "G").is_err());
        assert!(Variant::new("1", 3, "", "G").is_err());
        assert!(Variant::new("1", 3, "AXT", "G").is_err());
    }
}
