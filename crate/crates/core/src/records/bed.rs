use crate::error::{Error, Result};

use super::normalize_chrom;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BedRecord {
    pub chrom: String,
    pub beg: u64,
    pub end: u64,
    pub name: Option<String>,
}

/// Parses a BED line (at least 3 columns, coordinates 0-based half-open).
pub fn parse_bed_line(line: &str) -> Result<BedRecord> {
    let mut cols = line.split('\t');
    let (Some(chrom), Some(beg), Some(end)) = (cols.next(), cols.next(), cols.next()) else {
        return Err(Error::parse("BED line needs at least 3 columns"));
    };
    let coord = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::parse(format!("BED coordinate '{s}' is not an integer")));
    let (beg, end) = (coord(beg)?, coord(end)?);
    if beg >= end {
        return Err(Error::Range(format!("BED interval [{beg}, {end}) is empty")));
    }
    let name = cols.next().filter(|n| !n.is_empty()).map(str::to_string);
    Ok(BedRecord { chrom: normalize_chrom(chrom), beg, end, name })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_interval() {
        let r = parse_bed_line("1\t999\t2000\tTFBS_A").unwrap();
        assert_eq!(r, BedRecord { chrom: "1".into(), beg: 999, end: 2000, name: Some("TFBS_A".into()) });
    }

    #[test]
    fn prefixed_chrom() {
        let r = parse_bed_line("chr1\t0\t1").unwrap();
        assert_eq!((r.chrom.as_str(), r.beg, r.end, r.name), ("1", 0, 1, None));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_bed_line("1\t5\t5"), Err(Error::Range(_))));
        assert!(matches!(parse_bed_line("1\tfive\t6"), Err(Error::Parse { .. })));
        assert!(matches!(parse_bed_line("1\t5"), Err(Error::Parse { .. })));
    }
}
