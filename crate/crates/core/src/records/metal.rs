use crate::error::{Error, Result};

use super::normalize_chrom;

/// Which header column carries the marker identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerSpec {
    pub marker_col: String,
}

impl Default for MarkerSpec {
    fn default() -> Self {
        MarkerSpec { marker_col: "MarkerName".to_string() }
    }
}

/// Column layout of a METAL results file, resolved from its header row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetalHeader {
    pub columns: Vec<String>,
    /// Tab-delimited when the header contains a tab, otherwise any run of whitespace separates columns.
    pub tab_delimited: bool,
    marker: Option<usize>,
    chrom: Option<usize>,
    pos: Option<usize>,
}

impl MetalHeader {
    pub fn parse(line: &str, spec: &MarkerSpec) -> Result<Self> {
        let tab_delimited = line.contains('\t');
        let columns: Vec<String> = split_fields(line, tab_delimited).map(str::to_string).collect();
        let find = |names: &[&str]| {
            columns.iter().position(|c| names.iter().any(|n| c.eq_ignore_ascii_case(n)))
        };
        let marker = columns.iter().position(|c| c == &spec.marker_col);
        let chrom = find(&["CHR", "CHROM", "CHROMOSOME"]);
        let pos = find(&["POS", "BP", "POSITION"]);
        let explicit = chrom.is_some() && pos.is_some();
        if marker.is_none() && !explicit {
            return Err(Error::Format(format!(
                "METAL header has neither a '{}' column nor CHR/POS columns",
                spec.marker_col
            )));
        }
        let (chrom, pos) = if explicit { (chrom, pos) } else { (None, None) };
        Ok(MetalHeader { columns, tab_delimited, marker, chrom, pos })
    }

    pub fn split<'a>(&self, line: &'a str) -> impl Iterator<Item = &'a str> {
        split_fields(line, self.tab_delimited)
    }

    fn is_position_col(&self, i: usize) -> bool {
        Some(i) == self.marker || Some(i) == self.chrom || Some(i) == self.pos
    }
}

fn split_fields(line: &str, tabs: bool) -> Box<dyn Iterator<Item = &str> + '_> {
    if tabs {
        Box::new(line.split('\t'))
    } else {
        Box::new(line.split_whitespace())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetalRecord {
    pub marker: String,
    pub chrom: String,
    /// 1-based.
    pub pos: u64,
    pub ref_allele: Option<String>,
    pub alt: Option<String>,
    /// Remaining columns by header name, in file order.
    pub stats: Vec<(String, String)>,
}

pub fn parse_metal_record(line: &str, header: &MetalHeader) -> Result<MetalRecord> {
    let fields: Vec<&str> = header.split(line).collect();
    if fields.len() < header.columns.len() {
        return Err(Error::parse(format!(
            "METAL row has {} columns, header has {}",
            fields.len(),
            header.columns.len()
        )));
    }
    let marker = header.marker.map(|i| fields[i]).unwrap_or("");
    let (chrom, pos, ref_allele, alt) = match (header.chrom, header.pos) {
        (Some(c), Some(p)) => {
            let pos = parse_pos(fields[p])?;
            let (r, a) = parse_marker(marker).map(|m| (m.2, m.3)).unwrap_or_default();
            (normalize_chrom(fields[c]), pos, r, a)
        }
        _ => parse_marker(marker)?,
    };
    let stats = header
        .columns
        .iter()
        .zip(&fields)
        .enumerate()
        .filter(|(i, _)| !header.is_position_col(*i))
        .map(|(_, (name, v))| (name.clone(), v.to_string()))
        .collect();
    Ok(MetalRecord { marker: marker.to_string(), chrom, pos, ref_allele, alt, stats })
}

fn parse_pos(s: &str) -> Result<u64> {
    match s.parse::<u64>() {
        Ok(p) if p >= 1 => Ok(p),
        _ => Err(Error::parse(format!("position '{s}' is not a positive integer"))),
    }
}

type MarkerParts = (String, u64, Option<String>, Option<String>);

fn parse_marker(marker: &str) -> Result<MarkerParts> {
    let bad = || Error::parse(format!("cannot derive chrom:pos from marker '{marker}'"));
    let parts: Vec<&str> = marker.split(':').collect();
    if !(2..=4).contains(&parts.len()) || parts[0].is_empty() {
        return Err(bad());
    }
    let pos = parse_pos(parts[1]).map_err(|_| bad())?;
    let allele = |i: usize| parts.get(i).filter(|s| !s.is_empty()).map(|s| s.to_ascii_uppercase());
    Ok((normalize_chrom(parts[0]), pos, allele(2), allele(3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(line: &str) -> MetalHeader {
        MetalHeader::parse(line, &MarkerSpec::default()).unwrap()
    }

    #[test]
    fn marker_with_position() {
        let h = header("MarkerName Effect StdErr P-value");
        let r = parse_metal_record("1:861349 0.02 0.01 0.045", &h).unwrap();
        assert_eq!((r.chrom.as_str(), r.pos), ("1", 861349));
        assert_eq!(
            r.stats,
            vec![
                ("Effect".to_string(), "0.02".to_string()),
                ("StdErr".to_string(), "0.01".to_string()),
                ("P-value".to_string(), "0.045".to_string())
            ]
        );
        assert_eq!(r.ref_allele, None);
    }

    #[test]
    fn marker_with_alleles() {
        let h = header("MarkerName\tP");
        let r = parse_metal_record("X:5:AT:A\t0.5", &h).unwrap();
        assert_eq!((r.chrom.as_str(), r.pos), ("X", 5));
        assert_eq!((r.ref_allele.as_deref(), r.alt.as_deref()), (Some("AT"), Some("A")));
    }

    #[test]
    fn rsid_without_columns() {
        let h = header("MarkerName P");
        let err = parse_metal_record("rs12345 0.1", &h).unwrap_err();
        assert!(err.to_string().contains("rs12345"));
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn explicit_columns_win() {
        let h = header("MarkerName\tCHR\tBP\tP");
        let r = parse_metal_record("rs12345\tchr2\t77\t0.3", &h).unwrap();
        assert_eq!((r.chrom.as_str(), r.pos, r.marker.as_str()), ("2", 77, "rs12345"));
        assert_eq!(r.stats, vec![("P".to_string(), "0.3".to_string())]);
    }

    #[test]
    fn header_without_location() {
        assert!(MetalHeader::parse("SNP P", &MarkerSpec::default()).is_err());
        let spec = MarkerSpec { marker_col: "SNP".into() };
        assert!(MetalHeader::parse("SNP P", &spec).is_ok());
    }

    #[test]
    fn short_row() {
        let h = header("MarkerName Effect P");
        assert!(parse_metal_record("1:5 0.1", &h).is_err());
    }
}
