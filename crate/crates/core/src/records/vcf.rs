use crate::error::{Error, Result};

use super::{normalize_chrom, Variant};

/// Meta lines and sample names of a VCF file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VcfHeader {
    pub meta: Vec<String>,
    /// The `#CHROM` line, if one was seen.
    pub columns: Option<String>,
    pub samples: Vec<String>,
}

impl VcfHeader {
    /// Feeds one header line (`##...` or `#CHROM...`).
    pub fn push_line(&mut self, line: &str) -> Result<()> {
        if line.starts_with("##") {
            self.meta.push(line.to_string());
        } else if line.starts_with("#CHROM") {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 8 {
                return Err(Error::Format("#CHROM line has fewer than 8 columns".into()));
            }
            self.samples = cols.iter().skip(9).map(|s| s.to_string()).collect();
            self.columns = Some(line.to_string());
        } else {
            return Err(Error::Format(format!("not a VCF header line: {line}")));
        }
        Ok(())
    }

    pub fn has_column_line(&self) -> bool {
        self.columns.is_some()
    }
}

/// One VCF data line, with the original text retained.
#[derive(Debug, Clone, PartialEq)]
pub struct VcfSite {
    raw: String,
    /// Chromosome exactly as written in the file.
    pub raw_chrom: String,
    pub chrom: String,
    pub pos: u64,
    pub id: String,
    pub ref_allele: String,
    pub alts: Vec<String>,
    pub qual: Option<f64>,
    pub filter: String,
    pub info: Vec<(String, Option<String>)>,
    pub format: Vec<String>,
    samples_at: Option<usize>,
}

impl VcfSite {
    pub fn line(&self) -> &str {
        &self.raw
    }

    /// One [`Variant`] per alternate allele.
    pub fn variants(&self) -> Result<Vec<Variant>> {
        self.alts.iter().map(|alt| Variant::new(&self.chrom, self.pos, &self.ref_allele, alt)).collect()
    }

    pub fn info_value(&self, key: &str) -> Option<Option<&str>> {
        self.info.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_deref())
    }

    /// Raw per-sample columns, in header order.
    pub fn samples(&self) -> impl Iterator<Item = &str> {
        let rest = self.samples_at.map(|i| &self.raw[i..]).unwrap_or("");
        rest.split('\t').filter(move |_| self.samples_at.is_some())
    }

    pub fn sample_count(&self) -> usize {
        self.samples().count()
    }

    /// Colon-separated values of sample `i`.
    pub fn sample_fields(&self, i: usize) -> Option<Vec<&str>> {
        self.samples().nth(i).map(|s| s.split(':').collect())
    }

    /// Value of FORMAT key `key` for sample `i`, if both are present.
    pub fn sample_value(&self, i: usize, key: &str) -> Option<&str> {
        let k = self.format.iter().position(|f| f == key)?;
        self.samples().nth(i)?.split(':').nth(k)
    }
}

/// Parses a tab-separated VCF data line.
pub fn parse_vcf_site(line: &str, header: &VcfHeader) -> Result<VcfSite> {
    let mut cols = line.splitn(10, '\t');
    let mut next = || cols.next();
    let fixed: Vec<&str> = (0..8).map_while(|_| next()).collect();
    if fixed.len() < 8 {
        return Err(Error::Format(format!("VCF record has {} columns, at least 8 required", fixed.len())));
    }
    let format_col = next();
    let samples_col = next();

    let pos: u64 = fixed[1]
        .parse()
        .map_err(|_| Error::parse(format!("POS '{}' is not an integer", fixed[1])))?;
    if pos == 0 {
        return Err(Error::parse("POS must be >= 1"));
    }
    let qual = match fixed[5] {
        "." => None,
        q => Some(q.parse::<f64>().map_err(|_| Error::parse(format!("QUAL '{q}' is not a number")))?),
    };
    let info = if fixed[7] == "." {
        Vec::new()
    } else {
        fixed[7]
            .split(';')
            .filter(|kv| !kv.is_empty())
            .map(|kv| match kv.split_once('=') {
                Some((k, v)) => (k.to_string(), Some(v.to_string())),
                None => (kv.to_string(), None),
            })
            .collect()
    };
    let format = format_col.map(|f| f.split(':').map(str::to_string).collect()).unwrap_or_default();
    let samples_at = samples_col.map(|s| line.len() - s.len());

    let site = VcfSite {
        raw: line.to_string(),
        raw_chrom: fixed[0].to_string(),
        chrom: normalize_chrom(fixed[0]),
        pos,
        id: fixed[2].to_string(),
        ref_allele: fixed[3].to_ascii_uppercase(),
        alts: fixed[4].split(',').map(str::to_string).collect(),
        qual,
        filter: fixed[6].to_string(),
        info,
        format,
        samples_at,
    };
    if header.has_column_line() {
        let n = site.sample_count();
        if n != header.samples.len() {
            return Err(Error::Format(format!(
                "record has {n} samples, header declares {}",
                header.samples.len()
            )));
        }
    }
    Ok(site)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(samples: &[&str]) -> VcfHeader {
        let mut h = VcfHeader::default();
        h.push_line("##fileformat=VCFv4.2").unwrap();
        let mut cols = "#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO".to_string();
        if !samples.is_empty() {
            cols.push_str("\tFORMAT");
            for s in samples {
                cols.push('\t');
                cols.push_str(s);
            }
        }
        h.push_line(&cols).unwrap();
        h
    }

    #[test]
    fn simple_site() {
        let line = "1\t100\trs1\tA\tG\t.\tPASS\tDP=10";
        let site = parse_vcf_site(line, &header(&[])).unwrap();
        let vs = site.variants().unwrap();
        assert_eq!(vs, vec![Variant::new("1", 100, "A", "G").unwrap()]);
        assert_eq!(site.info, vec![("DP".to_string(), Some("10".to_string()))]);
        assert_eq!(site.qual, None);
        assert_eq!(site.line(), line);
    }

    #[test]
    fn multi_allelic() {
        let site = parse_vcf_site("chr1\t100\t.\tA\tG,T\t50\tPASS\tDB;AF=0.1", &VcfHeader::default()).unwrap();
        let vs = site.variants().unwrap();
        assert_eq!(vs.len(), 2);
        assert_eq!((vs[0].alt.as_str(), vs[1].alt.as_str()), ("G", "T"));
        assert!(vs.iter().all(|v| v.pos == 100 && v.ref_allele == "A" && v.chrom == "1"));
        assert_eq!(site.raw_chrom, "chr1");
        assert_eq!(site.info_value("DB"), Some(None));
        assert_eq!(site.qual, Some(50.0));
    }

    #[test]
    fn too_few_columns() {
        assert!(matches!(parse_vcf_site("1\t100\t.\tA\tG", &VcfHeader::default()), Err(Error::Format(_))));
    }

    #[test]
    fn bad_pos() {
        assert!(matches!(
            parse_vcf_site("1\tx\t.\tA\tG\t.\t.\t.", &VcfHeader::default()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn samples_and_format() {
        let h = header(&["s1", "s2"]);
        let site = parse_vcf_site("1\t5\t.\tC\tT\t.\tPASS\t.\tGT:DP\t0/1:10\t1|1:7", &h).unwrap();
        assert_eq!(site.samples().collect::<Vec<_>>(), ["0/1:10", "1|1:7"]);
        assert_eq!(site.sample_value(1, "DP"), Some("7"));
        assert_eq!(site.sample_value(0, "GL"), None);
        assert_eq!(site.sample_fields(0).unwrap(), ["0/1", "10"]);
        assert!(parse_vcf_site("1\t5\t.\tC\tT\t.\tPASS\t.\tGT\t0/1", &h).is_err());
    }
}
