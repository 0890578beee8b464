use std::fmt::Write;

use crate::annotator::ANNO_KEY;
use crate::error::Result;
use crate::records::{parse_vcf_site, VcfHeader};

/// Site columns that label one matrix row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDescriptor {
    pub chrom: String,
    pub pos: u64,
    pub ref_allele: String,
    /// ALT column as written (comma-separated for multi-allelic sites).
    pub alt: String,
    /// ANNO value, `.` when absent.
    pub anno: String,
}

/// Variants x samples dosages plus raw per-sample FORMAT values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenotypeMatrix {
    pub variants: Vec<VariantDescriptor>,
    pub samples: Vec<String>,
    pub dosage: Vec<Vec<Option<u8>>>,
    /// One variants x samples table per requested key.
    pub fields: Vec<(String, Vec<Vec<String>>)>,
    pub warnings: Vec<String>,
}

/// Count of non-reference alleles in a diploid or haploid GT value.
pub fn parse_dosage(gt: &str) -> Option<u8> {
    let mut n = 0u8;
    let mut alleles = 0;
    for a in gt.split(['/', '|']) {
        alleles += 1;
        if alleles > 2 {
            return None;
        }
        let idx: u32 = a.parse().ok()?;
        n += (idx != 0) as u8;
    }
    Some(n)
}

impl GenotypeMatrix {
    pub fn build<'a>(header: &VcfHeader, lines: impl Iterator<Item = &'a str>, fields: &[String]) -> Result<Self> {
        let mut m = GenotypeMatrix {
            samples: header.samples.clone(),
            fields: fields.iter().map(|f| (f.clone(), Vec::new())).collect(),
            ..Default::default()
        };
        let mut key_seen = vec![false; fields.len()];
        for line in lines {
            let site = parse_vcf_site(line, header)?;
            let anno = site.info_value(ANNO_KEY).flatten().unwrap_or(".").to_string();
            m.variants.push(VariantDescriptor {
                chrom: site.raw_chrom.clone(),
                pos: site.pos,
                ref_allele: site.ref_allele.clone(),
                alt: site.alts.join(","),
                anno,
            });
            let gt_at = site.format.iter().position(|f| f == "GT");
            let samples: Vec<Vec<&str>> = site.samples().map(|s| s.split(':').collect()).collect();
            m.dosage.push(
                (0..m.samples.len())
                    .map(|i| gt_at.and_then(|k| samples.get(i)?.get(k)).and_then(|gt| parse_dosage(gt)))
                    .collect(),
            );
            for (j, key) in fields.iter().enumerate() {
                let k = site.format.iter().position(|f| f == key);
                key_seen[j] |= k.is_some();
                let row = (0..m.samples.len())
                    .map(|i| {
                        k.and_then(|k| samples.get(i)?.get(k))
                            .filter(|v| !v.is_empty())
                            .unwrap_or(&".")
                            .to_string()
                    })
                    .collect();
                m.fields[j].1.push(row);
            }
        }
        for (key, seen) in fields.iter().zip(key_seen) {
            if !seen && !m.variants.is_empty() {
                m.warnings.push(format!("FORMAT key {key} is absent from every selected record"));
            }
        }
        Ok(m)
    }

    /// Tab-separated layout: a dosage table, then one `#FIELD<TAB>KEY` stanza per extra field.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        let head = |s: &mut String| {
            s.push_str("CHROM\tPOS\tREF\tALT\tANNO");
            for name in &self.samples {
                s.push('\t');
                s.push_str(name);
            }
            s.push('\n');
        };
        let row_prefix = |s: &mut String, v: &VariantDescriptor| {
            let _ = write!(s, "{}\t{}\t{}\t{}\t{}", v.chrom, v.pos, v.ref_allele, v.alt, v.anno);
        };
        head(&mut s);
        for (v, row) in self.variants.iter().zip(&self.dosage) {
            row_prefix(&mut s, v);
            for d in row {
                match d {
                    Some(d) => {
                        let _ = write!(s, "\t{d}");
                    }
                    None => s.push_str("\t."),
                }
            }
            s.push('\n');
        }
        for (key, table) in &self.fields {
            let _ = writeln!(s, "#FIELD\t{key}");
            head(&mut s);
            for (v, row) in self.variants.iter().zip(table) {
                row_prefix(&mut s, v);
                for x in row {
                    s.push('\t');
                    s.push_str(x);
                }
                s.push('\n');
            }
        }
        s
    }
}
