use crate::error::{Error, Result};
use crate::genemodel::{Strand, TranscriptModel};

use super::normalize_chrom;

/// Parses one line of a UCSC refFlat table into a transcript model.
pub fn parse_refflat(line: &str) -> Result<TranscriptModel> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 11 {
        return Err(Error::parse(format!("refFlat line has {} columns, 11 required", cols.len())));
    }
    let num = |i: usize| -> Result<u64> {
        cols[i].trim().parse().map_err(|_| Error::parse(format!("refFlat column {} ('{}') is not an integer", i + 1, cols[i])))
    };
    let strand = match cols[3] {
        "+" => Strand::Forward,
        "-" => Strand::Reverse,
        s => return Err(Error::parse(format!("unknown strand '{s}'"))),
    };
    let (tx_start, tx_end, cds_start, cds_end) = (num(4)?, num(5)?, num(6)?, num(7)?);
    if cds_start > cds_end {
        return Err(Error::parse(format!("cdsStart {cds_start} exceeds cdsEnd {cds_end}")));
    }
    let exon_count = num(8)? as usize;
    let list = |i: usize| -> Result<Vec<u64>> {
        cols[i]
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| Error::parse(format!("exon coordinate '{s}' is not an integer"))))
            .collect()
    };
    let (starts, ends) = (list(9)?, list(10)?);
    if starts.len() != exon_count || ends.len() != exon_count {
        return Err(Error::parse(format!(
            "exonCount {exon_count} does not match {} starts / {} ends",
            starts.len(),
            ends.len()
        )));
    }
    let exons = starts.into_iter().zip(ends).map(|(b, e)| b..e).collect();
    TranscriptModel::new(
        cols[0].trim(),
        cols[1].trim(),
        &normalize_chrom(cols[2]),
        strand,
        tx_start..tx_end,
        cds_start..cds_end,
        exons,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_exon_line() {
        let t = parse_refflat("G1\tNM_1\tchr1\t+\t100\t400\t150\t350\t2\t100,300,\t200,400,").unwrap();
        assert_eq!(t.exons, vec![100..200, 300..400]);
        assert_eq!(t.chrom, "1");
        assert!(t.is_coding());
        assert_eq!(t.cds_len(), 100);
    }

    #[test]
    fn noncoding_when_cds_empty() {
        let t = parse_refflat("G2\tNR_1\t1\t-\t100\t400\t400\t400\t2\t100,300,\t200,400,").unwrap();
        assert!(!t.is_coding());
    }

    #[test]
    fn exon_count_mismatch() {
        let err = parse_refflat("G1\tNM_1\t1\t+\t100\t400\t150\t350\t3\t100,300,\t200,400,").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn cds_reversed() {
        assert!(parse_refflat("G1\tNM_1\t1\t+\t100\t400\t350\t150\t2\t100,300,\t200,400,").is_err());
    }
}
