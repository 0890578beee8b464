use crate::error::Result;
use crate::records::{Genome, Variant};

use super::code::complement;
use super::{prioritize, AnnotationType, Flanks, GeneticCode, Locus, Strand, TranscriptModel};

/// Codon-level detail of a coding SNV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingChange {
    pub ref_codon: String,
    pub alt_codon: String,
    pub ref_aa: char,
    pub alt_aa: char,
    /// 0-based offset in the spliced CDS.
    pub cds_offset: u64,
}

impl CodingChange {
    /// `gcT/gcC`: lowercase codons with the substituted base in uppercase.
    pub fn codon_change(&self) -> String {
        let frame = (self.cds_offset % 3) as usize;
        let mark = |c: &str| -> String {
            c.chars()
                .enumerate()
                .map(|(i, b)| if i == frame { b.to_ascii_uppercase() } else { b.to_ascii_lowercase() })
                .collect()
        };
        format!("{}/{}", mark(&self.ref_codon), mark(&self.alt_codon))
    }

    pub fn aa_change(&self) -> String {
        format!("{}/{}", self.ref_aa, self.alt_aa)
    }
}

/// The consequence of one variant for one transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub kind: AnnotationType,
    pub gene: String,
    pub transcript: String,
    pub coding: Option<CodingChange>,
    /// The variant's reference allele disagrees with the genome.
    pub ref_mismatch: bool,
}

impl Annotation {
    fn new(t: &TranscriptModel, kind: AnnotationType) -> Self {
        Annotation { kind, gene: t.gene.clone(), transcript: t.name.clone(), coding: None, ref_mismatch: false }
    }
}

/// The highest-precedence annotation, first one winning ties.
pub fn headline(annotations: &[Annotation]) -> Option<&Annotation> {
    annotations.iter().min_by_key(|a| a.kind.rank())
}

/// Classifies `v` against `t`. Returns None when the variant lies beyond the transcript
/// and its flanking windows.
pub fn classify(
    t: &TranscriptModel,
    v: &Variant,
    genome: &dyn Genome,
    flanks: Flanks,
    code: &GeneticCode,
) -> Result<Option<Annotation>> {
    if v.is_snv() {
        classify_snv(t, v, genome, flanks, code)
    } else if !v.is_symbolic() && v.ref_allele.len() != v.alt.len() {
        Ok(classify_indel(t, v, flanks))
    } else {
        // substitutions of several bases, ambiguous bases and symbolic alleles: structural
        // classes only, anything touching coding sequence is left undetermined
        Ok(classify_span(t, v.start()..v.start() + v.ref_allele.len() as u64, flanks))
    }
}

fn classify_snv(
    t: &TranscriptModel,
    v: &Variant,
    genome: &dyn Genome,
    flanks: Flanks,
    code: &GeneticCode,
) -> Result<Option<Annotation>> {
    let cds = match t.locate(v.start(), flanks) {
        Locus::Outside => return Ok(None),
        Locus::Region(kind) => return Ok(Some(Annotation::new(t, kind))),
        Locus::Coding(c) => c,
    };
    let mut ann = Annotation::new(t, AnnotationType::Unknown);
    let ref_codon = match t.codon_at(genome, cds.codon_index) {
        Ok(Some(c)) => c.into_bytes(),
        Ok(None) | Err(_) => return Ok(Some(ann)),
    };
    let orient = |b: u8| match t.strand {
        Strand::Forward => b,
        Strand::Reverse => complement(b).expect("SNV bases are ACGT"),
    };
    let frame = cds.frame as usize;
    if ref_codon[frame] != orient(v.ref_allele.as_bytes()[0]) {
        ann.ref_mismatch = true;
        return Ok(Some(ann));
    }
    let mut alt_codon = ref_codon.clone();
    alt_codon[frame] = orient(v.alt.as_bytes()[0]);
    let (Some(ref_aa), Some(alt_aa)) = (code.translate(&ref_codon), code.translate(&alt_codon)) else {
        return Ok(Some(ann));
    };
    ann.kind = if ref_aa == alt_aa {
        AnnotationType::Synonymous
    } else if alt_aa == b'*' {
        AnnotationType::StopGain
    } else if ref_aa == b'*' {
        AnnotationType::StopLoss
    } else if cds.codon_index == 0 && ref_codon == b"ATG" {
        AnnotationType::StartLoss
    } else {
        AnnotationType::Nonsynonymous
    };
    ann.coding = Some(CodingChange {
        ref_codon: String::from_utf8(ref_codon).expect("ASCII codon"),
        alt_codon: String::from_utf8(alt_codon).expect("ASCII codon"),
        ref_aa: ref_aa as char,
        alt_aa: alt_aa as char,
        cds_offset: cds.offset,
    });
    Ok(Some(ann))
}

fn classify_indel(t: &TranscriptModel, v: &Variant, flanks: Flanks) -> Option<Annotation> {
    let (r, a) = (v.ref_allele.as_bytes(), v.alt.as_bytes());
    let shared = r.iter().zip(a).take_while(|(x, y)| x == y).count();
    let beg = v.start() + shared as u64;
    let end = v.start() + r.len() as u64;
    let delta = r.len().abs_diff(a.len());
    let frame_kind = if delta % 3 == 0 { AnnotationType::InframeIndel } else { AnnotationType::FrameshiftIndel };

    if beg < end {
        // reference bases removed or replaced
        let loci: Vec<Locus> = (beg..end).map(|p| t.locate(p, flanks)).collect();
        if loci.iter().any(|l| matches!(l, Locus::Coding(_))) {
            return Some(Annotation::new(t, frame_kind));
        }
        return structural(&loci).map(|k| Annotation::new(t, k));
    }
    // pure insertion between beg-1 and beg
    let loci: Vec<Locus> = [beg.checked_sub(1), Some(beg)].into_iter().flatten().map(|p| t.locate(p, flanks)).collect();
    if loci.len() == 2 && loci.iter().all(|l| matches!(l, Locus::Coding(_))) {
        return Some(Annotation::new(t, frame_kind));
    }
    structural(&loci).map(|k| Annotation::new(t, k))
}

/// Classifies a reference span without allele information: structural classes only,
/// with any overlap of coding sequence reported as Unknown.
pub fn classify_span(t: &TranscriptModel, span: std::ops::Range<u64>, flanks: Flanks) -> Option<Annotation> {
    let loci: Vec<Locus> = span.map(|p| t.locate(p, flanks)).collect();
    if loci.iter().any(|l| matches!(l, Locus::Coding(_))) {
        return Some(Annotation::new(t, AnnotationType::Unknown));
    }
    structural(&loci).map(|k| Annotation::new(t, k))
}

/// Highest-precedence structural class among the loci; None if every locus is outside.
fn structural(loci: &[Locus]) -> Option<AnnotationType> {
    let kinds: Vec<AnnotationType> = loci
        .iter()
        .filter_map(|l| match l {
            Locus::Region(k) => Some(*k),
            _ => None,
        })
        .collect();
    if kinds.is_empty() {
        None
    } else {
        Some(prioritize(&kinds))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genemodel::reverse_complement;
    use crate::records::InMemoryGenome;
    use proptest::prelude::*;

    fn genome(seq: &str) -> InMemoryGenome {
        let mut g = InMemoryGenome::new();
        g.insert("1", seq);
        g
    }

    fn snv(pos0: u64, r: &str, a: &str) -> Variant {
        Variant::new("1", pos0 + 1, r, a).unwrap()
    }

    fn run(t: &TranscriptModel, g: &InMemoryGenome, v: &Variant) -> Annotation {
        classify(t, v, g, Flanks::default(), &GeneticCode::universal()).unwrap().unwrap()
    }

    fn toy() -> (TranscriptModel, InMemoryGenome) {
        let t = TranscriptModel::new("G1", "T1", "1", Strand::Forward, 0..9, 0..9, vec![0..9]).unwrap();
        (t, genome("ATGGCTTAA"))
    }

    #[test]
    fn synonymous_third_base() {
        let (t, g) = toy();
        let a = run(&t, &g, &snv(5, "T", "C"));
        assert_eq!(a.kind, AnnotationType::Synonymous);
        let c = a.coding.unwrap();
        assert_eq!((c.codon_change().as_str(), c.aa_change().as_str()), ("gcT/gcC", "A/A"));
    }

    #[test]
    fn stop_loss_and_start_loss() {
        let (t, g) = toy();
        assert_eq!(run(&t, &g, &snv(6, "T", "C")).kind, AnnotationType::StopLoss);
        assert_eq!(run(&t, &g, &snv(0, "A", "G")).kind, AnnotationType::StartLoss);
        let stop = genome("ATGTGGTAA");
        assert_eq!(run(&t, &stop, &snv(5, "G", "A")).kind, AnnotationType::StopGain);
        let a = run(&t, &g, &snv(4, "C", "T"));
        assert_eq!((a.kind, a.coding.unwrap().aa_change()), (AnnotationType::Nonsynonymous, "A/V".to_string()));
    }

    #[test]
    fn reference_mismatch_is_unknown() {
        let (t, g) = toy();
        let a = run(&t, &g, &snv(4, "G", "T"));
        assert_eq!(a.kind, AnnotationType::Unknown);
        assert!(a.ref_mismatch);
    }

    #[test]
    fn incomplete_codon_is_unknown() {
        let t = TranscriptModel::new("G", "T", "1", Strand::Forward, 0..10, 0..10, vec![0..10]).unwrap();
        let g = genome("ATGGCTTAAC");
        let a = run(&t, &g, &snv(9, "C", "G"));
        assert_eq!((a.kind, a.ref_mismatch), (AnnotationType::Unknown, false));
    }

    #[test]
    fn indels() {
        let t = TranscriptModel::new("G", "T", "1", Strand::Forward, 100..400, 150..350, vec![100..200, 300..400]).unwrap();
        let g = genome(&"A".repeat(2000));
        let at = |pos0: u64, r: &str, a: &str| run(&t, &g, &Variant::new("1", pos0 + 1, r, a).unwrap()).kind;
        assert_eq!(at(159, "AAA", "A"), AnnotationType::FrameshiftIndel);
        assert_eq!(at(159, "AAAA", "A"), AnnotationType::InframeIndel);
        assert_eq!(at(159, "A", "AAAA"), AnnotationType::InframeIndel);
        assert_eq!(at(159, "A", "AA"), AnnotationType::FrameshiftIndel);
        assert_eq!(at(250, "A", "AAAA"), AnnotationType::Intron);
        assert_eq!(at(250, "AAAA", "A"), AnnotationType::Intron);
        // insertion right after the exon's last base lands between exon and splice site
        assert_eq!(at(199, "A", "AA"), AnnotationType::SpliceSite);
        // deletion spanning the exon end is coding
        assert_eq!(at(197, "AAAA", "A"), AnnotationType::InframeIndel);
        assert_eq!(at(119, "AA", "A"), AnnotationType::Utr5);
        assert!(classify(&t, &Variant::new("1", 5000, "AA", "A").unwrap(), &g, Flanks::default(), &GeneticCode::universal())
            .unwrap()
            .is_none());
    }

    #[test]
    fn multi_base_substitutions() {
        let (t, g) = toy();
        assert_eq!(run(&t, &g, &Variant::new("1", 4, "GC", "TT").unwrap()).kind, AnnotationType::Unknown);
        let far = Variant::new("1", 20, "AC", "GT").unwrap();
        assert_eq!(run(&t, &g, &far).kind, AnnotationType::Downstream);
        assert_eq!(run(&t, &g, &Variant::new("1", 20, "A", "<DEL>").unwrap()).kind, AnnotationType::Downstream);
    }

    #[test]
    fn headline_picks_most_severe_first() {
        let (t, _) = toy();
        let mut anns = vec![Annotation::new(&t, AnnotationType::Intron), Annotation::new(&t, AnnotationType::Synonymous)];
        anns[1].transcript = "first".into();
        anns.push(Annotation { transcript: "second".into(), ..anns[1].clone() });
        assert_eq!(headline(&anns).unwrap().transcript, "first");
        assert!(headline(&[]).is_none());
    }

    fn arb_world() -> impl Strategy<Value = (String, Vec<(u64, u64)>, u64, u64)> {
        ("[ACGT]{300}", proptest::collection::vec((2u64..20, 5u64..40), 1..5), 0u64..10, 0u64..10).prop_map(
            |(seq, shape, cds_trim_l, cds_trim_r)| {
                let mut exons = Vec::new();
                let mut p = 10;
                for (gap, len) in shape {
                    p += gap;
                    exons.push((p, p + len));
                    p += len;
                }
                (seq, exons, cds_trim_l, cds_trim_r)
            },
        )
    }

    proptest! {
        #[test]
        fn strand_symmetry((seq, exons, tl, tr) in arb_world(), pick in 0usize..1000, alt_pick in 0usize..3) {
            let len = seq.len() as u64;
            let tx = exons[0].0..exons.last().unwrap().1;
            let exonic: Vec<u64> = exons.iter().flat_map(|&(b, e)| b..e).collect();
            prop_assume!(exonic.len() as u64 > tl + tr + 1);
            let cds = exonic[tl as usize]..exonic[exonic.len() - 1 - tr as usize] + 1;
            let minus = TranscriptModel::new("G", "T", "1", Strand::Reverse, tx.clone(), cds.clone(),
                exons.iter().map(|&(b, e)| b..e).collect()).unwrap();
            let mirror = |r: std::ops::Range<u64>| len - r.end..len - r.start;
            let plus = TranscriptModel::new("G", "T", "1", Strand::Forward, mirror(tx), mirror(cds),
                exons.iter().rev().map(|&(b, e)| mirror(b..e)).collect()).unwrap();
            let g_minus = genome(&seq);
            let g_plus = genome(&reverse_complement(&seq).unwrap());

            let p = minus.tx.start + pick as u64 % (minus.tx.end - minus.tx.start);
            let r = seq.as_bytes()[p as usize];
            let alt = *b"ACGT".iter().filter(|&&b| b != r).nth(alt_pick).unwrap();
            let v_minus = snv(p, &(r as char).to_string(), &(alt as char).to_string());
            let v_plus = snv(len - 1 - p, &(complement(r).unwrap() as char).to_string(), &(complement(alt).unwrap() as char).to_string());
            let a = run(&minus, &g_minus, &v_minus);
            let b = run(&plus, &g_plus, &v_plus);
            prop_assert_eq!(a, b);
        }
    }
}
