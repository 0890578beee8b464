use crate::genemodel::{headline, Annotation, AnnotationType};

pub const ANNO_KEY: &str = "ANNO";
pub const ANNOFULL_KEY: &str = "ANNOFULL";

/// `GENE:TYPE[:codonChange:aaChange]` for the highest-precedence annotation, or `Intergenic`.
pub fn headline_text(anns: &[Annotation]) -> String {
    match headline(anns) {
        None => AnnotationType::Intergenic.name().to_string(),
        Some(a) => {
            let mut s = format!("{}:{}", a.gene, a.kind);
            if let Some(c) = &a.coding {
                s.push(':');
                s.push_str(&c.codon_change());
                s.push(':');
                s.push_str(&c.aa_change());
            }
            s
        }
    }
}

/// Every annotation grouped by gene: `GENE:TX:TYPE[:codon:aa:c.N],TX2:TYPE|GENE2:...`.
pub fn full_text(anns: &[Annotation]) -> Option<String> {
    let mut genes: Vec<(&str, Vec<String>)> = Vec::new();
    for a in anns {
        let mut entry = format!("{}:{}", a.transcript, a.kind);
        if let Some(c) = &a.coding {
            entry.push_str(&format!(":{}:{}:c.{}", c.codon_change(), c.aa_change(), c.cds_offset + 1));
        }
        match genes.iter_mut().find(|(g, _)| *g == a.gene) {
            Some((_, v)) => v.push(entry),
            None => genes.push((&a.gene, vec![entry])),
        }
    }
    if genes.is_empty() {
        return None;
    }
    Some(genes.into_iter().map(|(g, v)| format!("{g}:{}", v.join(","))).collect::<Vec<_>>().join("|"))
}

/// A parsed headline: the gene (absent for `Intergenic`) and its type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Headline {
    pub gene: Option<String>,
    pub kind: AnnotationType,
}

pub fn parse_headline(s: &str) -> Option<Headline> {
    let mut parts = s.split(':');
    let first = parts.next()?;
    match parts.next() {
        None => first.parse().ok().map(|kind| Headline { gene: None, kind }),
        Some(kind) => Some(Headline { gene: Some(first.to_string()), kind: kind.parse().ok()? }),
    }
}

/// One gene's entries within an ANNOFULL value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneEntry {
    pub gene: String,
    pub transcripts: Vec<(String, AnnotationType)>,
}

/// Parses one alternate allele's ANNOFULL value.
pub fn parse_full(s: &str) -> Vec<GeneEntry> {
    if s == "." || s.is_empty() {
        return Vec::new();
    }
    s.split('|')
        .filter_map(|group| {
            let (gene, rest) = group.split_once(':')?;
            let transcripts = rest
                .split(',')
                .filter_map(|e| {
                    let mut f = e.split(':');
                    let tx = f.next()?;
                    Some((tx.to_string(), f.next()?.parse().ok()?))
                })
                .collect();
            Some(GeneEntry { gene: gene.to_string(), transcripts })
        })
        .collect()
}
