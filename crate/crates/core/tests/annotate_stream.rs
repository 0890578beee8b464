use std::collections::HashMap;
use std::io::{Cursor, Read};

use rand::Rng;
use varseer::annotator::{AnnotatedOutput, Annotator, GeneDb, InputFormat, IntervalSet, OrderedIntervals};
use varseer::bgzf::BgzfReader;
use varseer::genemodel::Flanks;
use varseer::records::{InMemoryGenome, MarkerSpec};
use varseer::tabindex::TabSchema;
use varseer_synth::{rng, World, WorldSpec};

const PRECEDENCE: [&str; 16] = [
    "StopGain",
    "StopLoss",
    "StartLoss",
    "FrameshiftIndel",
    "Nonsynonymous",
    "InframeIndel",
    "SpliceSite",
    "Synonymous",
    "Utr5",
    "Utr3",
    "NoncodingExon",
    "Intron",
    "Upstream",
    "Downstream",
    "Intergenic",
    "Unknown",
];

fn rank(t: &str) -> usize {
    PRECEDENCE.iter().position(|x| *x == t).unwrap_or_else(|| panic!("unknown type {t}"))
}

fn world(seed: u64) -> World {
    let spec = WorldSpec { chroms: vec![("1".into(), 60_000), ("2".into(), 30_000)], gene_spacing: 5_000, ..Default::default() };
    World::generate(&spec, &mut rng(seed))
}

fn annotator(w: &World) -> Annotator {
    let mut genome = InMemoryGenome::new();
    for (name, seq) in &w.chroms {
        genome.insert(name, std::str::from_utf8(seq).unwrap());
    }
    let refflat: String = w.transcripts.iter().map(|t| t.to_refflat() + "\n").collect();
    let genes = GeneDb::from_reader(refflat.as_bytes(), Flanks::default()).unwrap();
    let regions: IntervalSet = OrderedIntervals::build(
        (0..30u64).map(|i| ("1".to_string(), i * 2_000, i * 2_000 + 700, format!("R{i}"))),
    );
    Annotator::new(genes, Box::new(genome), vec![("REG".into(), regions)], vec![])
}

fn run(a: &mut Annotator, input: &str, format: &InputFormat) -> (String, AnnotatedOutput<Vec<u8>>) {
    let out = a.run(input.as_bytes(), format, Vec::new(), true).unwrap();
    let mut text = String::new();
    BgzfReader::new(Cursor::new(&out.sink)).read_to_string(&mut text).unwrap();
    (text, out)
}

fn vcf_text(w: &World, n: u64, samples: usize) -> String {
    let mut buf = Vec::new();
    varseer_synth::write_vcf(&mut buf, w, n, samples, 5).unwrap();
    String::from_utf8(buf).unwrap()
}

const OURS: [&str; 3] = ["ANNO", "ANNOFULL", "REG"];

/// Removes what the annotator added to a VCF.
fn strip_vcf(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if line.starts_with("##INFO=<ID=") && OURS.iter().any(|k| line.starts_with(&format!("##INFO=<ID={k},"))) {
            continue;
        }
        if line.starts_with('#') {
            out.push_str(line);
        } else {
            let mut cols: Vec<String> = line.split('\t').map(str::to_string).collect();
            let kept: Vec<&str> =
                cols[7].split(';').filter(|kv| !OURS.contains(&kv.split('=').next().unwrap())).collect();
            cols[7] = if kept.is_empty() { ".".into() } else { kept.join(";") };
            out.push_str(&cols.join("\t"));
        }
        out.push('\n');
    }
    out
}

#[test]
fn vcf_content_preserved() {
    let w = world(1);
    let mut a = annotator(&w);
    let mut input = vcf_text(&w, 2_000, 3);
    // some records with a '.' INFO column
    input = input
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let mut c: Vec<&str> = l.split('\t').collect();
            if i % 7 == 3 && !l.starts_with('#') {
                c[7] = ".";
            }
            c.join("\t") + "\n"
        })
        .collect();
    let (text, out) = run(&mut a, &input, &InputFormat::Vcf);
    assert_eq!(strip_vcf(&text), input);
    assert_eq!(out.summary.records_read, 2_000);
    assert_eq!(out.summary.types.values().sum::<u64>(), 2_000);
}

#[test]
fn headline_is_top_of_full_annotation() {
    let w = world(2);
    let mut a = annotator(&w);
    let (text, _) = run(&mut a, &vcf_text(&w, 3_000, 0), &InputFormat::Vcf);
    let mut coding = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let info: HashMap<&str, &str> =
            line.split('\t').nth(7).unwrap().split(';').filter_map(|kv| kv.split_once('=')).collect();
        let heads: Vec<&str> = info["ANNO"].split(',').collect();
        let fulls: Vec<&str> = info.get("ANNOFULL").map(|f| f.split('&').collect()).unwrap_or(vec!["."; heads.len()]);
        assert_eq!(heads.len(), fulls.len(), "{line}");
        for (h, f) in heads.iter().zip(&fulls) {
            if *f == "." {
                assert!(*h == "Intergenic" || *h == "Unknown", "{line}");
                continue;
            }
            let mut best: Option<(usize, &str)> = None;
            for g in f.split('|') {
                let (gene, txs) = g.split_once(':').unwrap();
                for tx in txs.split(',') {
                    let r = rank(tx.split(':').nth(1).unwrap());
                    if best.is_none_or(|(b, _)| r < b) {
                        best = Some((r, gene));
                    }
                }
            }
            let (r, _) = best.unwrap();
            let parts: Vec<&str> = h.split(':').collect();
            assert_eq!(rank(parts[1]), r, "{line}");
            if parts.len() == 4 {
                coding += 1;
                // codon change: exactly one differing base, upper case
                let (rc, ac) = parts[2].split_once('/').unwrap();
                let diff: Vec<(char, char)> = rc.chars().zip(ac.chars()).filter(|(x, y)| x != y).collect();
                assert_eq!(diff.len(), 1, "{line}");
                assert!(diff[0].0.is_ascii_uppercase() && diff[0].1.is_ascii_uppercase());
            }
        }
    }
    assert!(coding > 50);
}

#[test]
fn empty_inputs() {
    let w = world(3);
    let mut a = annotator(&w);
    let (text, out) = run(&mut a, "", &InputFormat::Vcf);
    assert!(text.lines().all(|l| l.starts_with("##INFO=")));
    assert_eq!(out.summary.records_read, 0);
    assert!(out.index.unwrap().names().is_empty());

    let (text, out) = run(&mut a, "", &InputFormat::Tab(TabSchema::bed()));
    assert_eq!(text, "");
    assert_eq!(out.summary.records_written, 0);

    let (text, _) = run(&mut a, "", &InputFormat::Metal(MarkerSpec::default()));
    assert_eq!(text, "");
}

#[test]
fn tab_and_metal_content_preserved() {
    let w = world(4);
    let mut a = annotator(&w);
    let mut r = rng(9);
    let mut bed = String::from("#chrom\tbeg\tend\n");
    let mut rows: Vec<(String, u64)> =
        (0..500).map(|_| (if r.gen_bool(0.6) { "1" } else { "2" }.to_string(), r.gen_range(0..29_000))).collect();
    rows.sort();
    for (c, b) in &rows {
        bed.push_str(&format!("{c}\t{b}\t{}\n", b + 1));
    }
    let (text, _) = run(&mut a, &bed, &InputFormat::Tab(TabSchema::bed()));
    let stripped: String = text
        .lines()
        .map(|l| l.splitn(4, '\t').take(3).collect::<Vec<_>>().join("\t") + "\n")
        .collect();
    assert_eq!(stripped, bed);

    let mut metal = Vec::new();
    varseer_synth::write_metal(&mut metal, &w, 700, true, 3).unwrap();
    let metal = String::from_utf8(metal).unwrap();
    let (text, out) = run(&mut a, &metal, &InputFormat::Metal(MarkerSpec::default()));
    let ncol = metal.lines().next().unwrap().split('\t').count();
    let stripped: String =
        text.lines().map(|l| l.split('\t').take(ncol).collect::<Vec<_>>().join("\t") + "\n").collect();
    assert_eq!(stripped, metal);
    assert_eq!(out.summary.records_written, 700);
    assert_eq!(out.summary.ref_mismatches, 0);
}

#[test]
fn reference_mismatch_is_counted() {
    let w = world(5);
    let mut a = annotator(&w);
    let t = w.transcripts.iter().find(|t| t.is_coding()).unwrap();
    let p = t.coding_positions()[4];
    let real = w.seq(&t.chrom)[p as usize];
    let wrong = if real == b'A' { 'C' } else { 'A' };
    let alt = if wrong == 'G' || real == b'G' { 'T' } else { 'G' };
    let vcf = format!("{}\t{}\t.\t{wrong}\t{alt}\t.\t.\t.\n", t.chrom, p + 1);
    let (text, out) = run(&mut a, &vcf, &InputFormat::Vcf);
    assert_eq!(out.summary.ref_mismatches, 1);
    assert!(text.contains(&format!("ANNO={}:Unknown", t.gene)), "{text}");
}
