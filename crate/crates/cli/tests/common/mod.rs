#![allow(dead_code)]

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flate2::read::MultiGzDecoder;
use tempfile::TempDir;
use varseer::bgzf::BgzfWriter;
use varseer_synth::{rng, World, WorldSpec};

pub fn varseer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varseer")).args(args).output().expect("binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[track_caller]
pub fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", stderr(o));
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn bgzip(text: &[u8], path: &Path) {
    let mut w = BgzfWriter::new(File::create(path).unwrap());
    w.append(text).unwrap();
    w.finish().unwrap();
}

/// Decompresses with a general gzip reader, independent of the BGZF code.
pub fn gunzip(path: &Path) -> String {
    let mut s = String::new();
    MultiGzDecoder::new(File::open(path).unwrap()).read_to_string(&mut s).unwrap();
    s
}

pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A small reference, gene table, region and score databases, and a VCF with samples.
pub struct Toy {
    pub dir: TempDir,
    pub world: World,
    pub fasta: PathBuf,
    pub genes: PathBuf,
    pub bed: PathBuf,
    pub score: PathBuf,
    pub vcf: PathBuf,
    pub metal: PathBuf,
}

impl Toy {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Annotates the VCF with every database; returns the output path.
    pub fn annotated(&self) -> PathBuf {
        let out = self.path("toy.anno.vcf.gz");
        if !out.exists() {
            ok(&varseer(&[
                "annotate",
                "--in",
                p(&self.vcf),
                "--out",
                p(&out),
                "--gene",
                p(&self.genes),
                "--ref",
                p(&self.fasta),
                "--bed",
                &format!("REG={}", p(&self.bed)),
                "--score",
                &format!("SC={}", p(&self.score)),
            ]));
        }
        out
    }
}

pub fn toy() -> Toy {
    let dir = tempfile::tempdir().unwrap();
    let spec = WorldSpec {
        chroms: vec![("1".into(), 40_000), ("2".into(), 25_000)],
        gene_spacing: 6_000,
        ..WorldSpec::default()
    };
    let world = World::generate(&spec, &mut rng(11));
    let fasta = dir.path().join("ref.fa");
    world.write_fasta(&fasta, 60).unwrap();
    let genes = dir.path().join("genes.refflat");
    world.write_refflat(&genes).unwrap();

    let bed = dir.path().join("regions.bed");
    std::fs::write(&bed, varseer_synth::bed_text(&world, 40, 3_000, &mut rng(12))).unwrap();

    let score_txt = dir.path().join("scores.tsv.gz");
    bgzip(varseer_synth::score_text(&world, 40, &mut rng(13)).as_bytes(), &score_txt);
    ok(&varseer(&["index", "--in", p(&score_txt), "--preset", "tab", "--schema", "1,2,0,1"]));

    let vcf = dir.path().join("toy.vcf");
    let mut f = File::create(&vcf).unwrap();
    varseer_synth::write_vcf(&mut f, &world, 1_500, 4, 14).unwrap();
    f.flush().unwrap();

    let metal = dir.path().join("toy.metal.txt");
    let mut f = File::create(&metal).unwrap();
    varseer_synth::write_metal(&mut f, &world, 800, true, 15).unwrap();
    f.flush().unwrap();

    Toy { dir, world, fasta, genes, bed, score: score_txt, vcf, metal }
}

/// Annotation types in precedence order, highest first.
pub const PRECEDENCE: [&str; 16] = [
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

pub fn rank(t: &str) -> usize {
    PRECEDENCE.iter().position(|x| *x == t).unwrap_or_else(|| panic!("unknown type {t}"))
}

pub fn info_value<'a>(vcf_line: &'a str, key: &str) -> Option<&'a str> {
    let info = vcf_line.split('\t').nth(7)?;
    info.split(';').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

/// Highest-precedence type `gene` receives in a VCF line's full annotation, across alleles.
pub fn vcf_gene_type(line: &str, gene: &str) -> Option<&'static str> {
    let full = info_value(line, "ANNOFULL")?;
    let mut best: Option<usize> = None;
    for allele in full.split('&').filter(|a| *a != ".") {
        for g in allele.split('|') {
            let (name, txs) = g.split_once(':').unwrap();
            if name != gene {
                continue;
            }
            for tx in txs.split(',') {
                let t = tx.split(':').nth(1).unwrap();
                best = Some(best.map_or(rank(t), |b| b.min(rank(t))));
            }
        }
    }
    best.map(|r| PRECEDENCE[r])
}

/// Gene and type of a tab line's headline annotation in column `col`.
pub fn tab_gene_type(line: &str, col: usize) -> Option<(String, String)> {
    let anno = line.split('\t').nth(col)?;
    let mut parts = anno.split(':');
    let gene = parts.next()?;
    let kind = parts.next()?;
    Some((gene.to_string(), kind.to_string()))
}

/// Data lines of a text file (lines not starting with '#').
pub fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}
