//! Synthetic reference genomes, gene models and variant files.
//!
//! Everything is generated from a seeded RNG so fixtures are reproducible. The
//! generators only produce text; compression and indexing are left to the caller.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const BASES: &[u8; 4] = b"ACGT";

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'T' => b'A',
        b'C' => b'G',
        b'G' => b'C',
        other => other,
    }
}

pub fn reverse_complement(s: &[u8]) -> Vec<u8> {
    s.iter().rev().map(|&b| complement(b)).collect()
}

pub fn random_bases(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

/// A transcript in refFlat terms (0-based half-open coordinates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub gene: String,
    pub name: String,
    pub chrom: String,
    pub forward: bool,
    pub tx: (u64, u64),
    pub cds: (u64, u64),
    pub exons: Vec<(u64, u64)>,
}

impl Transcript {
    pub fn to_refflat(&self) -> String {
        let starts: String = self.exons.iter().map(|e| format!("{},", e.0)).collect();
        let ends: String = self.exons.iter().map(|e| format!("{},", e.1)).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.gene,
            self.name,
            self.chrom,
            if self.forward { '+' } else { '-' },
            self.tx.0,
            self.tx.1,
            self.cds.0,
            self.cds.1,
            self.exons.len(),
            starts,
            ends
        )
    }

    pub fn is_coding(&self) -> bool {
        self.cds.0 < self.cds.1
    }

    /// Genomic positions of the coding bases in transcript orientation.
    pub fn coding_positions(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .exons
            .iter()
            .flat_map(|&(b, e)| b.max(self.cds.0)..e.min(self.cds.1))
            .collect();
        if !self.forward {
            v.reverse();
        }
        v
    }
}

/// A genome with gene models placed on it.
#[derive(Debug, Clone)]
pub struct World {
    pub chroms: Vec<(String, Vec<u8>)>,
    pub transcripts: Vec<Transcript>,
}

#[derive(Debug, Clone)]
pub struct WorldSpec {
    pub chroms: Vec<(String, u64)>,
    /// Average distance between gene starts.
    pub gene_spacing: u64,
    pub max_exons: usize,
    pub exon_len: (u64, u64),
    pub intron_len: (u64, u64),
    /// Share of genes given a second, exon-skipping isoform.
    pub isoform_rate: f64,
    pub noncoding_rate: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            chroms: vec![("1".into(), 200_000), ("2".into(), 150_000), ("X".into(), 100_000)],
            gene_spacing: 20_000,
            max_exons: 6,
            exon_len: (40, 300),
            intron_len: (80, 2_000),
            isoform_rate: 0.3,
            noncoding_rate: 0.1,
        }
    }
}

impl World {
    pub fn generate(spec: &WorldSpec, rng: &mut impl Rng) -> World {
        let mut chroms: Vec<(String, Vec<u8>)> =
            spec.chroms.iter().map(|(n, l)| (n.clone(), random_bases(rng, *l as usize))).collect();
        let mut transcripts = Vec::new();
        let mut gene_no = 0;
        for (name, seq) in &mut chroms {
            let len = seq.len() as u64;
            let mut p = rng.gen_range(1_000..spec.gene_spacing.max(1_001));
            loop {
                let n_exons = rng.gen_range(1..=spec.max_exons);
                let mut exons = Vec::new();
                let mut q = p;
                for i in 0..n_exons {
                    if i > 0 {
                        q += rng.gen_range(spec.intron_len.0..=spec.intron_len.1);
                    }
                    let l = rng.gen_range(spec.exon_len.0..=spec.exon_len.1);
                    exons.push((q, q + l));
                    q += l;
                }
                if q + 2_000 >= len {
                    break;
                }
                gene_no += 1;
                let gene = format!("G{gene_no}");
                let forward = rng.gen_bool(0.5);
                let coding = !rng.gen_bool(spec.noncoding_rate);
                let t = make_transcript(rng, seq, &gene, &format!("NM_{gene_no}"), name, forward, exons.clone(), coding);
                transcripts.push(t);
                if exons.len() > 2 && rng.gen_bool(spec.isoform_rate) {
                    let mut skipped = exons.clone();
                    skipped.remove(rng.gen_range(1..exons.len() - 1));
                    let t = make_transcript(rng, seq, &gene, &format!("NM_{gene_no}_2"), name, forward, skipped, coding);
                    transcripts.push(t);
                }
                p = q + rng.gen_range(spec.gene_spacing / 4..=spec.gene_spacing.max(4) * 7 / 4);
            }
        }
        World { chroms, transcripts }
    }

    pub fn seq(&self, chrom: &str) -> &[u8] {
        &self.chroms.iter().find(|(n, _)| n == chrom).expect("chromosome exists").1
    }

    pub fn genes(&self) -> Vec<String> {
        let mut g: Vec<String> = self.transcripts.iter().map(|t| t.gene.clone()).collect();
        g.dedup();
        g
    }

    pub fn write_fasta(&self, path: &Path, width: usize) -> io::Result<()> {
        write_fasta(path, &self.chroms, width)
    }

    pub fn write_refflat(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for t in &self.transcripts {
            writeln!(w, "{}", t.to_refflat())?;
        }
        w.flush()
    }
}

/// Chooses a CDS inside the exons and writes a start codon at its 5' end.
#[allow(clippy::too_many_arguments)]
fn make_transcript(
    rng: &mut impl Rng,
    seq: &mut [u8],
    gene: &str,
    name: &str,
    chrom: &str,
    forward: bool,
    exons: Vec<(u64, u64)>,
    coding: bool,
) -> Transcript {
    let tx = (exons[0].0, exons.last().unwrap().1);
    let exonic: Vec<u64> = exons.iter().flat_map(|&(b, e)| b..e).collect();
    let cds = if coding && exonic.len() >= 9 {
        let max_trim = exonic.len() / 4;
        let mut a = rng.gen_range(0..=max_trim);
        let mut b = exonic.len() - 1 - rng.gen_range(0..=max_trim);
        // mostly whole codons; sometimes a ragged end
        if rng.gen_bool(0.9) {
            let n = (b - a + 1) / 3 * 3;
            if forward {
                b = a + n - 1;
            } else {
                a = b + 1 - n;
            }
        }
        let cds = (exonic[a], exonic[b] + 1);
        let start: Vec<u64> = if forward { exonic[a..a + 3].to_vec() } else { exonic[b - 2..=b].to_vec() };
        let codon: &[u8] = if forward { b"ATG" } else { b"CAT" };
        for (p, base) in start.iter().zip(codon) {
            seq[*p as usize] = *base;
        }
        cds
    } else {
        (tx.1, tx.1)
    };
    Transcript { gene: gene.into(), name: name.into(), chrom: chrom.into(), forward, tx, cds, exons }
}

pub fn write_fasta(path: &Path, chroms: &[(String, Vec<u8>)], width: usize) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut fai = String::new();
    let mut offset = 0u64;
    for (name, seq) in chroms {
        let header = format!(">{name}\n");
        w.write_all(header.as_bytes())?;
        offset += header.len() as u64;
        fai.push_str(&format!("{name}\t{}\t{offset}\t{width}\t{}\n", seq.len(), width + 1));
        for line in seq.chunks(width) {
            w.write_all(line)?;
            w.write_all(b"\n")?;
            offset += line.len() as u64 + 1;
        }
    }
    w.flush()?;
    let mut fai_path = path.as_os_str().to_owned();
    fai_path.push(".fai");
    std::fs::write(fai_path, fai)
}

/// One VCF site (1-based position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub chrom: String,
    pub pos: u64,
    pub ref_allele: String,
    pub alts: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SiteSpec {
    pub indel_rate: f64,
    pub multi_allelic_rate: f64,
}

impl Default for SiteSpec {
    fn default() -> Self {
        SiteSpec { indel_rate: 0.08, multi_allelic_rate: 0.03 }
    }
}

/// Generates `n` coordinate-sorted sites spread over the world's chromosomes, with
/// reference alleles taken from the genome. Sites are produced lazily.
pub fn sites<'a, R: Rng>(world: &'a World, n: u64, spec: SiteSpec, rng: &'a mut R) -> impl Iterator<Item = Site> + 'a {
    let total: u64 = world.chroms.iter().map(|(_, s)| s.len() as u64 - 20).sum();
    let mut per_chrom: Vec<u64> = world.chroms.iter().map(|(_, s)| n * (s.len() as u64 - 20) / total).collect();
    let short = n - per_chrom.iter().sum::<u64>();
    per_chrom[0] += short;
    world.chroms.iter().zip(per_chrom).flat_map(move |((name, seq), k)| {
        let len = seq.len() as u64 - 20;
        let mut positions: Vec<u64> = Vec::new();
        if k > 0 {
            // evenly spread, jittered, non-decreasing
            let step = len as f64 / k as f64;
            for i in 0..k {
                let base = (i as f64 * step) as u64;
                let jitter = rng.gen_range(0..step.max(1.0) as u64);
                positions.push((base + jitter).min(len - 1) + 1);
            }
            positions.sort_unstable();
        }
        let sites: Vec<Site> = positions
            .into_iter()
            .map(|pos| make_site(name, seq, pos, &spec, rng))
            .collect();
        sites
    })
}

fn make_site(chrom: &str, seq: &[u8], pos: u64, spec: &SiteSpec, rng: &mut impl Rng) -> Site {
    let p = pos as usize - 1;
    let r = seq[p];
    if rng.gen_bool(spec.indel_rate) {
        let len = rng.gen_range(1..=6);
        if rng.gen_bool(0.5) {
            let ref_allele = String::from_utf8(seq[p..p + 1 + len].to_vec()).unwrap();
            return Site { chrom: chrom.into(), pos, ref_allele, alts: vec![(r as char).to_string()] };
        }
        let mut alt = vec![r];
        alt.extend(random_bases(rng, len));
        return Site {
            chrom: chrom.into(),
            pos,
            ref_allele: (r as char).to_string(),
            alts: vec![String::from_utf8(alt).unwrap()],
        };
    }
    let mut others: Vec<u8> = BASES.iter().copied().filter(|&b| b != r).collect();
    others.shuffle(rng);
    let n_alt = if rng.gen_bool(spec.multi_allelic_rate) { 2 } else { 1 };
    Site {
        chrom: chrom.into(),
        pos,
        ref_allele: (r as char).to_string(),
        alts: others[..n_alt].iter().map(|&b| (b as char).to_string()).collect(),
    }
}

pub const VCF_META: &str = "##fileformat=VCFv4.2\n##source=varseer-synth\n";

/// VCF header with a GT:DP FORMAT declaration and the given sample count.
pub fn vcf_header(samples: usize) -> String {
    let mut h = String::from(VCF_META);
    h.push_str("##FORMAT=<ID=GT,Number=1,Type=String,Description=\"Genotype\">\n");
    h.push_str("##FORMAT=<ID=DP,Number=1,Type=Integer,Description=\"Read depth\">\n");
    h.push_str("#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO");
    if samples > 0 {
        h.push_str("\tFORMAT");
        for i in 0..samples {
            h.push_str(&format!("\tS{i}"));
        }
    }
    h.push('\n');
    h
}

/// One VCF data line with random genotypes and depths for `samples` samples.
pub fn vcf_line(site: &Site, id: u64, samples: usize, rng: &mut impl Rng) -> String {
    let mut s = format!(
        "{}\t{}\tv{id}\t{}\t{}\t{}\tPASS\tDP={}",
        site.chrom,
        site.pos,
        site.ref_allele,
        site.alts.join(","),
        rng.gen_range(10..99),
        rng.gen_range(10..999)
    );
    if samples > 0 {
        s.push_str("\tGT:DP");
        let n_alt = site.alts.len() as u32;
        for _ in 0..samples {
            let gt = match rng.gen_range(0..100) {
                0..=69 => "0/0".to_string(),
                70..=89 => format!("0/{}", rng.gen_range(1..=n_alt)),
                90..=97 => format!("{}|{}", rng.gen_range(1..=n_alt), rng.gen_range(1..=n_alt)),
                _ => "./.".to_string(),
            };
            s.push_str(&format!("\t{gt}:{}", rng.gen_range(0..60)));
        }
    }
    s
}

/// Streams a complete VCF of `n` sites to `w`.
pub fn write_vcf(w: &mut impl Write, world: &World, n: u64, samples: usize, seed: u64) -> io::Result<()> {
    let mut site_rng = rng(seed);
    let mut gt_rng = rng(seed ^ 0x9e37_79b9);
    w.write_all(vcf_header(samples).as_bytes())?;
    for (i, site) in sites(world, n, SiteSpec::default(), &mut site_rng).enumerate() {
        writeln!(w, "{}", vcf_line(&site, i as u64, samples, &mut gt_rng))?;
    }
    Ok(())
}

/// METAL-style summary statistics with `chr:pos:ref:alt` markers.
pub fn write_metal(w: &mut impl Write, world: &World, n: u64, tab: bool, seed: u64) -> io::Result<()> {
    let mut site_rng = rng(seed);
    let mut stat_rng = rng(seed ^ 0x51ed);
    let sep = if tab { "\t" } else { " " };
    writeln!(w, "{}", ["MarkerName", "Allele1", "Allele2", "Effect", "StdErr", "P-value"].join(sep))?;
    let spec = SiteSpec { indel_rate: 0.0, multi_allelic_rate: 0.0 };
    for site in sites(world, n, spec, &mut site_rng) {
        let marker = if stat_rng.gen_bool(0.8) {
            format!("{}:{}:{}:{}", site.chrom, site.pos, site.ref_allele, site.alts[0])
        } else {
            format!("{}:{}", site.chrom, site.pos)
        };
        let effect: f64 = stat_rng.gen_range(-0.5..0.5);
        let se: f64 = stat_rng.gen_range(0.01..0.2);
        let p: f64 = stat_rng.gen_range(0.0..1.0);
        writeln!(
            w,
            "{}",
            [
                marker,
                site.alts[0].to_lowercase(),
                site.ref_allele.to_lowercase(),
                format!("{effect:.4}"),
                format!("{se:.4}"),
                format!("{p:.4e}")
            ]
            .join(sep)
        )?;
    }
    Ok(())
}

/// Random named intervals as BED text (unsorted).
pub fn bed_text(world: &World, n: usize, max_len: u64, rng: &mut impl Rng) -> String {
    let mut s = String::new();
    for i in 0..n {
        let (name, seq) = world.chroms.choose(rng).expect("world has chromosomes");
        let len = rng.gen_range(1..=max_len);
        let beg = rng.gen_range(0..seq.len() as u64 - len);
        s.push_str(&format!("{name}\t{beg}\t{}\tR{i}\n", beg + len));
    }
    s
}

/// Score rows `chrom pos ref alt value` for a sorted subset of SNV sites, with a header line.
pub fn score_text(world: &World, every: u64, rng: &mut impl Rng) -> String {
    let mut s = String::from("#chrom\tpos\tref\talt\tscore\n");
    for (name, seq) in &world.chroms {
        let mut p = rng.gen_range(1..=every);
        while p <= seq.len() as u64 {
            let r = seq[p as usize - 1];
            for &a in BASES.iter().filter(|&&b| b != r) {
                s.push_str(&format!("{name}\t{p}\t{}\t{}\t{:.3}\n", r as char, a as char, rng.gen_range(0.0..1.0)));
            }
            p += rng.gen_range(1..=every);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn world_is_consistent() {
        let w = World::generate(&WorldSpec::default(), &mut rng(1));
        assert!(w.transcripts.len() > 10);
        for t in &w.transcripts {
            assert!(t.exons.windows(2).all(|p| p[0].1 <= p[1].0));
            if t.is_coding() {
                let cds = t.coding_positions();
                let seq = w.seq(&t.chrom);
                let first: Vec<u8> = cds[..3].iter().map(|&p| seq[p as usize]).collect();
                let first = if t.forward { first } else { first.iter().map(|&b| complement(b)).collect() };
                assert_eq!(first, b"ATG", "{}", t.name);
            }
        }
    }

    #[test]
    fn sites_sorted_and_counted() {
        let w = World::generate(&WorldSpec::default(), &mut rng(2));
        let mut r = rng(3);
        let s: Vec<Site> = sites(&w, 1000, SiteSpec::default(), &mut r).collect();
        assert_eq!(s.len(), 1000);
        for pair in s.windows(2) {
            if pair[0].chrom == pair[1].chrom {
                assert!(pair[0].pos <= pair[1].pos);
            }
        }
        for site in &s {
            let seq = w.seq(&site.chrom);
            let p = site.pos as usize - 1;
            assert_eq!(site.ref_allele.as_bytes(), &seq[p..p + site.ref_allele.len()]);
        }
    }
}
