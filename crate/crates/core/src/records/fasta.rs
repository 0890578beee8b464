use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::normalize_chrom;

/// Random access to reference bases by 0-based half-open range.
pub trait Genome {
    /// Uppercase bases of `chrom` over `[beg, end)`.
    fn fetch(&self, chrom: &str, beg: u64, end: u64) -> Result<String>;
    fn length(&self, chrom: &str) -> Option<u64>;
}

/// One line of a `.fai` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaiEntry {
    pub name: String,
    pub length: u64,
    pub offset: u64,
    pub linebases: u64,
    pub linewidth: u64,
}

impl FaiEntry {
    /// File offset of 0-based base `p`.
    pub fn byte_offset(&self, p: u64) -> u64 {
        self.offset + (p / self.linebases) * self.linewidth + p % self.linebases
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FastaIndex {
    entries: Vec<FaiEntry>,
    by_name: HashMap<String, usize>,
}

impl FastaIndex {
    pub fn from_entries(entries: Vec<FaiEntry>) -> Result<Self> {
        let mut by_name = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.linebases == 0 || e.linewidth < e.linebases {
                return Err(Error::Format(format!("fai entry {}: linewidth must be >= linebases > 0", e.name)));
            }
            if by_name.insert(normalize_chrom(&e.name), i).is_some() {
                return Err(Error::Format(format!("sequence {} appears twice in the FASTA index", e.name)));
            }
        }
        Ok(FastaIndex { entries, by_name })
    }

    /// Parses the 5-column `.fai` text layout.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 5 {
                return Err(Error::parse_at(n as u64 + 1, "fai line needs 5 columns"));
            }
            let num = |i: usize| -> Result<u64> {
                cols[i].parse().map_err(|_| Error::parse_at(n as u64 + 1, format!("'{}' is not an integer", cols[i])))
            };
            entries.push(FaiEntry {
                name: cols[0].to_string(),
                length: num(1)?,
                offset: num(2)?,
                linebases: num(3)?,
                linewidth: num(4)?,
            });
        }
        Self::from_entries(entries)
    }

    /// Computes the index by scanning a FASTA file. All lines of a sequence except the
    /// last must have the same length.
    pub fn build(reader: impl BufRead) -> Result<Self> {
        struct Open {
            entry: FaiEntry,
            short_line: bool,
        }
        fn close(cur: Option<Open>, entries: &mut Vec<FaiEntry>) {
            if let Some(mut c) = cur {
                if c.entry.linebases == 0 {
                    c.entry.linebases = 1;
                    c.entry.linewidth = 1;
                }
                entries.push(c.entry);
            }
        }
        let mut reader = reader;
        let mut entries = Vec::new();
        let mut cur: Option<Open> = None;
        let mut offset = 0u64;
        let mut buf = Vec::new();
        let mut line_no = 0u64;
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf)? as u64;
            if n == 0 {
                break;
            }
            line_no += 1;
            if buf[0] == b'>' {
                close(cur.take(), &mut entries);
                let header = String::from_utf8_lossy(&buf[1..]);
                let name = header.split_whitespace().next().unwrap_or("").to_string();
                if name.is_empty() {
                    return Err(Error::parse_at(line_no, "FASTA header without a name"));
                }
                cur = Some(Open {
                    entry: FaiEntry { name, length: 0, offset: offset + n, linebases: 0, linewidth: 0 },
                    short_line: false,
                });
            } else {
                let c = cur.as_mut().ok_or_else(|| Error::parse_at(line_no, "sequence data before the first '>' header"))?;
                let bases = buf.iter().filter(|b| !b.is_ascii_whitespace()).count() as u64;
                if bases > 0 {
                    let e = &mut c.entry;
                    if e.linebases == 0 {
                        e.linebases = bases;
                        e.linewidth = n;
                    } else if c.short_line || bases > e.linebases || (bases == e.linebases && n != e.linewidth) {
                        return Err(Error::Format(format!("{}: uneven line lengths at line {line_no}", e.name)));
                    }
                    c.short_line = bases < e.linebases;
                    e.length += bases;
                }
            }
            offset += n;
        }
        close(cur, &mut entries);
        Self::from_entries(entries)
    }

    pub fn entries(&self) -> &[FaiEntry] {
        &self.entries
    }

    pub fn get(&self, chrom: &str) -> Option<&FaiEntry> {
        self.by_name.get(&normalize_chrom(chrom)).map(|&i| &self.entries[i])
    }

    pub fn to_fai(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\t{}\t{}\n", e.name, e.length, e.offset, e.linebases, e.linewidth))
            .collect()
    }
}

fn fai_path(fasta: &Path) -> PathBuf {
    let mut s = fasta.as_os_str().to_owned();
    s.push(".fai");
    PathBuf::from(s)
}

/// A FASTA file read through its `.fai` index with positional reads.
#[derive(Debug)]
pub struct IndexedFasta {
    file: File,
    index: FastaIndex,
}

impl IndexedFasta {
    /// Opens `path`, using `path.fai` when present and otherwise indexing the file in memory.
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let fai = fai_path(path);
        let index = if fai.exists() {
            FastaIndex::parse(&std::fs::read_to_string(&fai)?)?
        } else {
            log::info!("{} not found, indexing {} in memory", fai.display(), path.display());
            FastaIndex::build(BufReader::new(File::open(path)?))?
        };
        Ok(IndexedFasta { file, index })
    }

    pub fn with_index(file: File, index: FastaIndex) -> Self {
        IndexedFasta { file, index }
    }

    pub fn index(&self) -> &FastaIndex {
        &self.index
    }

    fn read_at(&self, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
        #[cfg(unix)]
        {
            use std::os::unix::fs::FileExt;
            self.file.read_exact_at(buf, offset)
        }
        #[cfg(windows)]
        {
            use std::os::windows::fs::FileExt;
            let mut done = 0;
            while done < buf.len() {
                match self.file.seek_read(&mut buf[done..], offset + done as u64)? {
                    0 => return Err(std::io::ErrorKind::UnexpectedEof.into()),
                    n => done += n,
                }
            }
            Ok(())
        }
    }
}

impl Genome for IndexedFasta {
    fn fetch(&self, chrom: &str, beg: u64, end: u64) -> Result<String> {
        let e = self.index.get(chrom).ok_or_else(|| Error::Lookup(format!("sequence {chrom} not in reference")))?;
        if beg > end || end > e.length {
            return Err(Error::Range(format!("[{beg}, {end}) outside {chrom} (length {})", e.length)));
        }
        if beg == end {
            return Ok(String::new());
        }
        let (from, to) = (e.byte_offset(beg), e.byte_offset(end - 1) + 1);
        let mut raw = vec![0u8; (to - from) as usize];
        self.read_at(&mut raw, from)?;
        raw.retain(|b| !b.is_ascii_whitespace());
        raw.make_ascii_uppercase();
        if raw.len() as u64 != end - beg {
            return Err(Error::Format(format!("reference {chrom} does not match its index")));
        }
        String::from_utf8(raw).map_err(|_| Error::Format(format!("non-ASCII bases in {chrom}")))
    }

    fn length(&self, chrom: &str) -> Option<u64> {
        self.index.get(chrom).map(|e| e.length)
    }
}

/// Sequences held in memory, keyed by normalized name.
#[derive(Debug, Clone, Default)]
pub struct InMemoryGenome {
    seqs: HashMap<String, Vec<u8>>,
}

impl InMemoryGenome {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, chrom: &str, bases: &str) {
        self.seqs.insert(normalize_chrom(chrom), bases.to_ascii_uppercase().into_bytes());
    }
}

impl Genome for InMemoryGenome {
    fn fetch(&self, chrom: &str, beg: u64, end: u64) -> Result<String> {
        let s = self.seqs.get(&normalize_chrom(chrom)).ok_or_else(|| Error::Lookup(format!("sequence {chrom} not in reference")))?;
        if beg > end || end > s.len() as u64 {
            return Err(Error::Range(format!("[{beg}, {end}) outside {chrom} (length {})", s.len())));
        }
        Ok(String::from_utf8_lossy(&s[beg as usize..end as usize]).into_owned())
    }

    fn length(&self, chrom: &str) -> Option<u64> {
        self.seqs.get(&normalize_chrom(chrom)).map(|s| s.len() as u64)
    }
}

impl<G: Genome + ?Sized> Genome for &G {
    fn fetch(&self, chrom: &str, beg: u64, end: u64) -> Result<String> {
        (**self).fetch(chrom, beg, end)
    }

    fn length(&self, chrom: &str) -> Option<u64> {
        (**self).length(chrom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn fasta_file(text: &str) -> (tempfile::NamedTempFile, IndexedFasta) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f.flush().unwrap();
        let fa = IndexedFasta::open(f.path()).unwrap();
        (f, fa)
    }

    #[test]
    fn fetch_across_line_break() {
        let (_f, fa) = fasta_file(">s\nACGT\nACGT\n");
        let e = fa.index().get("s").unwrap();
        assert_eq!((e.length, e.offset, e.linebases, e.linewidth), (8, 3, 4, 5));
        assert_eq!(fa.fetch("s", 3, 6).unwrap(), "TAC");
        assert_eq!(fa.fetch("s", 0, 8).unwrap(), "ACGTACGT");
        assert!(matches!(fa.fetch("s", 0, 9), Err(Error::Range(_))));
        assert!(matches!(fa.fetch("q", 0, 1), Err(Error::Lookup(_))));
    }

    #[test]
    fn lowercase_uppercased_and_names_normalized() {
        let (_f, fa) = fasta_file(">chr1 description\nacgtn\nAC\n>chr2\nGG\n");
        assert_eq!(fa.fetch("1", 0, 7).unwrap(), "ACGTNAC");
        assert_eq!(fa.fetch("chr2", 1, 2).unwrap(), "G");
        assert_eq!(fa.length("2"), Some(2));
    }

    #[test]
    fn fai_text_round_trip() {
        let idx = FastaIndex::build(&b">a\nACGTA\nAC\n>b\nTTTT\n"[..]).unwrap();
        assert_eq!(idx.to_fai(), "a\t7\t3\t5\t6\n".to_string() + "b\t4\t15\t4\t5\n");
        assert_eq!(FastaIndex::parse(&idx.to_fai()).unwrap(), idx);
    }

    #[test]
    fn existing_fai_is_used() {
        let dir = tempfile::tempdir().unwrap();
        let fa = dir.path().join("g.fa");
        std::fs::write(&fa, ">x\nACGTACGT\n").unwrap();
        // a deliberately different line layout proves the .fai is read rather than rebuilt
        std::fs::write(dir.path().join("g.fa.fai"), "x\t4\t3\t4\t4\n").unwrap();
        let g = IndexedFasta::open(&fa).unwrap();
        assert_eq!(g.length("x"), Some(4));
    }

    #[test]
    fn uneven_lines_rejected() {
        assert!(FastaIndex::build(&b">a\nAC\nACGT\n"[..]).is_err());
        assert!(FastaIndex::build(&b">a\nACGT\nAC\nAC\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn fetch_concatenates(seq in "[ACGT]{1,200}", width in 1usize..70, cuts in proptest::collection::vec(0usize..200, 3)) {
            let mut text = String::from(">s\n");
            for chunk in seq.as_bytes().chunks(width) {
                text.push_str(std::str::from_utf8(chunk).unwrap());
                text.push('\n');
            }
            let (_f, fa) = fasta_file(&text);
            let mut c: Vec<u64> = cuts.iter().map(|&x| (x % (seq.len() + 1)) as u64).collect();
            c.sort();
            let (a, b, d) = (c[0], c[1], c[2]);
            let joined = fa.fetch("s", a, b).unwrap() + &fa.fetch("s", b, d).unwrap();
            prop_assert_eq!(&joined, &fa.fetch("s", a, d).unwrap());
            prop_assert_eq!(joined.as_str(), &seq[a as usize..d as usize]);
        }
    }
}
