//! Tabix-compatible binning and linear index over coordinate-sorted BGZF tab files.
//!
//! Coordinates inside this module are always 0-based half-open; conversion from
//! the file's convention happens in [`TabSchema::record_span`].

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Read, Seek};
use std::path::{Path, PathBuf};

use crate::bgzf::{BgzfReader, BgzfWriter, VirtualOffset};
use crate::error::{Error, Result};

/// Size of the address space covered by the binning scheme.
pub const MAX_COORD: u64 = 1 << 29;
/// Largest real bin number (1 + 8 + 64 + 512 + 4096 + 32768 bins).
pub const MAX_BIN: u32 = 37448;
/// Window width of the linear index.
pub const LINEAR_SHIFT: u32 = 14;

const MAGIC: &[u8; 4] = b"TBI\x01";
const FLAG_ZERO_BASED: i32 = 0x10000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Generic,
    Sam,
    Vcf,
}

/// How to locate the sequence name and coordinates of a record within a tab-delimited line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabSchema {
    pub preset: Preset,
    /// 1-based column of the sequence name.
    pub seq_col: usize,
    /// 1-based column of the begin coordinate.
    pub beg_col: usize,
    /// 1-based column of the end coordinate; 0 when records are points.
    pub end_col: usize,
    /// Coordinates in the file are 0-based half-open (BED style) rather than 1-based inclusive.
    pub zero_based: bool,
    pub meta_char: u8,
    pub skip_lines: u32,
}

impl TabSchema {
    pub fn vcf() -> Self {
        TabSchema {
            preset: Preset::Vcf,
            seq_col: 1,
            beg_col: 2,
            end_col: 0,
            zero_based: false,
            meta_char: b'#',
            skip_lines: 0,
        }
    }

    pub fn bed() -> Self {
        TabSchema {
            preset: Preset::Generic,
            seq_col: 1,
            beg_col: 2,
            end_col: 3,
            zero_based: true,
            meta_char: b'#',
            skip_lines: 0,
        }
    }

    pub fn generic(seq_col: usize, beg_col: usize, end_col: usize, zero_based: bool) -> Result<Self> {
        let schema = TabSchema {
            preset: Preset::Generic,
            seq_col,
            beg_col,
            end_col,
            zero_based,
            meta_char: b'#',
            skip_lines: 0,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Parses `seq,beg,end,base` where base is 0 or 1 (end may be 0 for point records).
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Usage(format!("schema '{spec}' must look like seq,beg,end,base")));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Usage(format!("schema field '{s}' is not a number")))
        };
        let zero_based = match parts[3] {
            "0" => true,
            "1" => false,
            other => return Err(Error::Usage(format!("schema base must be 0 or 1, got '{other}'"))),
        };
        Self::generic(num(parts[0])?, num(parts[1])?, num(parts[2])?, zero_based)
            .map_err(|e| Error::Usage(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_col == 0 || self.beg_col == 0 {
            return Err(Error::Schema("sequence and begin columns are 1-based and must be >= 1".into()));
        }
        Ok(())
    }

    pub fn min_columns(&self) -> usize {
        let base = self.seq_col.max(self.beg_col).max(self.end_col);
        if self.preset == Preset::Vcf {
            base.max(4)
        } else {
            base
        }
    }

    pub fn format_flags(&self) -> i32 {
        let preset = match self.preset {
            Preset::Generic => 0,
            Preset::Sam => 1,
            Preset::Vcf => 2,
        };
        preset | if self.zero_based { FLAG_ZERO_BASED } else { 0 }
    }

    pub fn is_meta(&self, line: &str) -> bool {
        line.as_bytes().first() == Some(&self.meta_char)
    }

    /// Extracts `(sequence name, beg, end)` from a data line, converted to 0-based half-open.
    pub fn record_span<'a>(&self, line: &'a str) -> Result<(&'a str, u64, u64)> {
        let need = self.min_columns();
        let mut cols: [&str; 4] = [""; 4];
        let wanted = [self.seq_col, self.beg_col, self.end_col, if self.preset == Preset::Vcf { 4 } else { 0 }];
        let mut seen = 0;
        for (i, field) in line.split('\t').enumerate().take(need) {
            seen = i + 1;
            for (slot, &w) in wanted.iter().enumerate() {
                if w == i + 1 {
                    cols[slot] = field;
                }
            }
        }
        if seen < need {
            return Err(Error::Schema(format!("record has {seen} columns, schema needs {need}")));
        }
        let coord = |s: &str| -> Result<u64> {
            s.trim().parse::<u64>().map_err(|_| Error::parse(format!("coordinate '{s}' is not an integer")))
        };
        let raw_beg = coord(cols[1])?;
        let beg = if self.zero_based {
            raw_beg
        } else {
            raw_beg.checked_sub(1).ok_or_else(|| Error::parse("1-based coordinate 0"))?
        };
        let mut end = if self.end_col == 0 {
            if self.preset == Preset::Vcf {
                beg + cols[3].len().max(1) as u64
            } else {
                beg + 1
            }
        } else {
            // inclusive 1-based and exclusive 0-based ends share the same numeric value
            coord(cols[2])?
        };
        if end <= beg {
            end = beg + 1;
        }
        Ok((cols[0], beg, end))
    }
}

/// Smallest bin that fully contains `[beg, end)`.
pub fn reg2bin(beg: u64, end: u64) -> Result<u32> {
    check_region(beg, end)?;
    Ok(reg2bin_unchecked(beg, end))
}

fn reg2bin_unchecked(beg: u64, end: u64) -> u32 {
    let end = end - 1;
    if beg >> 14 == end >> 14 {
        return (4681 + (beg >> 14)) as u32;
    }
    if beg >> 17 == end >> 17 {
        return (585 + (beg >> 17)) as u32;
    }
    if beg >> 20 == end >> 20 {
        return (73 + (beg >> 20)) as u32;
    }
    if beg >> 23 == end >> 23 {
        return (9 + (beg >> 23)) as u32;
    }
    if beg >> 26 == end >> 26 {
        return (1 + (beg >> 26)) as u32;
    }
    0
}

/// Every bin whose span intersects `[beg, end)`, in ascending order.
pub fn reg2bins(beg: u64, end: u64) -> Result<Vec<u32>> {
    check_region(beg, end)?;
    Ok(reg2bins_unchecked(beg, end))
}

fn reg2bins_unchecked(beg: u64, end: u64) -> Vec<u32> {
    let end = end - 1;
    let mut bins = vec![0];
    for (offset, shift) in [(1u64, 26u32), (9, 23), (73, 20), (585, 17), (4681, 14)] {
        bins.extend((offset + (beg >> shift)..=offset + (end >> shift)).map(|b| b as u32));
    }
    bins
}

fn check_region(beg: u64, end: u64) -> Result<()> {
    if beg >= end {
        return Err(Error::Range(format!("empty or reversed region [{beg}, {end})")));
    }
    if end > MAX_COORD {
        return Err(Error::Range(format!("region end {end} exceeds the 2^29 index address space")));
    }
    Ok(())
}

/// Genomic span `[beg, end)` covered by a bin.
pub fn bin_span(bin: u32) -> (u64, u64) {
    let (offset, shift) = match bin {
        0 => (0, 29),
        1..=8 => (1, 26),
        9..=72 => (9, 23),
        73..=584 => (73, 20),
        585..=4680 => (585, 17),
        _ => (4681, 14),
    };
    let i = (bin - offset) as u64;
    (i << shift, (i + 1) << shift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chunk {
    pub begin: VirtualOffset,
    pub end: VirtualOffset,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefIndex {
    pub bins: BTreeMap<u32, Vec<Chunk>>,
    pub linear: Vec<VirtualOffset>,
}

#[derive(Debug, Clone)]
pub struct TabixIndex {
    pub schema: TabSchema,
    names: Vec<String>,
    refs: Vec<RefIndex>,
    by_name: HashMap<String, usize>,
}

impl PartialEq for TabixIndex {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.names == other.names && self.refs == other.refs
    }
}

impl TabixIndex {
    pub fn new(schema: TabSchema, names: Vec<String>, refs: Vec<RefIndex>) -> Self {
        let by_name = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        TabixIndex { schema, names, refs, by_name }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn refs(&self) -> &[RefIndex] {
        &self.refs
    }

    pub fn ref_id(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Chunks that must be scanned to find every record overlapping `[beg, end)` on `name`.
    pub fn query_chunks(&self, name: &str, beg: u64, end: u64) -> Vec<Chunk> {
        let end = end.min(MAX_COORD);
        let Some(rid) = self.ref_id(name) else {
            return Vec::new();
        };
        if beg >= end {
            return Vec::new();
        }
        let r = &self.refs[rid];
        let min_off = if r.linear.is_empty() {
            VirtualOffset::default()
        } else {
            let w = ((beg >> LINEAR_SHIFT) as usize).min(r.linear.len() - 1);
            r.linear[w]
        };
        let mut chunks: Vec<Chunk> = reg2bins_unchecked(beg, end)
            .into_iter()
            .filter_map(|b| r.bins.get(&b))
            .flatten()
            .filter(|c| c.end > min_off)
            .map(|c| Chunk { begin: c.begin.max(min_off), end: c.end })
            .collect();
        chunks.sort_unstable();
        let mut merged: Vec<Chunk> = Vec::with_capacity(chunks.len());
        for c in chunks {
            match merged.last_mut() {
                Some(last) if c.begin <= last.end => last.end = last.end.max(c.end),
                _ => merged.push(c),
            }
        }
        merged
    }
}

#[derive(Default)]
struct RefBuilder {
    bins: BTreeMap<u32, Vec<Chunk>>,
    linear: Vec<Option<VirtualOffset>>,
}

/// Incremental index construction from records presented in file order.
pub struct IndexBuilder {
    schema: TabSchema,
    names: Vec<String>,
    by_name: HashMap<String, usize>,
    refs: Vec<RefBuilder>,
    last_beg: u64,
}

impl IndexBuilder {
    pub fn new(schema: TabSchema) -> Self {
        IndexBuilder { schema, names: Vec::new(), by_name: HashMap::new(), refs: Vec::new(), last_beg: 0 }
    }

    /// Registers a record occupying `[start, stop)` in the compressed stream.
    pub fn push(
        &mut self,
        line: u64,
        name: &str,
        beg: u64,
        end: u64,
        start: VirtualOffset,
        stop: VirtualOffset,
    ) -> Result<()> {
        if end > MAX_COORD {
            return Err(Error::Range(format!(
                "line {line}: record end {end} exceeds the 2^29 index address space"
            )));
        }
        let rid = match self.names.last() {
            Some(cur) if cur == name => {
                if beg < self.last_beg {
                    return Err(Error::SortOrder {
                        line,
                        msg: format!("position {} on {name} follows position {}", beg + 1, self.last_beg + 1),
                    });
                }
                self.names.len() - 1
            }
            _ => {
                if self.by_name.contains_key(name) {
                    return Err(Error::SortOrder {
                        line,
                        msg: format!("sequence {name} reappears after other sequences"),
                    });
                }
                self.by_name.insert(name.to_string(), self.names.len());
                self.names.push(name.to_string());
                self.refs.push(RefBuilder::default());
                self.names.len() - 1
            }
        };
        self.last_beg = beg;
        let r = &mut self.refs[rid];

        let chunks = r.bins.entry(reg2bin_unchecked(beg, end)).or_default();
        match chunks.last_mut() {
            Some(last) if last.end == start => last.end = stop,
            _ => chunks.push(Chunk { begin: start, end: stop }),
        }

        let (w0, w1) = ((beg >> LINEAR_SHIFT) as usize, ((end - 1) >> LINEAR_SHIFT) as usize);
        if r.linear.len() <= w1 {
            r.linear.resize(w1 + 1, None);
        }
        for slot in &mut r.linear[w0..=w1] {
            slot.get_or_insert(start);
        }
        Ok(())
    }

    /// Rewrites chunk ends equal to `from`; used when the block holding the last records is
    /// closed, so that `from` (end of that block) and `to` (start of the next) name the same place.
    pub fn remap_end(&mut self, from: VirtualOffset, to: VirtualOffset) {
        if let Some(r) = self.refs.last_mut() {
            for c in r.bins.values_mut().flatten().filter(|c| c.end == from) {
                c.end = to;
            }
        }
    }

    pub fn finish(self) -> TabixIndex {
        let refs = self
            .refs
            .into_iter()
            .map(|r| {
                // empty windows take the offset of the next populated one
                let mut linear = vec![VirtualOffset::default(); r.linear.len()];
                let mut next = VirtualOffset::default();
                for (i, v) in r.linear.iter().enumerate().rev() {
                    if let Some(v) = v {
                        next = *v;
                    }
                    linear[i] = next;
                }
                RefIndex { bins: r.bins, linear }
            })
            .collect();
        TabixIndex::new(self.schema, self.names, refs)
    }
}

/// Scans a BGZF tab file and builds its index.
pub fn build_index<R: std::io::Read>(reader: &mut BgzfReader<R>, schema: TabSchema) -> Result<TabixIndex> {
    schema.validate()?;
    let mut builder = IndexBuilder::new(schema.clone());
    let mut line = String::new();
    let mut line_no = 0u64;
    loop {
        let start = reader.tell();
        if !reader.read_line(&mut line)? {
            break;
        }
        line_no += 1;
        if line_no <= schema.skip_lines as u64 || line.is_empty() || schema.is_meta(&line) {
            continue;
        }
        let (name, beg, end) = schema.record_span(&line).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("line {line_no}: {m}")),
            other => other.at_line(line_no),
        })?;
        builder.push(line_no, name, beg, end, start, reader.tell())?;
    }
    Ok(builder.finish())
}

pub fn build_index_for_path(path: &Path, schema: TabSchema) -> Result<TabixIndex> {
    let mut reader = BgzfReader::new(BufReader::new(File::open(path)?));
    build_index(&mut reader, schema)
}

pub fn index_path_for(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".tbi");
    PathBuf::from(s)
}

/// Serializes the index in the `.tbi` layout (BGZF-compressed).
pub fn write_index(index: &TabixIndex) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    let put_i32 = |buf: &mut Vec<u8>, v: i32| buf.extend_from_slice(&v.to_le_bytes());
    raw.extend_from_slice(MAGIC);
    put_i32(&mut raw, index.names.len() as i32);
    let s = &index.schema;
    put_i32(&mut raw, s.format_flags());
    put_i32(&mut raw, s.seq_col as i32);
    put_i32(&mut raw, s.beg_col as i32);
    put_i32(&mut raw, s.end_col as i32);
    put_i32(&mut raw, s.meta_char as i32);
    put_i32(&mut raw, s.skip_lines as i32);
    let names_len: usize = index.names.iter().map(|n| n.len() + 1).sum();
    put_i32(&mut raw, names_len as i32);
    for n in &index.names {
        raw.extend_from_slice(n.as_bytes());
        raw.push(0);
    }
    for r in &index.refs {
        put_i32(&mut raw, r.bins.len() as i32);
        for (&bin, chunks) in &r.bins {
            raw.extend_from_slice(&bin.to_le_bytes());
            put_i32(&mut raw, chunks.len() as i32);
            for c in chunks {
                raw.extend_from_slice(&c.begin.packed().to_le_bytes());
                raw.extend_from_slice(&c.end.packed().to_le_bytes());
            }
        }
        put_i32(&mut raw, r.linear.len() as i32);
        for v in &r.linear {
            raw.extend_from_slice(&v.packed().to_le_bytes());
        }
    }
    let mut w = BgzfWriter::new(Vec::new());
    w.append(&raw)?;
    w.finish()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("index ends at byte {} of {}", self.buf.len(), self.pos + n)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let v = self.i32()?;
        usize::try_from(v).map_err(|_| Error::Format(format!("negative {what} count {v}")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses a BGZF-compressed `.tbi` file.
pub fn read_index(bytes: &[u8]) -> Result<TabixIndex> {
    let mut raw = Vec::new();
    BgzfReader::new(bytes).read_to_end(&mut raw).map_err(|e| match e.into_inner() {
        Some(inner) => match inner.downcast::<Error>() {
            Ok(err) => match *err {
                Error::NotBgzf(m) => Error::Format(format!("index is not BGZF-compressed ({m})")),
                other => other,
            },
            Err(other) => Error::Io(std::io::Error::other(other)),
        },
        None => Error::Format("unreadable index".into()),
    })?;
    let mut c = Cursor { buf: &raw, pos: 0 };
    if raw.len() < 4 || &raw[..4] != MAGIC {
        return Err(Error::Format("missing TBI magic".into()));
    }
    c.take(4)?;
    let n_ref = c.count("reference")?;
    let flags = c.i32()?;
    let preset = match flags & 0xffff {
        0 => Preset::Generic,
        1 => Preset::Sam,
        2 => Preset::Vcf,
        other => return Err(Error::Format(format!("unknown index preset {other}"))),
    };
    let col = |c: &mut Cursor| -> Result<usize> { c.count("column") };
    let (seq_col, beg_col, end_col) = (col(&mut c)?, col(&mut c)?, col(&mut c)?);
    let meta_char = c.i32()? as u8;
    let skip_lines = c.count("skip")? as u32;
    let schema = TabSchema {
        preset,
        seq_col,
        beg_col,
        end_col,
        zero_based: flags & FLAG_ZERO_BASED != 0,
        meta_char,
        skip_lines,
    };
    let l_nm = c.count("name byte")?;
    let names: Vec<String> = c
        .take(l_nm)?
        .split(|&b| b == 0)
        .filter(|n| !n.is_empty())
        .map(|n| String::from_utf8_lossy(n).into_owned())
        .collect();
    if names.len() != n_ref {
        return Err(Error::Format(format!("index declares {n_ref} sequences but names {}", names.len())));
    }
    let mut refs = Vec::with_capacity(n_ref);
    for _ in 0..n_ref {
        let mut r = RefIndex::default();
        let n_bin = c.count("bin")?;
        for _ in 0..n_bin {
            let bin = u32::from_le_bytes(c.take(4)?.try_into().unwrap());
            let n_chunk = c.count("chunk")?;
            let mut chunks = Vec::with_capacity(n_chunk.min(1 << 16));
            for _ in 0..n_chunk {
                let begin = VirtualOffset::from_packed(c.u64()?);
                let end = VirtualOffset::from_packed(c.u64()?);
                chunks.push(Chunk { begin, end });
            }
            // htslib stores per-reference statistics in a pseudo-bin beyond the real range
            if bin <= MAX_BIN {
                r.bins.insert(bin, chunks);
            }
        }
        let n_intv = c.count("interval")?;
        r.linear = (0..n_intv).map(|_| c.u64().map(VirtualOffset::from_packed)).collect::<Result<_>>()?;
        refs.push(r);
    }
    Ok(TabixIndex::new(schema, names, refs))
}

pub fn read_index_file(path: &Path) -> Result<TabixIndex> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Index(format!("cannot read index {}: {e}; run the index command first", path.display())))?;
    read_index(&bytes)
}

/// A record located by an index scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedRecord {
    pub line: String,
    pub beg: u64,
    pub end: u64,
    /// Address of the record's first byte; unique per record and ordered like the file.
    pub voffset: VirtualOffset,
}

/// Visits every record on `name` overlapping `[beg, end)`, in file order.
pub fn fetch_region<R: Read + Seek>(
    index: &TabixIndex,
    reader: &mut BgzfReader<R>,
    name: &str,
    beg: u64,
    end: u64,
    mut visit: impl FnMut(IndexedRecord) -> Result<()>,
) -> Result<()> {
    let schema = &index.schema;
    let mut line = String::new();
    for chunk in index.query_chunks(name, beg, end) {
        reader.seek(chunk.begin)?;
        loop {
            let at = reader.tell();
            if at >= chunk.end || !reader.read_line(&mut line)? {
                break;
            }
            if line.is_empty() || schema.is_meta(&line) {
                continue;
            }
            let (rname, rbeg, rend) = schema.record_span(&line)?;
            if rbeg >= end {
                break;
            }
            if rend > beg && rname == name {
                visit(IndexedRecord { line: line.clone(), beg: rbeg, end: rend, voffset: at })?;
            }
        }
    }
    Ok(())
}
