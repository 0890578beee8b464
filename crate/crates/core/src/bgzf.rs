//! Blocked gzip (BGZF) reading and writing.
//!
//! A BGZF file is a series of gzip members, each at most 64 KiB on disk, whose
//! header carries a `BC` extra subfield holding the member size. Because every
//! member decodes on its own, a position in the uncompressed stream can be
//! addressed by a [`VirtualOffset`]: the file offset of the member plus an
//! offset into its payload.

use std::fmt;
use std::io::{self, BufRead, Read, Seek, SeekFrom, Write};

use flate2::{Compress, Compression, Decompress, FlushCompress, FlushDecompress, Status};

use crate::error::{Error, Result};

/// Largest on-disk member, and largest payload a member may carry.
pub const MAX_BLOCK_SIZE: usize = 65536;

/// Uncompressed bytes collected before a block is emitted.
pub const BLOCK_PAYLOAD_SIZE: usize = 65280;

const HEADER_SIZE: usize = 18;
const FOOTER_SIZE: usize = 8;
const GZIP_ID1: u8 = 0x1f;
const GZIP_ID2: u8 = 0x8b;
const CM_DEFLATE: u8 = 8;
const FLG_FEXTRA: u8 = 4;

/// The end-of-file marker: an empty BGZF member.
pub const EOF_BLOCK: [u8; 28] = [
    0x1f, 0x8b, 0x08, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, 0xff, 0x06, 0x00, 0x42, 0x43, 0x02, 0x00,
    0x1b, 0x00, 0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
];

/// A 64-bit BGZF address: `coffset << 16 | uoffset`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualOffset(u64);

impl VirtualOffset {
    pub const MAX_COFFSET: u64 = (1 << 48) - 1;

    pub fn new(coffset: u64, uoffset: u32) -> Result<Self> {
        pack_voffset(coffset, uoffset).map(VirtualOffset)
    }

    pub const fn from_packed(packed: u64) -> Self {
        VirtualOffset(packed)
    }

    pub const fn packed(self) -> u64 {
        self.0
    }

    pub const fn coffset(self) -> u64 {
        self.0 >> 16
    }

    pub const fn uoffset(self) -> u32 {
        (self.0 & 0xffff) as u32
    }
}

impl fmt::Debug for VirtualOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VirtualOffset({}, {})", self.coffset(), self.uoffset())
    }
}

impl From<VirtualOffset> for u64 {
    fn from(v: VirtualOffset) -> u64 {
        v.0
    }
}

pub fn pack_voffset(coffset: u64, uoffset: u32) -> Result<u64> {
    if coffset > VirtualOffset::MAX_COFFSET {
        return Err(Error::Range(format!("compressed offset {coffset} does not fit in 48 bits")));
    }
    if uoffset > 0xffff {
        return Err(Error::Range(format!("block offset {uoffset} does not fit in 16 bits")));
    }
    Ok(coffset << 16 | uoffset as u64)
}

pub fn unpack_voffset(packed: u64) -> (u64, u32) {
    let v = VirtualOffset(packed);
    (v.coffset(), v.uoffset())
}

/// Deflate level used for new blocks (1-9).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionLevel(u32);

impl CompressionLevel {
    pub fn new(level: u32) -> Result<Self> {
        if (1..=9).contains(&level) {
            Ok(CompressionLevel(level))
        } else {
            Err(Error::CompressionLevel(level))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl Default for CompressionLevel {
    fn default() -> Self {
        CompressionLevel(6)
    }
}

/// Returns true when `bytes` starts like a BGZF member (gzip magic plus `BC` subfield).
pub fn is_bgzf(bytes: &[u8]) -> bool {
    parse_header(bytes).is_ok()
}

/// Parses a member header and returns the total member length (BSIZE + 1).
fn parse_header(bytes: &[u8]) -> Result<usize> {
    if bytes.len() < 12 {
        if bytes.len() >= 2 && (bytes[0] != GZIP_ID1 || bytes[1] != GZIP_ID2) {
            return Err(Error::NotBgzf("missing gzip magic".into()));
        }
        return Err(Error::Truncated("incomplete BGZF header".into()));
    }
    if bytes[0] != GZIP_ID1 || bytes[1] != GZIP_ID2 {
        return Err(Error::NotBgzf("missing gzip magic".into()));
    }
    if bytes[2] != CM_DEFLATE {
        return Err(Error::NotBgzf(format!("unsupported compression method {}", bytes[2])));
    }
    if bytes[3] & FLG_FEXTRA == 0 {
        return Err(Error::NotBgzf("gzip member has no extra field".into()));
    }
    let xlen = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
    if bytes.len() < 12 + xlen {
        return Err(Error::Truncated("incomplete BGZF extra field".into()));
    }
    let mut extra = &bytes[12..12 + xlen];
    while extra.len() >= 4 {
        let slen = u16::from_le_bytes([extra[2], extra[3]]) as usize;
        if extra[0] == b'B' && extra[1] == b'C' && slen == 2 && extra.len() >= 6 {
            let bsize = u16::from_le_bytes([extra[4], extra[5]]) as usize;
            if bsize + 1 < 12 + xlen + FOOTER_SIZE {
                return Err(Error::Corrupt(format!("block size {} too small", bsize + 1)));
            }
            return Ok(bsize + 1);
        }
        if extra.len() < 4 + slen {
            break;
        }
        extra = &extra[4 + slen..];
    }
    Err(Error::NotBgzf("gzip member lacks the BC subfield".into()))
}

fn deflate_raw(compressor: &mut Compress, payload: &[u8], out: &mut Vec<u8>) -> Result<()> {
    compressor.reset();
    out.clear();
    out.reserve(payload.len() + payload.len() / 1000 + 64);
    loop {
        let before_in = compressor.total_in() as usize;
        let status = compressor
            .compress_vec(&payload[before_in..], out, FlushCompress::Finish)
            .map_err(|e| Error::Io(io::Error::other(e)))?;
        match status {
            Status::StreamEnd => return Ok(()),
            _ => out.reserve(out.capacity().max(1024)),
        }
    }
}

fn assemble_block(cdata: &[u8], payload: &[u8], out: &mut Vec<u8>) {
    let block_len = HEADER_SIZE + cdata.len() + FOOTER_SIZE;
    let bsize = (block_len - 1) as u16;
    out.clear();
    out.extend_from_slice(&[GZIP_ID1, GZIP_ID2, CM_DEFLATE, FLG_FEXTRA, 0, 0, 0, 0, 0, 0xff]);
    out.extend_from_slice(&6u16.to_le_bytes());
    out.extend_from_slice(b"BC");
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&bsize.to_le_bytes());
    out.extend_from_slice(cdata);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
}

/// Reusable block compressor.
pub struct BlockCompressor {
    level: CompressionLevel,
    deflate: Compress,
    stored: Option<Compress>,
    cdata: Vec<u8>,
}

impl BlockCompressor {
    pub fn new(level: CompressionLevel) -> Self {
        BlockCompressor {
            level,
            deflate: Compress::new(Compression::new(level.get()), false),
            stored: None,
            cdata: Vec::new(),
        }
    }

    pub fn level(&self) -> CompressionLevel {
        self.level
    }

    /// Compresses `payload` into one complete BGZF member written to `out`.
    pub fn compress(&mut self, payload: &[u8], out: &mut Vec<u8>) -> Result<()> {
        if payload.len() > MAX_BLOCK_SIZE {
            return Err(Error::BlockTooLarge(payload.len()));
        }
        if payload.is_empty() {
            out.clear();
            out.extend_from_slice(&EOF_BLOCK);
            return Ok(());
        }
        deflate_raw(&mut self.deflate, payload, &mut self.cdata)?;
        if HEADER_SIZE + self.cdata.len() + FOOTER_SIZE > MAX_BLOCK_SIZE {
            // incompressible data: fall back to stored deflate blocks
            let stored = self.stored.get_or_insert_with(|| Compress::new(Compression::none(), false));
            deflate_raw(stored, payload, &mut self.cdata)?;
            if HEADER_SIZE + self.cdata.len() + FOOTER_SIZE > MAX_BLOCK_SIZE {
                return Err(Error::BlockTooLarge(payload.len()));
            }
        }
        assemble_block(&self.cdata, payload, out);
        Ok(())
    }
}

/// Compresses a payload of at most 64 KiB into a single BGZF member.
pub fn compress_block(payload: &[u8], level: CompressionLevel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    BlockCompressor::new(level).compress(payload, &mut out)?;
    Ok(out)
}

/// Reusable block decompressor.
pub struct BlockDecompressor {
    inflate: Decompress,
}

impl Default for BlockDecompressor {
    fn default() -> Self {
        BlockDecompressor { inflate: Decompress::new(false) }
    }
}

impl BlockDecompressor {
    /// Decodes the member at the start of `bytes` into `payload`, returning the
    /// number of bytes the member occupies.
    pub fn decompress(&mut self, bytes: &[u8], payload: &mut Vec<u8>) -> Result<usize> {
        let block_len = parse_header(bytes)?;
        if bytes.len() < block_len {
            return Err(Error::Truncated(format!(
                "block needs {block_len} bytes, {} available",
                bytes.len()
            )));
        }
        let xlen = u16::from_le_bytes([bytes[10], bytes[11]]) as usize;
        let cdata = &bytes[12 + xlen..block_len - FOOTER_SIZE];
        let footer = &bytes[block_len - FOOTER_SIZE..block_len];
        let expected_crc = u32::from_le_bytes(footer[0..4].try_into().unwrap());
        let isize = u32::from_le_bytes(footer[4..8].try_into().unwrap()) as usize;
        if isize > MAX_BLOCK_SIZE {
            return Err(Error::Corrupt(format!("declared payload size {isize} exceeds 64 KiB")));
        }

        payload.clear();
        payload.reserve(isize.max(1));
        self.inflate.reset(false);
        let status = self
            .inflate
            .decompress_vec(cdata, payload, FlushDecompress::Finish)
            .map_err(|e| Error::Corrupt(format!("deflate stream: {e}")))?;
        if status != Status::StreamEnd || payload.len() != isize {
            return Err(Error::Corrupt(format!(
                "payload size mismatch: declared {isize}, decoded {}",
                payload.len()
            )));
        }
        let crc = crc32fast::hash(payload);
        if crc != expected_crc {
            return Err(Error::Corrupt(format!(
                "CRC32 mismatch: found {crc:#010x}, expected {expected_crc:#010x}"
            )));
        }
        Ok(block_len)
    }
}

/// Decodes the BGZF member at the start of `bytes`; returns `(payload, consumed)`.
pub fn decompress_block(bytes: &[u8]) -> Result<(Vec<u8>, usize)> {
    let mut payload = Vec::new();
    let consumed = BlockDecompressor::default().decompress(bytes, &mut payload)?;
    Ok((payload, consumed))
}

/// Streams bytes into BGZF blocks of at most [`BLOCK_PAYLOAD_SIZE`] bytes.
///
/// [`finish`](BgzfWriter::finish) must be called to flush the last block and
/// append the EOF marker.
pub struct BgzfWriter<W: Write> {
    inner: W,
    buf: Vec<u8>,
    block: Vec<u8>,
    compressor: BlockCompressor,
    coffset: u64,
}

impl<W: Write> BgzfWriter<W> {
    pub fn new(inner: W) -> Self {
        Self::with_level(inner, CompressionLevel::default())
    }

    pub fn with_level(inner: W, level: CompressionLevel) -> Self {
        BgzfWriter {
            inner,
            buf: Vec::with_capacity(BLOCK_PAYLOAD_SIZE),
            block: Vec::with_capacity(MAX_BLOCK_SIZE),
            compressor: BlockCompressor::new(level),
            coffset: 0,
        }
    }

    /// Address at which the next appended byte will land.
    pub fn current_voffset(&self) -> VirtualOffset {
        VirtualOffset((self.coffset << 16) | self.buf.len() as u64)
    }

    /// Compressed bytes emitted so far.
    pub fn compressed_len(&self) -> u64 {
        self.coffset
    }

    pub fn append(&mut self, mut bytes: &[u8]) -> Result<()> {
        while !bytes.is_empty() {
            let room = BLOCK_PAYLOAD_SIZE - self.buf.len();
            let n = room.min(bytes.len());
            self.buf.extend_from_slice(&bytes[..n]);
            bytes = &bytes[n..];
            if self.buf.len() == BLOCK_PAYLOAD_SIZE {
                self.flush_block()?;
            }
        }
        Ok(())
    }

    /// Emits the pending payload as a block, even if it is short.
    pub fn flush_block(&mut self) -> Result<()> {
        if self.buf.is_empty() {
            return Ok(());
        }
        self.compressor.compress(&self.buf, &mut self.block)?;
        self.inner.write_all(&self.block)?;
        self.coffset += self.block.len() as u64;
        self.buf.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.flush_block()?;
        self.inner.write_all(&EOF_BLOCK)?;
        self.inner.flush()?;
        Ok(self.inner)
    }

    pub fn get_ref(&self) -> &W {
        &self.inner
    }
}

impl<W: Write> Write for BgzfWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.append(buf).map_err(into_io)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn into_io(e: Error) -> io::Error {
    match e {
        Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

/// Sequential and seekable BGZF reader.
pub struct BgzfReader<R> {
    inner: R,
    payload: Vec<u8>,
    raw: Vec<u8>,
    decompressor: BlockDecompressor,
    block_coffset: u64,
    next_coffset: u64,
    pos: usize,
    loaded: bool,
    compressed_read: u64,
    line_buf: Vec<u8>,
}

impl<R: Read> BgzfReader<R> {
    pub fn new(inner: R) -> Self {
        BgzfReader {
            inner,
            payload: Vec::with_capacity(MAX_BLOCK_SIZE),
            raw: Vec::with_capacity(MAX_BLOCK_SIZE),
            decompressor: BlockDecompressor::default(),
            block_coffset: 0,
            next_coffset: 0,
            pos: 0,
            loaded: false,
            compressed_read: 0,
            line_buf: Vec::new(),
        }
    }

    /// Position of the next byte to be read.
    pub fn tell(&self) -> VirtualOffset {
        if self.pos < self.payload.len() {
            VirtualOffset((self.block_coffset << 16) | self.pos as u64)
        } else {
            VirtualOffset(self.next_coffset << 16)
        }
    }

    /// Total compressed bytes pulled from the source, including re-reads after seeks.
    pub fn compressed_bytes_read(&self) -> u64 {
        self.compressed_read
    }

    pub fn into_inner(self) -> R {
        self.inner
    }

    /// Reads the member starting at `next_coffset`. Returns false at a clean end of input.
    fn load_block(&mut self) -> Result<bool> {
        self.raw.resize(HEADER_SIZE, 0);
        let got = read_full(&mut self.inner, &mut self.raw[..])?;
        if got == 0 {
            self.payload.clear();
            self.pos = 0;
            self.block_coffset = self.next_coffset;
            self.loaded = true;
            return Ok(false);
        }
        if got < HEADER_SIZE {
            // let the header parser decide between "not BGZF" and "truncated"
            parse_header(&self.raw[..got])?;
            return Err(Error::Truncated("incomplete BGZF header".into()));
        }
        let block_len = parse_header(&self.raw)?;
        self.raw.resize(block_len, 0);
        let got = read_full(&mut self.inner, &mut self.raw[HEADER_SIZE..])?;
        if got < block_len - HEADER_SIZE {
            return Err(Error::Truncated(format!(
                "block at offset {} ends early",
                self.next_coffset
            )));
        }
        self.decompressor.decompress(&self.raw, &mut self.payload)?;
        self.compressed_read += block_len as u64;
        self.block_coffset = self.next_coffset;
        self.next_coffset += block_len as u64;
        self.pos = 0;
        self.loaded = true;
        Ok(true)
    }

    /// Makes sure unread payload is available; false at end of input.
    fn fill(&mut self) -> Result<bool> {
        while self.pos >= self.payload.len() {
            if !self.load_block()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reads raw bytes up to (not including) the next newline.
    /// Returns false if the input was exhausted before any byte was read.
    pub fn read_line_bytes(&mut self, line: &mut Vec<u8>) -> Result<bool> {
        line.clear();
        let mut any = false;
        loop {
            if !self.fill()? {
                return Ok(any);
            }
            any = true;
            let avail = &self.payload[self.pos..];
            match avail.iter().position(|&b| b == b'\n') {
                Some(i) => {
                    line.extend_from_slice(&avail[..i]);
                    self.pos += i + 1;
                    return Ok(true);
                }
                None => {
                    line.extend_from_slice(avail);
                    self.pos = self.payload.len();
                }
            }
        }
    }

    /// Reads one line without its trailing newline. Returns false at end of input.
    pub fn read_line(&mut self, line: &mut String) -> Result<bool> {
        let mut buf = std::mem::take(&mut self.line_buf);
        let more = self.read_line_bytes(&mut buf);
        line.clear();
        let result = match more {
            Ok(true) => match std::str::from_utf8(&buf) {
                Ok(s) => {
                    line.push_str(s);
                    Ok(true)
                }
                Err(_) => Err(Error::Format("line is not valid UTF-8".into())),
            },
            other => other,
        };
        self.line_buf = buf;
        result
    }
}

impl<R: Read + Seek> BgzfReader<R> {
    /// Positions the reader so the next read starts at `voffset`.
    pub fn seek(&mut self, voffset: VirtualOffset) -> Result<()> {
        let (coffset, uoffset) = (voffset.coffset(), voffset.uoffset() as usize);
        if !(self.loaded && coffset == self.block_coffset && !self.payload.is_empty()) {
            self.inner.seek(SeekFrom::Start(coffset))?;
            self.next_coffset = coffset;
            if !self.load_block()? {
                let len = self.inner.seek(SeekFrom::End(0))?;
                if coffset > len || uoffset != 0 {
                    return Err(Error::Range(format!("{voffset:?} lies past the end of the file")));
                }
                return Ok(());
            }
        }
        if uoffset > self.payload.len() {
            return Err(Error::Range(format!(
                "{voffset:?} lies past the end of a {}-byte block",
                self.payload.len()
            )));
        }
        self.pos = uoffset;
        Ok(())
    }
}

impl<R: Read> Read for BgzfReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let avail = self.fill_buf()?;
        let n = avail.len().min(buf.len());
        buf[..n].copy_from_slice(&avail[..n]);
        self.consume(n);
        Ok(n)
    }
}

impl<R: Read> BufRead for BgzfReader<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        if !self.fill().map_err(into_io)? {
            return Ok(&[]);
        }
        Ok(&self.payload[self.pos..])
    }

    fn consume(&mut self, amt: usize) {
        self.pos = (self.pos + amt).min(self.payload.len());
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}
