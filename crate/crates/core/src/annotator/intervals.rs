use std::collections::HashMap;
use std::io::BufRead;

use crate::error::Result;
use crate::records::{normalize_chrom, parse_bed_line, read_line_into};

/// Half-open intervals per chromosome, sorted by start, with a running maximum of ends
/// so overlap queries can stop scanning left as soon as nothing earlier can reach the point.
#[derive(Debug, Clone)]
pub struct OrderedIntervals<T> {
    tracks: HashMap<String, Track<T>>,
}

#[derive(Debug, Clone)]
struct Track<T> {
    begs: Vec<u64>,
    ends: Vec<u64>,
    reach: Vec<u64>,
    items: Vec<T>,
}

impl<T> Default for OrderedIntervals<T> {
    fn default() -> Self {
        OrderedIntervals { tracks: HashMap::new() }
    }
}

impl<T> OrderedIntervals<T> {
    /// `entries` may arrive in any order; chromosome names are normalized.
    pub fn build(entries: impl IntoIterator<Item = (String, u64, u64, T)>) -> Self {
        let mut grouped: HashMap<String, Vec<(u64, u64, T)>> = HashMap::new();
        for (chrom, beg, end, item) in entries {
            grouped.entry(normalize_chrom(&chrom)).or_default().push((beg, end, item));
        }
        let tracks = grouped
            .into_iter()
            .map(|(chrom, mut v)| {
                v.sort_by_key(|e| e.0);
                let mut t = Track { begs: Vec::new(), ends: Vec::new(), reach: Vec::new(), items: Vec::new() };
                let mut reach = 0;
                for (b, e, item) in v {
                    reach = reach.max(e);
                    t.begs.push(b);
                    t.ends.push(e);
                    t.reach.push(reach);
                    t.items.push(item);
                }
                (chrom, t)
            })
            .collect();
        OrderedIntervals { tracks }
    }

    pub fn len(&self) -> usize {
        self.tracks.values().map(|t| t.items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Items whose interval overlaps `[beg, end)`, in start order.
    pub fn overlapping(&self, chrom: &str, beg: u64, end: u64) -> Vec<&T> {
        let mut out = Vec::new();
        self.for_each_overlap(chrom, beg, end, |t| out.push(t));
        out
    }

    /// Items whose interval contains `pos`, in start order.
    pub fn at(&self, chrom: &str, pos: u64) -> Vec<&T> {
        self.overlapping(chrom, pos, pos + 1)
    }

    /// Visits overlapping items in start order; `chrom` must already be normalized
    /// or will be normalized here.
    pub fn for_each_overlap<'a>(&'a self, chrom: &str, beg: u64, end: u64, mut visit: impl FnMut(&'a T)) {
        let track = match self.tracks.get(chrom) {
            Some(t) => t,
            None => match self.tracks.get(&normalize_chrom(chrom)) {
                Some(t) => t,
                None => return,
            },
        };
        let hi = track.begs.partition_point(|&b| b < end);
        let mut lo = hi;
        while lo > 0 && track.reach[lo - 1] > beg {
            lo -= 1;
        }
        for i in lo..hi {
            if track.ends[i] > beg {
                visit(&track.items[i]);
            }
        }
    }
}

/// Named regions, as loaded from a BED file.
pub type IntervalSet = OrderedIntervals<String>;

/// Reads BED lines (skipping `#`, `track` and `browser` lines). Unnamed intervals are
/// named `chrom:beg-end` in 1-based inclusive form.
pub fn build_interval_db(mut reader: impl BufRead) -> Result<IntervalSet> {
    let mut entries = Vec::new();
    let mut line = String::new();
    let mut n = 0u64;
    while read_line_into(&mut reader, &mut line)? {
        n += 1;
        let l = line.trim_end_matches('\r');
        if l.is_empty() || l.starts_with('#') || l.starts_with("track") || l.starts_with("browser") {
            continue;
        }
        let r = parse_bed_line(l).map_err(|e| e.at_line(n))?;
        let name = r.name.unwrap_or_else(|| format!("{}:{}-{}", r.chrom, r.beg + 1, r.end));
        entries.push((r.chrom, r.beg, r.end, name));
    }
    Ok(OrderedIntervals::build(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn point_lookups() {
        let db = build_interval_db(&b"1\t150\t250\tB\n1\t100\t200\tA\n"[..]).unwrap();
        assert_eq!(db.at("1", 175), ["A", "B"]);
        assert_eq!(db.at("chr1", 200), ["B"]);
        assert!(db.at("1", 99).is_empty());
        assert!(db.at("2", 150).is_empty());
    }

    #[test]
    fn sorted_on_build() {
        let db = build_interval_db(&b"1\t300\t310\tC\n1\t100\t110\tA\n1\t200\t210\tB\n"[..]).unwrap();
        assert_eq!(db.overlapping("1", 0, 1000), ["A", "B", "C"]);
    }

    #[test]
    fn empty_db() {
        let db = build_interval_db(&b""[..]).unwrap();
        assert!(db.is_empty());
        assert!(db.at("1", 5).is_empty());
    }

    #[test]
    fn bad_line_reports_line_number() {
        let err = build_interval_db(&b"1\t1\t2\n1\tx\t5\n"[..]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let raw: Vec<(String, u64, u64, usize)> = (0..10_000)
            .map(|i| {
                let b = rng.gen_range(0..1_000_000u64);
                let len = if rng.gen_bool(0.05) { rng.gen_range(1..50_000) } else { rng.gen_range(1..2_000) };
                (["1", "2"][rng.gen_range(0..2)].to_string(), b, b + len, i)
            })
            .collect();
        let db = OrderedIntervals::build(raw.clone());
        for _ in 0..1000 {
            let chrom = ["1", "2"][rng.gen_range(0..2)];
            let p = rng.gen_range(0..1_100_000u64);
            let mut got: Vec<usize> = db.at(chrom, p).into_iter().copied().collect();
            let mut want: Vec<usize> =
                raw.iter().filter(|r| r.0 == chrom && r.1 <= p && p < r.2).map(|r| r.3).collect();
            got.sort_unstable();
            want.sort_unstable();
            assert_eq!(got, want, "{chrom}:{p}");
        }
    }
}
