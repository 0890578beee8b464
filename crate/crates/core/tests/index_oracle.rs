use std::io::Cursor;

use proptest::prelude::*;
use varseer::bgzf::{BgzfReader, BgzfWriter};
use varseer::tabindex::{build_index, fetch_region, read_index, write_index, TabSchema};

/// Sorted BED-like records: (chrom index, beg, len).
fn records() -> impl Strategy<Value = Vec<(usize, u64, u64)>> {
    prop::collection::vec((0usize..3, 0u64..2_000_000, prop_oneof![4 => 1u64..100, 1 => 100u64..200_000]), 1..600)
        .prop_map(|mut v| {
            v.sort();
            v
        })
}

fn build(recs: &[(usize, u64, u64)]) -> (Vec<u8>, Vec<String>) {
    let mut w = BgzfWriter::new(Vec::new());
    w.append(b"#chrom\tbeg\tend\n").unwrap();
    let mut lines = Vec::new();
    for (i, (c, b, l)) in recs.iter().enumerate() {
        let line = format!("c{c}\t{b}\t{}\tr{i}", b + l);
        w.append(line.as_bytes()).unwrap();
        w.append(b"\n").unwrap();
        lines.push(line);
    }
    (w.finish().unwrap(), lines)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn indexed_equals_linear_scan(
        recs in records(),
        qs in prop::collection::vec((0usize..4, 0u64..2_300_000, 1u64..300_000), 20),
    ) {
        let (bytes, lines) = build(&recs);
        let index = build_index(&mut BgzfReader::new(Cursor::new(&bytes)), TabSchema::bed()).unwrap();
        let index = read_index(&write_index(&index).unwrap()).unwrap();
        let mut reader = BgzfReader::new(Cursor::new(&bytes));
        for (c, beg, len) in qs {
            let end = beg + len;
            let name = format!("c{c}");
            let mut got = Vec::new();
            fetch_region(&index, &mut reader, &name, beg, end, |r| { got.push(r.line); Ok(()) }).unwrap();
            let want: Vec<&String> = recs
                .iter()
                .zip(&lines)
                .filter(|((rc, b, l), _)| *rc == c && *b < end && b + l > beg)
                .map(|(_, line)| line)
                .collect();
            prop_assert_eq!(got.iter().collect::<Vec<_>>(), want);
        }
    }
}
