use crate::error::{Error, Result};

/// Codon table indexed by `16*b0 + 4*b1 + b2` with bases ordered A, C, G, T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneticCode {
    table: [u8; 64],
}

const UNIVERSAL: &[u8; 64] = b"KNKNTTTTRSRSIIMIQHQHPPPPRRRRLLLLEDEDAAAAGGGGVVVV*Y*YSSSS*CWCLFLF";

impl GeneticCode {
    pub fn universal() -> Self {
        GeneticCode { table: *UNIVERSAL }
    }

    /// Builds a code from 64 amino-acid letters in A, C, G, T codon order.
    pub fn from_table(letters: &str) -> Result<Self> {
        let table: [u8; 64] = letters
            .as_bytes()
            .try_into()
            .map_err(|_| Error::Config(format!("genetic code needs 64 letters, got {}", letters.len())))?;
        Ok(GeneticCode { table })
    }

    /// Amino-acid letter (`*` for stop), or None for anything but three of A/C/G/T.
    pub fn translate(&self, codon: &[u8]) -> Option<u8> {
        if codon.len() != 3 {
            return None;
        }
        let mut idx = 0;
        for &b in codon {
            idx = idx * 4 + base_index(b)?;
        }
        Some(self.table[idx])
    }
}

impl Default for GeneticCode {
    fn default() -> Self {
        Self::universal()
    }
}

fn base_index(b: u8) -> Option<usize> {
    match b.to_ascii_uppercase() {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

pub fn complement(b: u8) -> Option<u8> {
    Some(match b {
        b'A' => b'T',
        b'T' => b'A',
        b'C' => b'G',
        b'G' => b'C',
        b'N' => b'N',
        b'a' => b't',
        b't' => b'a',
        b'c' => b'g',
        b'g' => b'c',
        b'n' => b'n',
        _ => return None,
    })
}

pub fn reverse_complement(bases: &str) -> Result<String> {
    bases
        .bytes()
        .rev()
        .map(|b| complement(b).map(char::from).ok_or_else(|| Error::parse(format!("cannot complement '{}'", b as char))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Standard table as usually printed, codons enumerated in T, C, A, G order.
    const TCAG: &str = "FFLLSSSSYY**CC*WLLLLPPPPHHQQRRRRIIIMTTTTNNKKSSRRVVVVAAAADDEEGGGG";

    #[test]
    fn matches_tcag_listing() {
        let code = GeneticCode::universal();
        let order = b"TCAG";
        for (i, aa) in TCAG.bytes().enumerate() {
            let codon = [order[i / 16], order[i / 4 % 4], order[i % 4]];
            assert_eq!(code.translate(&codon), Some(aa), "{}", String::from_utf8_lossy(&codon));
        }
    }

    #[test]
    fn stops_and_start() {
        let code = GeneticCode::universal();
        let mut stops = Vec::new();
        for a in b"ACGT" {
            for b in b"ACGT" {
                for c in b"ACGT" {
                    let codon = [*a, *b, *c];
                    if code.translate(&codon) == Some(b'*') {
                        stops.push(String::from_utf8(codon.to_vec()).unwrap());
                    }
                }
            }
        }
        assert_eq!(stops, ["TAA", "TAG", "TGA"]);
        assert_eq!(code.translate(b"ATG"), Some(b'M'));
        assert_eq!(code.translate(b"GCN"), None);
        assert_eq!(code.translate(b"GC"), None);
    }

    #[test]
    fn revcomp_examples() {
        assert_eq!(reverse_complement("ATGC").unwrap(), "GCAT");
        assert_eq!(reverse_complement("").unwrap(), "");
        assert_eq!(reverse_complement("NNA").unwrap(), "TNN");
        assert!(reverse_complement("ATX").is_err());
    }

    proptest! {
        #[test]
        fn revcomp_involution(s in "[ACGTN]{0,64}") {
            prop_assert_eq!(reverse_complement(&reverse_complement(&s).unwrap()).unwrap(), s);
        }
    }
}
