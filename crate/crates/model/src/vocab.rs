//! Hashed whitespace vocabulary.

pub const UNKNOWN_ID: u32 = 0;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Id of `word` in a vocabulary of `vocab_size` slots. Id 0 is reserved for
/// unknown input (empty strings); every other word hashes into `1..vocab_size`.
pub fn word_id(word: &str, vocab_size: usize) -> u32 {
    if word.is_empty() {
        return UNKNOWN_ID;
    }
    1 + (fnv1a(word.as_bytes()) % (vocab_size as u64 - 1)) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_stable_and_in_range() {
        assert_eq!(word_id("the", 4096), word_id("the", 4096));
        assert_eq!(word_id("", 4096), UNKNOWN_ID);
        for w in ["a", "the", "invoice", "ünïcode"] {
            let id = word_id(w, 17);
            assert!((1..17).contains(&id));
        }
        assert_ne!(word_id("the", 4096), word_id("of", 4096));
    }
}
