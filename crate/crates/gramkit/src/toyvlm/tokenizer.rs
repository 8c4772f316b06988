//! Byte-level tokenizer: ids 0..=255 map to raw bytes, losslessly.

use super::{Token, TokenKind, TokenSequence, BYTE_VOCAB};

pub fn tokenize(text: &str) -> TokenSequence {
    tokenize_bytes(text.as_bytes())
}

pub fn tokenize_bytes(bytes: &[u8]) -> TokenSequence {
    TokenSequence::new(bytes.iter().map(|&b| Token::text(b as u32)).collect())
}

/// Exact inverse of [`tokenize_bytes`] over the text tokens of a sequence.
/// Non-text tokens have no surface and are skipped.
pub fn detokenize_bytes(tokens: &[Token]) -> Vec<u8> {
    tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Text && t.id < BYTE_VOCAB)
        .map(|t| t.id as u8)
        .collect()
}

/// Lossy string view of the byte stream, for display.
pub fn detokenize(tokens: &[Token]) -> String {
    String::from_utf8_lossy(&detokenize_bytes(tokens)).into_owned()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn empty_input_gives_empty_sequence() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn ascii_maps_to_byte_ids() {
        let seq = tokenize("Hi");
        let ids: Vec<u32> = seq.tokens.iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![72, 105]);
    }

    #[test]
    fn detokenize_inverts_tokenize() {
        let s = "grounded reasoning, step by step.";
        assert_eq!(detokenize(&tokenize(s).tokens), s);
    }

    proptest! {
        #[test]
        fn random_bytes_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..1024)) {
            let seq = tokenize_bytes(&bytes);
            prop_assert_eq!(detokenize_bytes(&seq.tokens), bytes);
        }
    }
}
