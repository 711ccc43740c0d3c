//! Labeled log messages: tokenization, vocabulary, fixed-length encoding,
//! deduplication, splitting, file formats, and a synthetic corpus generator.

mod io;
mod split;
mod synth;
mod tokenize;
mod vocab;

pub use io::{
    parse_corpus, read_corpus, read_dataset, read_vocab, write_corpus, write_dataset, write_vocab,
    DATASET_MAGIC, DATASET_VERSION, DATASET_VERSION_WITH_ORIGIN,
};
pub use split::{split, split_counts, SplitParts, SplitSpec};
pub use synth::{synth_corpus, SynthConfig};
pub use tokenize::{tokenize, NUM_TOKEN};
pub use vocab::{build_vocab, Vocabulary, PAD_ID, UNK_ID};

use std::collections::HashSet;

/// Default encoded length, equal to the autoencoder's input width.
pub const SEQ_LEN: usize = 40;

pub type TokenId = u32;

/// Positive means normal (written as 1), negative means anomalous (0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative = 0,
    Positive = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Negative, Label::Positive];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Negative
        } else {
            Label::Positive
        }
    }
}

/// Whether a record came from the input corpus or from a trained generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Origin {
    #[default]
    Real = 0,
    Generated = 1,
}

impl Origin {
    pub fn from_u8(v: u8) -> Option<Origin> {
        match v {
            0 => Some(Origin::Real),
            1 => Some(Origin::Generated),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogRecord {
    pub label: Label,
    pub text: String,
}

impl LogRecord {
    pub fn new(label: Label, text: impl Into<String>) -> Self {
        LogRecord {
            label,
            text: text.into(),
        }
    }
}

/// A message as exactly `L` token ids, right-padded with [`PAD_ID`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedLog {
    pub ids: Vec<TokenId>,
    pub label: Label,
    pub origin: Origin,
}

impl EncodedLog {
    pub fn new(ids: Vec<TokenId>, label: Label) -> Self {
        EncodedLog {
            ids,
            label,
            origin: Origin::Real,
        }
    }

    /// Number of tokens before the first PAD.
    pub fn content_len(&self) -> usize {
        self.ids.iter().position(|&i| i == PAD_ID).unwrap_or(self.ids.len())
    }

    /// True when every PAD sits after the last real token.
    pub fn is_canonical(&self) -> bool {
        let n = self.content_len();
        self.ids[n..].iter().all(|&i| i == PAD_ID)
    }
}

/// Maps `record` onto exactly `len` ids: prefix truncation, PAD on the right.
pub fn encode(record: &LogRecord, vocab: &Vocabulary, len: usize) -> EncodedLog {
    let mut ids: Vec<TokenId> = tokenize(&record.text)
        .iter()
        .take(len)
        .map(|t| vocab.id(t))
        .collect();
    ids.resize(len, PAD_ID);
    EncodedLog::new(ids, record.label)
}

/// Tokens up to the first PAD.
pub fn decode(encoded: &EncodedLog, vocab: &Vocabulary) -> Vec<String> {
    encoded.ids[..encoded.content_len()]
        .iter()
        .map(|&i| vocab.token(i).unwrap_or(vocab::UNK_TOKEN).to_string())
        .collect()
}

/// Keeps the first occurrence of each `(ids, label)` pair, in order.
pub fn dedup(records: &[EncodedLog]) -> Vec<EncodedLog> {
    let mut seen = HashSet::with_capacity(records.len());
    records
        .iter()
        .filter(|r| seen.insert((r.ids.as_slice(), r.label)))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(ids: &[u32], label: Label) -> EncodedLog {
        EncodedLog::new(ids.to_vec(), label)
    }

    #[test]
    fn encode_pads_and_truncates() {
        let corpus = vec![LogRecord::new(Label::Positive, "a b c")];
        let vocab = build_vocab(&corpus, 1).unwrap();
        let e = encode(&corpus[0], &vocab, SEQ_LEN);
        assert_eq!(e.ids.len(), 40);
        assert!(e.ids[..3].iter().all(|&i| i > UNK_ID));
        assert!(e.ids[3..].iter().all(|&i| i == PAD_ID));

        let long: String = (0..50).map(|i| format!("w{} ", (b'a' + (i % 26) as u8) as char)).collect();
        let rec = LogRecord::new(Label::Negative, long);
        let vocab = build_vocab(std::slice::from_ref(&rec), 1).unwrap();
        let e = encode(&rec, &vocab, SEQ_LEN);
        assert_eq!(e.ids.len(), 40);
        assert!(e.ids.iter().all(|&i| i != PAD_ID));
        let expected: Vec<u32> = tokenize(&rec.text)[..40].iter().map(|t| vocab.id(t)).collect();
        assert_eq!(e.ids, expected);
    }

    #[test]
    fn unknown_tokens_map_to_unk() {
        let vocab = build_vocab(&[LogRecord::new(Label::Positive, "known")], 1).unwrap();
        let e = encode(&LogRecord::new(Label::Positive, "known unseen"), &vocab, 4);
        assert_eq!(e.ids, vec![2, UNK_ID, PAD_ID, PAD_ID]);
    }

    #[test]
    fn decode_round_trips_synthetic_messages() {
        let corpus = synth_corpus(&SynthConfig { n_total: 100, ..Default::default() }, 3).unwrap();
        let vocab = build_vocab(&corpus, 1).unwrap();
        for r in &corpus {
            let toks = tokenize(&r.text);
            let e = encode(r, &vocab, SEQ_LEN);
            let n = toks.len().min(SEQ_LEN);
            assert_eq!(decode(&e, &vocab), toks[..n].to_vec());
            assert!(e.is_canonical());
            assert!(e.ids.iter().all(|&i| (i as usize) < vocab.len()));
        }
    }

    #[test]
    fn dedup_cases() {
        let a = rec(&[2, 3, 0], Label::Negative);
        let b = rec(&[2, 4, 0], Label::Negative);
        assert_eq!(dedup(&[a.clone(), b.clone(), a.clone()]), vec![a.clone(), b.clone()]);
        assert_eq!(dedup(&[a.clone(), b.clone()]), vec![a.clone(), b]);
        // Same ids under a different label are distinct records.
        let a_pos = rec(&[2, 3, 0], Label::Positive);
        assert_eq!(dedup(&[a.clone(), a_pos.clone()]).len(), 2);
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent_and_order_stable(
            raw in proptest::collection::vec((0u32..4, 0u32..4, any::<bool>()), 0..60)
        ) {
            let records: Vec<EncodedLog> = raw
                .iter()
                .map(|&(a, b, l)| rec(&[a, b], if l { Label::Positive } else { Label::Negative }))
                .collect();
            let once = dedup(&records);
            prop_assert!(once.len() <= records.len());
            prop_assert_eq!(dedup(&once), once.clone());
            // First occurrences appear in input order.
            let mut cursor = 0;
            for r in &once {
                let pos = records[cursor..].iter().position(|x| x == r).unwrap() + cursor;
                prop_assert!(records[..pos].iter().all(|x| x != r));
                cursor = pos + 1;
            }
        }
    }
}
