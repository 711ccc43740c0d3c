use super::{tokenize, LogRecord, TokenId};
use crate::error::{Error, Result};
use std::collections::HashMap;

pub const PAD_ID: TokenId = 0;
pub const UNK_ID: TokenId = 1;
pub(crate) const PAD_TOKEN: &str = "<pad>";
pub(crate) const UNK_TOKEN: &str = "<unk>";

/// Token ↔ id map with PAD at 0 and UNK at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds from ordinary tokens, which receive ids 2, 3, … in order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut all = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        all.extend(tokens);
        Self::from_table(all)
    }

    /// Builds from the full id-ordered table, reserved entries included.
    pub(crate) fn from_table(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(Error::format("vocabulary must start with <pad>, <unk>"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::format(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id of `token`, or [`UNK_ID`] when out of vocabulary.
    pub fn id(&self, token: &str) -> TokenId {
        match self.index.get(token) {
            Some(&id) if id > UNK_ID => id,
            _ => UNK_ID,
        }
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// `(token, id)` pairs in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, TokenId)> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as TokenId))
    }
}

/// Tokens seen at least `min_count` times, most frequent first, ties broken
/// lexicographically.
pub fn build_vocab(corpus: &[LogRecord], min_count: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::argument("cannot build a vocabulary from an empty corpus"));
    }
    if min_count == 0 {
        return Err(Error::argument("min_count must be positive"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in corpus {
        for t in tokenize(&r.text) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t))
}
