/// Sentinel substituted for every run of ASCII digits.
pub const NUM_TOKEN: &str = "NUM";

/// Lowercases, splits on whitespace, trims punctuation from each token's ends,
/// and collapses digit runs to [`NUM_TOKEN`]. Empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| c.is_ascii_punctuation());
            if trimmed.is_empty() {
                None
            } else {
                Some(normalize(trimmed))
            }
        })
        .collect()
}

fn normalize(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut rest = token;
    while let Some(c) = rest.chars().next() {
        if let Some(tail) = rest.strip_prefix(NUM_TOKEN) {
            // Already-normalized sentinel passes through unchanged.
            out.push_str(NUM_TOKEN);
            rest = tail;
        } else if c.is_ascii_digit() {
            out.push_str(NUM_TOKEN);
            rest = rest.trim_start_matches(|c: char| c.is_ascii_digit());
        } else {
            out.extend(c.to_lowercase());
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};

    #[test]
    fn rules() {
        assert_eq!(tokenize("Error 404 at node-12"), vec!["error", "NUM", "at", "node-NUM"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ... --- ").is_empty());
        assert_eq!(tokenize("(fatal), 12.5s"), vec!["fatal", "NUM.NUMs"]);
        assert_eq!(tokenize("ID=0x1F"), vec!["id=NUMxNUMf"]);
    }

    #[test]
    fn idempotent_on_joined_output() {
        let corpus = synth_corpus(&SynthConfig { n_total: 100, ..Default::default() }, 17).unwrap();
        for r in corpus.iter().chain(std::iter::once(&crate::corpus::LogRecord::new(
            crate::corpus::Label::Negative,
            "Kernel PANIC: cpu7 [core 12] num NUM Num-3",
        ))) {
            let once = tokenize(&r.text);
            assert_eq!(tokenize(&once.join(" ")), once);
        }
    }
}
