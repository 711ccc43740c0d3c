//! Corpus, vocabulary and encoded-dataset files.

use super::{EncodedLog, Label, LogRecord, Origin, Vocabulary};
use crate::error::{Error, Result};
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub const DATASET_MAGIC: &[u8; 4] = b"LBDS";
pub const DATASET_VERSION: u32 = 1;
/// Same layout plus an origin byte after each label; used once generated
/// records are present.
pub const DATASET_VERSION_WITH_ORIGIN: u32 = 2;

/// Parses `label<TAB>message` lines; blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (label, message) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(format!("line {}: expected `label<TAB>message`", n + 1)))?;
        let label = match label.trim() {
            "0" => Label::Negative,
            "1" => Label::Positive,
            other => {
                return Err(Error::format(format!(
                    "line {}: label must be 0 or 1, got `{other}`",
                    n + 1
                )))
            }
        };
        if message.trim().is_empty() {
            return Err(Error::format(format!("line {}: empty message", n + 1)));
        }
        out.push(LogRecord::new(label, message));
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<Vec<LogRecord>> {
    parse_corpus(&fs::read_to_string(path)?)
}

pub fn write_corpus(path: &Path, records: &[LogRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        if r.text.contains(['\n', '\t']) {
            return Err(Error::format("messages may not contain tabs or newlines"));
        }
        writeln!(w, "{}\t{}", r.label.as_u8(), r.text)?;
    }
    w.flush()?;
    Ok(())
}

/// One `token<TAB>id` per line in id order.
pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (t, id) in vocab.entries() {
        writeln!(w, "{t}\t{id}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path)?;
    let mut tokens = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let (t, id) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::format(format!("vocab line {}: expected `token<TAB>id`", n + 1)))?;
        let id: usize = id
            .parse()
            .map_err(|_| Error::format(format!("vocab line {}: bad id `{id}`", n + 1)))?;
        if id != tokens.len() {
            return Err(Error::format(format!("vocab line {}: ids must be contiguous", n + 1)));
        }
        tokens.push(t.to_string());
    }
    Vocabulary::from_table(tokens)
}

/// Header `LBDS`, version, V, L, count (little-endian u32); then per record a
/// label byte and L little-endian u32 ids. If any record is generated the
/// version is [`DATASET_VERSION_WITH_ORIGIN`] and an origin byte follows each
/// label.
pub fn write_dataset(w: &mut impl Write, vocab_size: usize, len: usize, records: &[EncodedLog]) -> Result<()> {
    let with_origin = records.iter().any(|r| r.origin != Origin::Real);
    let version = if with_origin { DATASET_VERSION_WITH_ORIGIN } else { DATASET_VERSION };
    w.write_all(DATASET_MAGIC)?;
    for v in [version, vocab_size as u32, len as u32, records.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for r in records {
        if r.ids.len() != len {
            return Err(Error::Consistency(format!(
                "record has {} ids, dataset length is {len}",
                r.ids.len()
            )));
        }
        w.write_all(&[r.label.as_u8()])?;
        if with_origin {
            w.write_all(&[r.origin as u8])?;
        }
        for id in &r.ids {
            w.write_all(&id.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Returns `(vocab_size, len, records)`.
pub fn read_dataset(r: &mut impl Read) -> Result<(usize, usize, Vec<EncodedLog>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::format("not an encoded dataset (bad magic)"));
    }
    let mut u = || -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let version = u()?;
    let with_origin = match version {
        DATASET_VERSION => false,
        DATASET_VERSION_WITH_ORIGIN => true,
        _ => return Err(Error::format(format!("unsupported dataset version {version}"))),
    };
    let vocab_size = u()? as usize;
    let len = u()? as usize;
    let count = u()? as usize;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    let head = 1 + with_origin as usize;
    let mut buf = vec![0u8; head + 4 * len];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let label = Label::from_u8(buf[0]).ok_or_else(|| Error::format("bad label byte"))?;
        let origin = if with_origin {
            Origin::from_u8(buf[1]).ok_or_else(|| Error::format("bad origin byte"))?
        } else {
            Origin::Real
        };
        let ids: Vec<u32> = buf[head..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if ids.iter().any(|&i| i as usize >= vocab_size) {
            return Err(Error::format("token id out of vocabulary range"));
        }
        records.push(EncodedLog { ids, label, origin });
    }
    Ok((vocab_size, len, records))
}
