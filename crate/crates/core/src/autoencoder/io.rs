use super::FeatureRecord;
use crate::corpus::{Label, Origin};
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub const FEATURE_MAGIC: &[u8; 4] = b"LBFT";

pub fn write_features(w: &mut impl Write, records: &[FeatureRecord]) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.features.len());
    if records.iter().any(|r| r.features.len() != dim) {
        return Err(Error::argument("feature records have differing dimensions"));
    }
    let count = u32::try_from(records.len()).map_err(|_| Error::argument("too many feature records"))?;
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&count.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(2 + 4 * dim);
    for r in records {
        buf.clear();
        buf.push(r.label.as_u8());
        buf.push(r.origin as u8);
        for x in &r.features {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_features(r: &mut impl Read) -> Result<Vec<FeatureRecord>> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| Error::format("truncated feature header"))?;
    if &head[..4] != FEATURE_MAGIC {
        return Err(Error::format("not a feature file"));
    }
    let count = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let dim = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
    let mut buf = vec![0u8; 2 + 4 * dim];
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|_| Error::format(format!("truncated at feature record {i}")))?;
        let label = Label::from_u8(buf[0]).ok_or_else(|| Error::format(format!("bad label byte {}", buf[0])))?;
        let origin = Origin::from_u8(buf[1]).ok_or_else(|| Error::format(format!("bad origin byte {}", buf[1])))?;
        let features = buf[2..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        out.push(FeatureRecord { features, label, origin });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("trailing bytes after feature records"));
    }
    Ok(out)
}
