//! `LBAL` checkpoint container: magic, version, section count, then for each
//! section its name and a length-prefixed matrix payload. All integers are
//! little-endian u32.

use crate::error::{Error, Result};
use crate::nn::{Matrix, ParamTensor, Parameters};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LBAL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub sections: Vec<(String, Matrix<f32>)>,
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::argument(format!("{v} does not fit a u32 field")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read, what: &str) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::format(format!("checkpoint truncated in {what}")))?;
    Ok(u32::from_le_bytes(b) as usize)
}

impl Checkpoint {
    pub fn of(model: &impl Parameters<f32>) -> Self {
        Checkpoint {
            sections: model
                .named_params()
                .into_iter()
                .map(|(n, p)| (n, p.value.clone()))
                .collect(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.sections.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&Matrix<f32>> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::format(format!("checkpoint has no section `{name}`")))
    }

    pub fn tensor(&self, name: &str) -> Result<ParamTensor<f32>> {
        Ok(ParamTensor::new(self.get(name)?.clone()))
    }

    /// Copies every section into the same-named tensor of `model`.
    pub fn restore_into(&self, model: &mut impl Parameters<f32>) -> Result<()> {
        for (name, p) in model.named_params_mut() {
            let m = self.get(&name)?;
            if m.shape() != p.value.shape() {
                return Err(Error::Shape {
                    op: "checkpoint restore",
                    left: m.shape(),
                    right: p.value.shape(),
                });
            }
            p.value = m.clone();
        }
        Ok(())
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        put_u32(w, CHECKPOINT_VERSION as usize)?;
        put_u32(w, self.sections.len())?;
        for (name, m) in &self.sections {
            put_u32(w, name.len())?;
            w.write_all(name.as_bytes())?;
            let payload = m.to_le_bytes();
            put_u32(w, payload.len())?;
            w.write_all(&payload)?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::format("checkpoint truncated in header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::format("not a checkpoint file"));
        }
        let version = get_u32(r, "version")?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(Error::format(format!("unsupported checkpoint version {version}")));
        }
        let count = get_u32(r, "section count")?;
        let mut sections = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name_len = get_u32(r, "section name")?;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)
                .map_err(|_| Error::format("checkpoint truncated in section name"))?;
            let name = String::from_utf8(name).map_err(|_| Error::format("section name is not UTF-8"))?;
            let len = get_u32(r, "section length")?;
            let mut payload = vec![0u8; len];
            r.read_exact(&mut payload)
                .map_err(|_| Error::format(format!("checkpoint truncated in section `{name}`")))?;
            sections.push((name, Matrix::from_le_bytes(&payload)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::format("trailing bytes after checkpoint sections"));
        }
        Ok(Checkpoint { sections })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read(&mut bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::AeParams;
    use crate::gru::GruClassifier;
    use crate::rng::from_seed;
    use crate::seqgan::{DiscriminatorParams, GeneratorParams};

    fn round_trip(c: &Checkpoint) -> Checkpoint {
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        Checkpoint::read(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn every_parameter_container_round_trips_bit_exactly() {
        let mut rng = from_seed(0);
        let ae = AeParams::<f32>::new([40, 16, 8, 8, 40], &mut rng);
        let clf = GruClassifier::<f32>::new(1, 12, &mut rng);
        let gen = GeneratorParams::<f32>::new(30, 6, 7, &mut rng);
        let disc = DiscriminatorParams::<f32>::new(30, 5, &[1, 2, 3, 4], 3, 0.75, &mut rng);

        let mut ae2 = AeParams::<f32>::zeros([40, 16, 8, 8, 40]);
        round_trip(&Checkpoint::of(&ae)).restore_into(&mut ae2).unwrap();
        assert!(ae2.values_bit_equal(&ae));

        let mut clf2 = GruClassifier::<f32>::new(1, 12, &mut rng);
        round_trip(&Checkpoint::of(&clf)).restore_into(&mut clf2).unwrap();
        assert!(clf2.values_bit_equal(&clf));

        let c = round_trip(&Checkpoint::of(&gen));
        let gen2 = GeneratorParams::from_tensors(|n| c.tensor(n)).unwrap();
        assert!(gen2.values_bit_equal(&gen));

        let c = round_trip(&Checkpoint::of(&disc));
        let disc2 = DiscriminatorParams::from_tensors(&c.names(), 0.75, |n| c.tensor(n)).unwrap();
        assert!(disc2.values_bit_equal(&disc));
        assert_eq!(disc2.convs.iter().map(|b| b.width).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn header_layout() {
        let c = Checkpoint {
            sections: vec![("a".into(), Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap())],
        };
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"LBAL");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(buf.len(), 12 + 4 + 1 + 4 + 8 + 8);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let c = Checkpoint {
            sections: vec![("w".into(), Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap())],
        };
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert!(Checkpoint::read(&mut &buf[..buf.len() - 2]).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(Checkpoint::read(&mut extra.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Checkpoint::read(&mut bad.as_slice()).is_err());
        let mut clf = GruClassifier::<f32>::new(1, 4, &mut from_seed(0));
        assert!(c.restore_into(&mut clf).is_err());
    }
}
