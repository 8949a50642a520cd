use std::io::{Read, Write};

use super::{ParamStore, Real, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"UDPT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

/// Parameters as read from a checkpoint file, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub entries: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn from_store<F: Real>(store: &ParamStore<F>) -> Self {
        Self {
            entries: store
                .iter()
                .map(|(_, p)| CheckpointEntry {
                    name: p.name.clone(),
                    dims: p.value.shape().to_vec(),
                    values: p.value.data().iter().map(|v| v.as_f64() as f32).collect(),
                })
                .collect(),
        }
    }

    /// Copies every entry into a store with identically named parameters.
    pub fn load_into<F: Real>(&self, store: &mut ParamStore<F>) -> Result<()> {
        let tensors = self
            .entries
            .iter()
            .map(|e| {
                let data = e.values.iter().map(|&v| F::from_f64_lossy(v as f64)).collect();
                Ok((e.name.clone(), Tensor::new(&e.dims, data)?))
            })
            .collect::<Result<Vec<_>>>()?;
        store.load_values(&tensors)
    }
}

/// Layout: magic `UDPT`, u16 version, u32 parameter count, then per
/// parameter u32 name length, UTF-8 name, u32 rank, u32 dims, and row-major
/// little-endian `f32` values.
pub fn write_checkpoint<F: Real, W: Write>(store: &ParamStore<F>, mut w: W) -> Result<()> {
    let ckpt = Checkpoint::from_store(store);
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(ckpt.entries.len() as u32).to_le_bytes());
    for e in &ckpt.entries {
        buf.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(e.name.as_bytes());
        buf.extend_from_slice(&(e.dims.len() as u32).to_le_bytes());
        for &d in &e.dims {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &e.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("missing UDPT magic".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = cur.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let len = cur.u32()? as usize;
        let name = String::from_utf8(cur.take(len)?.to_vec())
            .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
        let rank = cur.u32()? as usize;
        let dims = (0..rank).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel: usize = dims.iter().product();
        let values = cur
            .take(numel * 4)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        entries.push(CheckpointEntry { name, dims, values });
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after last parameter".into()));
    }
    Ok(Checkpoint { entries })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut s = ParamStore::<f32>::new();
        s.add("enc.w", Tensor::new(&[2, 3], vec![1.0, -2.0, 3.5, 0.0, 1e-7, 9.0]).unwrap(), true)
            .unwrap();
        s.add("enc.bn.running_mean", Tensor::new(&[3], vec![0.1, 0.2, 0.3]).unwrap(), false)
            .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&s, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"UDPT");
        let ck = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(ck, Checkpoint::from_store(&s));

        let mut t = ParamStore::<f32>::new();
        t.add("enc.w", Tensor::zeros(&[2, 3]), true).unwrap();
        t.add("enc.bn.running_mean", Tensor::zeros(&[3]), false).unwrap();
        ck.load_into(&mut t).unwrap();
        assert_eq!(t.value(t.find("enc.w").unwrap()), s.value(s.find("enc.w").unwrap()));

        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
    }
}
