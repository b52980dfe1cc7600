//! Binary checkpoint layout, all integers little-endian:
//!
//! ```text
//! magic "THCK" | version u32 | descriptor length u32 | descriptor (JSON ModelSpec)
//! seed u64 | tensor count u32
//! per tensor: rank u32 | dims u32 × rank | values f32 × product(dims)
//! ```
//!
//! Weights are stored as f32, so `Model<f32>` round-trips bit-exactly.

use super::{cast, Model, ModelSpec, Scalar};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"THCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Upper bound on the descriptor, so a corrupt length cannot allocate
/// gigabytes.
const MAX_DESCRIPTOR: u32 = 1 << 20;

fn u32_len(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Checkpoint(format!("{what} too large")))
}

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, mut w: impl Write) -> Result<()> {
    let descriptor = serde_json::to_vec(model.spec())?;
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&u32_len(descriptor.len(), "descriptor")?.to_le_bytes())?;
    w.write_all(&descriptor)?;
    w.write_all(&model.seed().to_le_bytes())?;
    let shapes = model.param_shapes();
    w.write_all(&u32_len(shapes.len(), "tensor count")?.to_le_bytes())?;
    for (dims, values) in shapes.iter().zip(model.params()) {
        w.write_all(&u32_len(dims.len(), "rank")?.to_le_bytes())?;
        for &d in dims {
            w.write_all(&u32_len(d, "dimension")?.to_le_bytes())?;
        }
        for v in values {
            let f = v.to_f32().ok_or_else(|| Error::Checkpoint("weight not representable".into()))?;
            w.write_all(&f.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn load_checkpoint<T: Scalar>(mut r: impl Read) -> Result<Model<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let len = read_u32(&mut r)?;
    if len > MAX_DESCRIPTOR {
        return Err(Error::Checkpoint("descriptor too long".into()));
    }
    let mut descriptor = vec![0u8; len as usize];
    r.read_exact(&mut descriptor)?;
    let spec: ModelSpec = serde_json::from_slice(&descriptor)?;
    let mut seed = [0u8; 8];
    r.read_exact(&mut seed)?;
    let seed = u64::from_le_bytes(seed);

    let expected = Model::<T>::zeroed(spec.clone())?.param_shapes();
    let count = read_u32(&mut r)? as usize;
    if count != expected.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {count}", expected.len())));
    }
    let mut params = Vec::with_capacity(count);
    for want in &expected {
        let rank = read_u32(&mut r)? as usize;
        if rank != want.len() {
            return Err(Error::Checkpoint("tensor rank does not match the architecture".into()));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        if &dims != want {
            return Err(Error::Checkpoint(format!("tensor shape {dims:?}, expected {want:?}")));
        }
        let n: usize = dims.iter().product();
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes)?;
        params.push(
            bytes
                .chunks_exact(4)
                .map(|c| cast(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
                .collect(),
        );
    }
    Model::from_parts(spec, seed, params)
}

impl<T: Scalar> Model<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        save_checkpoint(self, &mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_checkpoint(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = Model::<f32>::new(ModelSpec::lenet(10), 42).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&model, &mut buf).unwrap();
        let back: Model<f32> = load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.spec(), model.spec());
        assert_eq!(back.seed(), 42);
        for (a, b) in back.params().iter().zip(model.params()) {
            let bits = |t: &[f32]| t.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        let mut again = Vec::new();
        save_checkpoint(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn header_layout() {
        let model = Model::<f32>::zeroed(ModelSpec::lenet(4)).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&model, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"THCK");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        let floats: usize = model.parameter_count();
        let len = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        // Header, seed, count, six rank-prefixed shapes (4+1+4+1+2+1 dims).
        let expected = 12 + len + 8 + 4 + 6 * 4 + 13 * 4 + floats * 4;
        assert_eq!(buf.len(), expected);
    }

    #[test]
    fn rejects_corruption() {
        let model = Model::<f32>::new(ModelSpec::lenet(4), 1).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&model, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(load_checkpoint::<f32>(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(load_checkpoint::<f32>(bad.as_slice()).is_err());
        assert!(load_checkpoint::<f32>(&buf[..buf.len() - 1]).is_err());
    }
}
