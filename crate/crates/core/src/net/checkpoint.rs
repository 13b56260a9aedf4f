//! Binary checkpoint format for local map networks.
//!
//! Little-endian layout:
//! - magic `b"SDFNET\0\0"` (8 bytes)
//! - version `u32` (currently 1)
//! - `d`, `f`, `h` as `u32`
//! - input normalization: `center[d]`, `half[d]` as `f64`
//! - the frozen Fourier matrix (f × d) as `f32`, row-major
//! - sdf head then conf head, each as `w1` (2f × h), `b1` (h), `w2` (h × h),
//!   `b2` (h), `w3` (h), `b3`, all `f32` row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::params::{HeadParams, NetParams};
use super::NetError;

const MAGIC: &[u8; 8] = b"SDFNET\0\0";
const VERSION: u32 = 1;

pub fn save_checkpoint<W: Write, const D: usize>(
    mut w: W,
    params: &NetParams<f32, D>,
) -> Result<(), NetError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let f = params.fourier.nrows() as u32;
    let h = params.sdf_head.b1.len() as u32;
    w.write_all(&(D as u32).to_le_bytes())?;
    w.write_all(&f.to_le_bytes())?;
    w.write_all(&h.to_le_bytes())?;
    for v in params.center.iter().chain(params.half.iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut write_f32s = |w: &mut W, it: &mut dyn Iterator<Item = f32>| -> Result<(), NetError> {
        for v in it {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    write_f32s(&mut w, &mut params.fourier.iter().copied())?;
    for head in [&params.sdf_head, &params.conf_head] {
        write_f32s(&mut w, &mut head.w1.iter().copied())?;
        write_f32s(&mut w, &mut head.b1.iter().copied())?;
        write_f32s(&mut w, &mut head.w2.iter().copied())?;
        write_f32s(&mut w, &mut head.b2.iter().copied())?;
        write_f32s(&mut w, &mut head.w3.iter().copied())?;
        write_f32s(&mut w, &mut std::iter::once(head.b3))?;
    }
    Ok(())
}

pub fn load_checkpoint<R: Read, const D: usize>(mut r: R) -> Result<NetParams<f32, D>, NetError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| NetError::BadCheckpoint("truncated magic".into()))?;
    if &magic != MAGIC {
        return Err(NetError::BadCheckpoint("wrong magic string".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NetError::BadCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let d = read_u32(&mut r)? as usize;
    if d != D {
        return Err(NetError::BadCheckpoint(format!(
            "dimension mismatch: file has {d}, expected {D}"
        )));
    }
    let f = read_u32(&mut r)? as usize;
    let h = read_u32(&mut r)? as usize;
    if f == 0 || h == 0 || f > 1 << 20 || h > 1 << 20 {
        return Err(NetError::BadCheckpoint(format!("implausible shape f={f} h={h}")));
    }
    let mut center = [0.0f64; D];
    let mut half = [0.0f64; D];
    for v in center.iter_mut().chain(half.iter_mut()) {
        *v = read_f64(&mut r)?;
    }
    let fourier = read_array2(&mut r, f, d)?;
    let mut head = |r: &mut R| -> Result<HeadParams<f32>, NetError> {
        Ok(HeadParams {
            w1: read_array2(r, 2 * f, h)?,
            b1: read_array1(r, h)?,
            w2: read_array2(r, h, h)?,
            b2: read_array1(r, h)?,
            w3: read_array1(r, h)?,
            b3: read_f32(r)?,
        })
    };
    let sdf_head = head(&mut r)?;
    let conf_head = head(&mut r)?;
    Ok(NetParams {
        fourier,
        sdf_head,
        conf_head,
        center,
        half,
    })
}

pub fn save_checkpoint_file<const D: usize>(
    path: &Path,
    params: &NetParams<f32, D>,
) -> Result<(), NetError> {
    save_checkpoint(BufWriter::new(File::create(path)?), params)
}

pub fn load_checkpoint_file<const D: usize>(path: &Path) -> Result<NetParams<f32, D>, NetError> {
    load_checkpoint(BufReader::new(File::open(path)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NetError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| NetError::BadCheckpoint("truncated header".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32, NetError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| NetError::BadCheckpoint("truncated payload".into()))?;
    Ok(f32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, NetError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| NetError::BadCheckpoint("truncated payload".into()))?;
    Ok(f64::from_le_bytes(buf))
}

fn read_array1<R: Read>(r: &mut R, n: usize) -> Result<Array1<f32>, NetError> {
    let mut data = vec![0.0f32; n];
    for v in &mut data {
        *v = read_f32(r)?;
    }
    Ok(Array1::from_vec(data))
}

fn read_array2<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Array2<f32>, NetError> {
    let mut data = vec![0.0f32; rows * cols];
    for v in &mut data {
        *v = read_f32(r)?;
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| NetError::BadCheckpoint(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Bbox;
    use crate::net::NetConfig;
    use nalgebra::vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> NetParams<f32, 2> {
        let bounds = Bbox::new(vector![-3.0, -2.0], vector![3.0, 2.0]).unwrap();
        NetParams::init(
            42,
            &NetConfig {
                frequencies: 8,
                hidden: 12,
                sigma_b: 0.8,
            },
            &bounds,
        )
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let p = params();
        let mut bytes = Vec::new();
        save_checkpoint(&mut bytes, &p).unwrap();
        let q: NetParams<f32, 2> = load_checkpoint(bytes.as_slice()).unwrap();
        assert_eq!(p, q);
        let mut bytes2 = Vec::new();
        save_checkpoint(&mut bytes2, &q).unwrap();
        assert_eq!(bytes, bytes2);
    }

    #[test]
    fn forward_outputs_survive_roundtrip() {
        let p = params();
        let mut bytes = Vec::new();
        save_checkpoint(&mut bytes, &p).unwrap();
        let q: NetParams<f32, 2> = load_checkpoint(bytes.as_slice()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pt = vector![rng.gen_range(-3.0..3.0), rng.gen_range(-2.0..2.0)];
            let (sa, ca) = p.forward_one(&pt);
            let (sb, cb) = q.forward_one(&pt);
            assert_eq!(sa.to_bits(), sb.to_bits());
            assert_eq!(ca.to_bits(), cb.to_bits());
        }
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let p = params();
        let mut bytes = Vec::new();
        save_checkpoint(&mut bytes, &p).unwrap();
        bytes[0] ^= 0xFF;
        assert!(matches!(
            load_checkpoint::<_, 2>(bytes.as_slice()),
            Err(NetError::BadCheckpoint(_))
        ));
    }

    #[test]
    fn truncation_is_rejected() {
        let p = params();
        let mut bytes = Vec::new();
        save_checkpoint(&mut bytes, &p).unwrap();
        bytes.truncate(bytes.len() - 7);
        assert!(load_checkpoint::<_, 2>(bytes.as_slice()).is_err());
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let p = params();
        let mut bytes = Vec::new();
        save_checkpoint(&mut bytes, &p).unwrap();
        assert!(matches!(
            load_checkpoint::<_, 3>(bytes.as_slice()),
            Err(NetError::BadCheckpoint(_))
        ));
    }
}
