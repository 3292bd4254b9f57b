//! NFZ1 snapshot files.
//!
//! Little-endian layout: magic `NFZ1`; u32 M, L, K_t, K_r; f64 sigma; then
//! K_t·K_r records of (u16 m, u16 n, M²L interleaved f64 re/im).

use super::SubarraySnapshot;
use crate::{Error, Result, C64};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"NFZ1";

#[derive(Clone, Debug, PartialEq)]
pub struct NfzFile {
    pub m_sub: u32,
    pub n_pulses: u32,
    pub k_t: u32,
    pub k_r: u32,
    pub sigma: f64,
    pub snapshots: Vec<SubarraySnapshot>,
}

pub fn write<W: Write>(w: &mut W, file: &NfzFile) -> Result<()> {
    let expected = (file.k_t * file.k_r) as usize;
    if file.snapshots.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: file.snapshots.len(),
        });
    }
    let per = (file.m_sub * file.m_sub * file.n_pulses) as usize;
    w.write_all(MAGIC)?;
    for v in [file.m_sub, file.n_pulses, file.k_t, file.k_r] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&file.sigma.to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 + per * 16);
    for s in &file.snapshots {
        if s.data.len() != per {
            return Err(Error::LengthMismatch {
                expected: per,
                got: s.data.len(),
            });
        }
        let m =
            u16::try_from(s.m).map_err(|_| Error::Format("subarray index exceeds u16".into()))?;
        let n =
            u16::try_from(s.n).map_err(|_| Error::Format("subarray index exceeds u16".into()))?;
        buf.clear();
        buf.extend_from_slice(&m.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
        for z in &s.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read<R: Read>(r: &mut R) -> Result<NfzFile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let m_sub = read_u32(r)?;
    let n_pulses = read_u32(r)?;
    let k_t = read_u32(r)?;
    let k_r = read_u32(r)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let sigma = f64::from_le_bytes(b8);
    let per = (m_sub as usize) * (m_sub as usize) * (n_pulses as usize);
    let count = (k_t as usize) * (k_r as usize);
    let mut snapshots = Vec::with_capacity(count);
    let mut raw = vec![0u8; per * 16];
    for _ in 0..count {
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let m = u16::from_le_bytes(b2) as usize;
        r.read_exact(&mut b2)?;
        let n = u16::from_le_bytes(b2) as usize;
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        snapshots.push(SubarraySnapshot::new(
            m,
            n,
            m_sub as usize,
            n_pulses as usize,
            data,
        )?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    Ok(NfzFile {
        m_sub,
        n_pulses,
        k_t,
        k_r,
        sigma,
        snapshots,
    })
}
