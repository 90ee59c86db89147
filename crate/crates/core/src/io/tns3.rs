//! The `TNS3` binary tensor container.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | content |
//! |-------:|-----:|---------|
//! | 0 | 4 | magic `TNS3` |
//! | 4 | 4 | version, `u32`, always 1 |
//! | 8 | 24 | `n1`, `n2`, `n3` as `u64` |
//! | 32 | `8 n1 n2 n3` | entries as `f64`, `i` fastest, then `j`, then `k` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TubalError};
use crate::tensor::Tensor3;

pub const MAGIC: [u8; 4] = *b"TNS3";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 32;

const CHUNK: usize = 1 << 16;

pub fn write_tns3_to<W: Write>(t: &Tensor3, mut w: W) -> Result<()> {
    let (n1, n2, n3) = t.dims();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in [n1, n2, n3] {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(CHUNK * 8);
    for chunk in t.as_slice().chunks(CHUNK) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tns3(t: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    write_tns3_to(t, BufWriter::new(File::create(path)?))
}

fn format_err(offset: u64, msg: impl Into<String>) -> TubalError {
    TubalError::Format { offset, msg: msg.into() }
}

/// Fills `buf` completely, or reports how many bytes were available.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(got)
}

pub fn read_tns3_from<R: Read>(mut r: R) -> Result<Tensor3> {
    let mut header = [0u8; HEADER_LEN as usize];
    let got = read_full(&mut r, &mut header)?;
    if got < 4 || header[..4] != MAGIC {
        if got < 4 {
            return Err(format_err(got as u64, "file ends inside the magic number"));
        }
        return Err(format_err(0, format!("bad magic {:?}", &header[..4])));
    }
    if got < HEADER_LEN as usize {
        return Err(format_err(got as u64, "file ends inside the header"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for (d, dim) in dims.iter_mut().enumerate() {
        let off = 8 + 8 * d;
        let raw = u64::from_le_bytes(header[off..off + 8].try_into().unwrap());
        *dim = usize::try_from(raw).map_err(|_| format_err(off as u64, format!("dimension {raw} too large")))?;
    }
    let [n1, n2, n3] = dims;
    let len = n1
        .checked_mul(n2)
        .and_then(|x| x.checked_mul(n3))
        .filter(|&len| len.checked_mul(8).is_some())
        .ok_or_else(|| format_err(8, format!("dimensions {n1}x{n2}x{n3} overflow")))?;

    let mut data = Vec::with_capacity(len.min(1 << 28));
    let mut buf = vec![0u8; CHUNK * 8];
    while data.len() < len {
        let want = (len - data.len()).min(CHUNK) * 8;
        let got = read_full(&mut r, &mut buf[..want])?;
        let offset = HEADER_LEN + 8 * data.len() as u64;
        if got < want {
            return Err(format_err(
                offset + got as u64,
                format!("payload truncated: expected {} bytes, found {}", 8 * len as u64, offset + got as u64 - HEADER_LEN),
            ));
        }
        for (idx, bytes) in buf[..want].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(bytes.try_into().unwrap());
            if !v.is_finite() {
                return Err(format_err(offset + 8 * idx as u64, format!("non-finite value {v}")));
            }
            data.push(v);
        }
    }
    let mut probe = [0u8; 1];
    if read_full(&mut r, &mut probe)? != 0 {
        return Err(format_err(HEADER_LEN + 8 * len as u64, "trailing bytes after payload"));
    }
    Tensor3::from_vec(n1, n2, n3, data)
}

pub fn read_tns3(path: impl AsRef<Path>) -> Result<Tensor3> {
    read_tns3_from(BufReader::new(File::open(path)?))
}
