//! Model checkpoints: named parameters in a versioned little-endian binary
//! format with a schema hash so shape drift is caught at load time.

use crate::bytesio::{write_str, ByteReader};
use crate::error::{EktfError, Result};
use crate::numkit::matrix::Matrix;
use std::path::Path;

const MAGIC: &[u8; 4] = b"EKCP";
const VERSION: u32 = 1;

/// FNV-1a over "name:rows:cols;" for every parameter in order.
fn schema_hash(params: &[(String, &Matrix)]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for (name, m) in params {
        eat(name.as_bytes());
        eat(format!(":{}:{};", m.rows(), m.cols()).as_bytes());
    }
    hash
}

pub fn save_checkpoint(path: &Path, params: &[(String, &Matrix)]) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&schema_hash(params).to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, m) in params {
        write_str(&mut out, name);
        out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
        for &v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<(String, Matrix)>> {
    let bytes = std::fs::read(path)?;
    let mut r = ByteReader::new(&bytes, "checkpoint");
    if r.take(4)? != MAGIC {
        return Err(EktfError::Data(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = r.take_u32()?;
    if version != VERSION {
        return Err(EktfError::Data(format!(
            "checkpoint version {version} unsupported (expected {VERSION})"
        )));
    }
    let stored_hash = r.take_u64()?;
    let count = r.take_u32()? as usize;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.take_str()?;
        let rows = r.take_u32()? as usize;
        let cols = r.take_u32()? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(r.take_f64()?);
        }
        params.push((name, Matrix::from_vec(rows, cols, data)?));
    }
    r.finish()?;
    let refs: Vec<(String, &Matrix)> = params.iter().map(|(n, m)| (n.clone(), m)).collect();
    if schema_hash(&refs) != stored_hash {
        return Err(EktfError::Data(format!(
            "{}: checkpoint schema hash mismatch",
            path.display()
        )));
    }
    Ok(params)
}
