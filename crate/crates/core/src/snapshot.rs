//! LLAB binary field snapshots.
//!
//! Layout (little-endian): magic `LLAB`, `u16` version, `u8` d, `u8` frame,
//! `u32` N, `f64` L, `f64` t, then `N^d` complex samples as `(re, im)` f64
//! pairs in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, Frame, GridSpec, C64};

pub const MAGIC: &[u8; 4] = b"LLAB";
pub const VERSION: u16 = 1;

pub fn write_snapshot<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(28 + 16 * g.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(g.dim() as u8);
    buf.push(field.frame().code());
    buf.extend_from_slice(&(g.points_per_axis() as u32).to_le_bytes());
    buf.extend_from_slice(&g.length().to_le_bytes());
    buf.extend_from_slice(&field.t().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Field> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(field: &Field, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(field, std::io::BufWriter::new(file))
}

pub fn load(path: &Path) -> Result<Field> {
    read_snapshot(std::fs::File::open(path)?)
}

fn decode(bytes: &[u8]) -> Result<Field> {
    const HEADER: usize = 4 + 2 + 1 + 1 + 4 + 8 + 8;
    if bytes.len() < HEADER {
        return Err(Error::Snapshot(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let d = bytes[6] as usize;
    let frame = Frame::from_code(bytes[7])
        .ok_or_else(|| Error::Snapshot(format!("unknown frame code {}", bytes[7])))?;
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let t = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let grid = GridSpec::new(d, n, length)?;
    let expected = HEADER + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER..]
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Field::new(grid, values, t, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = GridSpec::new(2, 16, 3.5).unwrap();
        let f = Field::from_fn(g, -0.25, Frame::Lens, |x| C64::new(x[0], x[1].sin()));
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"LLAB");
        assert_eq!(buf.len(), 28 + 16 * 256);
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&Field::zeros(g, 0.0, Frame::Physical), &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Snapshot(_))));
        buf[0] = b'X';
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
