//! Binary field snapshots and CSV export.
//!
//! Layout (little endian):
//!
//! | bytes  | content                         |
//! |--------|---------------------------------|
//! | 0..8   | magic `VIRLABF1`                |
//! | 8..16  | `N` as u64                      |
//! | 16..24 | `L` as f64                      |
//! | 24..32 | component count as u64          |
//! | 32..   | per component, `N³` (re, im) f64 pairs in node order |

use std::io::{Read, Write};

use super::{GridSpec, ScalarField, C64};
use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 8] = b"VIRLABF1";
pub const HEADER_LEN: usize = 32;

pub fn write_snapshot<W: Write>(mut w: W, comps: &[&ScalarField]) -> Result<()> {
    let first = comps
        .first()
        .ok_or_else(|| LabError::Format("no components to write".into()))?;
    let grid = *first.grid();
    for c in comps {
        grid.check_same(c.grid())?;
    }
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.half_width().to_le_bytes())?;
    w.write_all(&(comps.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(grid.len() * 16);
    for c in comps {
        buf.clear();
        for z in c.data() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<Vec<ScalarField>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..8] != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let word = |k: usize| -> [u8; 8] { header[k..k + 8].try_into().expect("8 bytes") };
    let n = u64::from_le_bytes(word(8)) as usize;
    let l = f64::from_le_bytes(word(16));
    let count = u64::from_le_bytes(word(24)) as usize;
    let grid = GridSpec::new(l, n)?;
    if count == 0 || count > 64 {
        return Err(LabError::Format(format!("implausible component count {count}")));
    }
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![0u8; grid.len() * 16];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[0..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..16].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        out.push(ScalarField::from_vec(grid, data)?);
    }
    Ok(out)
}

/// `x,y,z,Re,Im` rows, one per node.
pub fn write_csv<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    writeln!(w, "x,y,z,Re,Im")?;
    for (i, z) in f.data().iter().enumerate() {
        let [x, y, zc] = g.point(i);
        writeln!(w, "{x},{y},{zc},{},{}", z.re, z.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_32_bytes() {
        let g = GridSpec::new(1.5, 9).unwrap();
        let f = ScalarField::zeros(g);
        let mut out = Vec::new();
        write_snapshot(&mut out, &[&f, &f]).unwrap();
        assert_eq!(out.len(), HEADER_LEN + 2 * g.len() * 16);
        assert_eq!(&out[..8], MAGIC);
        assert_eq!(u64::from_le_bytes(out[8..16].try_into().unwrap()), 9);
        assert_eq!(f64::from_le_bytes(out[16..24].try_into().unwrap()), 1.5);
        assert_eq!(u64::from_le_bytes(out[24..32].try_into().unwrap()), 2);
    }

    #[test]
    fn rejects_bad_magic() {
        let bytes = [0u8; 64];
        assert!(matches!(read_snapshot(&bytes[..]), Err(LabError::Format(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = GridSpec::new(1.0, 9).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &ScalarField::zeros(g)).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), g.len() + 1);
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(seed in any::<u64>(), l in 0.5f64..20.0) {
            let g = GridSpec::new(l, 9).unwrap();
            let f = ScalarField::from_index_fn(g, |i| {
                let t = (i as u64).wrapping_mul(seed | 1) as f64 * 1e-19;
                C64::new(t.sin(), (t * 3.0).cos())
            });
            let mut out = Vec::new();
            write_snapshot(&mut out, &[&f]).unwrap();
            let back = read_snapshot(&out[..]).unwrap();
            prop_assert_eq!(&back[0], &f);
        }
    }
}
