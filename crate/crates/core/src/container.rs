//! Binary save/load of MPS and MPO chains.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `TNGSCONT` |
//! | 2     | format version (`1`) |
//! | 1     | kind: `0` MPS, `1` MPO |
//! | 1     | reserved, must be 0 |
//! | 4     | JSON header length `h` |
//! | h     | UTF-8 JSON header with shape metadata |
//! | 8     | site count `n` |
//! | 8(n+1)| bond dimensions, boundaries included |
//! | 8     | `log_norm` as f64 (0 for MPOs) |
//! | ...   | site tensors, row-major, each entry `re, im` as f64 |
//!
//! The JSON header duplicates the binary shape fields so that a file can be
//! inspected with `head -c`; on load both must agree.

use std::path::Path;

use ndarray::{Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mpo::Mpo;
use crate::mps::{Mps, PHYS_DIM};

pub const MAGIC: &[u8; 8] = b"TNGSCONT";
pub const VERSION: u16 = 1;

const KIND_MPS: u8 = 0;
const KIND_MPO: u8 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub n_sites: usize,
    pub bond_dims: Vec<usize>,
    pub phys_dim: usize,
    #[serde(default)]
    pub ortho_center: Option<usize>,
}

pub fn mps_to_bytes(psi: &Mps) -> Vec<u8> {
    let header = Header {
        kind: "mps".into(),
        n_sites: psi.n_sites(),
        bond_dims: psi.bond_dims(),
        phys_dim: PHYS_DIM,
        ortho_center: psi.ortho_center(),
    };
    let mut out = preamble(KIND_MPS, &header, psi.log_norm());
    for t in psi.tensors() {
        push_entries(&mut out, t.iter());
    }
    out
}

pub fn mpo_to_bytes(op: &Mpo) -> Vec<u8> {
    let header = Header {
        kind: "mpo".into(),
        n_sites: op.n_sites(),
        bond_dims: op.bond_dims(),
        phys_dim: PHYS_DIM,
        ortho_center: None,
    };
    let mut out = preamble(KIND_MPO, &header, 0.0);
    for w in op.tensors() {
        push_entries(&mut out, w.iter());
    }
    out
}

fn preamble(kind: u8, header: &Header, log_norm: f64) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind);
    out.push(0);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(header.n_sites as u64).to_le_bytes());
    for &d in &header.bond_dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&log_norm.to_le_bytes());
    out
}

fn push_entries<'a>(out: &mut Vec<u8>, it: impl Iterator<Item = &'a C64>) {
    for z in it {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.pos,
                format!("unexpected end of data reading {what}"),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn entries(&mut self, count: usize, what: &str) -> Result<Vec<C64>> {
        let bytes = count
            .checked_mul(16)
            .ok_or_else(|| Error::format(self.pos, format!("{what} is too large")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect())
    }
}

struct Decoded {
    header: Header,
    bond_dims: Vec<usize>,
    log_norm: f64,
    reader_pos: usize,
}

fn decode_preamble(buf: &[u8], want_kind: u8) -> Result<Decoded> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::format(8, format!("unsupported version {version}")));
    }
    let kind = r.u8("kind")?;
    if kind != want_kind {
        return Err(Error::format(10, format!("unexpected container kind {kind}")));
    }
    if r.u8("reserved byte")? != 0 {
        return Err(Error::format(11, "reserved byte is not zero"));
    }
    let hlen = r.u32("header length")? as usize;
    let hstart = r.pos;
    let json = r.take(hlen, "JSON header")?;
    let header: Header = serde_json::from_slice(json)
        .map_err(|e| Error::format(hstart, format!("invalid JSON header: {e}")))?;
    let expect_kind = if want_kind == KIND_MPS { "mps" } else { "mpo" };
    if header.kind != expect_kind || header.phys_dim != PHYS_DIM {
        return Err(Error::format(hstart, "header kind or physical dimension mismatch"));
    }
    let n_pos = r.pos;
    let n = r.u64("site count")? as usize;
    if n == 0 || n != header.n_sites {
        return Err(Error::format(
            n_pos,
            format!("site count {n} disagrees with header {}", header.n_sites),
        ));
    }
    let bonds_pos = r.pos;
    let mut bond_dims = Vec::with_capacity(n.min(1 << 16) + 1);
    for _ in 0..=n {
        bond_dims.push(r.u64("bond dimension")? as usize);
    }
    if bond_dims != header.bond_dims {
        return Err(Error::format(bonds_pos, "bond dimensions disagree with header"));
    }
    if bond_dims[0] != 1 || bond_dims[n] != 1 || bond_dims.contains(&0) {
        return Err(Error::format(bonds_pos, "invalid bond dimensions"));
    }
    let log_norm = r.f64("log_norm")?;
    Ok(Decoded {
        header,
        bond_dims,
        log_norm,
        reader_pos: r.pos,
    })
}

pub fn mps_from_bytes(buf: &[u8]) -> Result<Mps> {
    let d = decode_preamble(buf, KIND_MPS)?;
    let mut r = Reader {
        buf,
        pos: d.reader_pos,
    };
    let n = d.header.n_sites;
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let shape = (d.bond_dims[i], PHYS_DIM, d.bond_dims[i + 1]);
        let data = r.entries(shape.0 * shape.1 * shape.2, &format!("site {i}"))?;
        tensors.push(Array3::from_shape_vec(shape, data).expect("length matches shape"));
    }
    if r.pos != buf.len() {
        return Err(Error::format(r.pos, "trailing bytes after last tensor"));
    }
    let mps = Mps::from_tensors(tensors, d.log_norm)
        .map_err(|e| Error::format(d.reader_pos, e.to_string()))?;
    Ok(match d.header.ortho_center {
        Some(c) if c < n => Mps::from_parts_unchecked(mps.tensors().to_vec(), Some(c), d.log_norm),
        Some(c) => return Err(Error::format(0, format!("ortho center {c} out of range"))),
        None => mps,
    })
}

pub fn mpo_from_bytes(buf: &[u8]) -> Result<Mpo> {
    let d = decode_preamble(buf, KIND_MPO)?;
    let mut r = Reader {
        buf,
        pos: d.reader_pos,
    };
    let n = d.header.n_sites;
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let shape = (d.bond_dims[i], PHYS_DIM, PHYS_DIM, d.bond_dims[i + 1]);
        let data = r.entries(shape.0 * 4 * shape.3, &format!("site {i}"))?;
        tensors.push(Array4::from_shape_vec(shape, data).expect("length matches shape"));
    }
    if r.pos != buf.len() {
        return Err(Error::format(r.pos, "trailing bytes after last tensor"));
    }
    Mpo::from_tensors(tensors).map_err(|e| Error::format(d.reader_pos, e.to_string()))
}

pub fn save_mps(psi: &Mps, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mps_to_bytes(psi)).map_err(|e| Error::io(path, e))
}

pub fn load_mps(path: impl AsRef<Path>) -> Result<Mps> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    mps_from_bytes(&buf)
}

pub fn save_mpo(op: &Mpo, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mpo_to_bytes(op)).map_err(|e| Error::io(path, e))
}

pub fn load_mpo(path: impl AsRef<Path>) -> Result<Mpo> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    mpo_from_bytes(&buf)
}
