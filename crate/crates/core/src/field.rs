//! Complex samples on the spatial grid and their binary file format.
//!
//! File layout (all little-endian): magic `FGCF`, `u32` version, `u32` dim,
//! `dim` × `u32` per-axis counts, `f64` ε, then `lo, hi` as `f64` per axis,
//! followed by the row-major samples as interleaved `re, im` `f64` pairs.

use crate::error::{FggcError, Result};
use crate::mesh::MeshSpec;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

pub const FIELD_MAGIC: &[u8; 4] = b"FGCF";
pub const FIELD_VERSION: u32 = 1;

/// Row-major complex samples (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub shape: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(shape: &[usize]) -> Self {
        ComplexField { shape: shape.to_vec(), data: vec![Complex64::new(0.0, 0.0); shape.iter().product()] }
    }

    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(mesh: &MeshSpec, mut f: F) -> Self {
        let mut out = Self::zeros(&mesh.nx);
        let mut x = vec![0.0; mesh.dim];
        for (flat, v) in out.data.iter_mut().enumerate() {
            let mut rem = flat;
            for a in (0..mesh.dim).rev() {
                x[a] = mesh.x(a, rem % mesh.nx[a]);
                rem /= mesh.nx[a];
            }
            *v = f(&x);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `sqrt(Δx^d Σ |u|²)`.
    pub fn l2_norm(&self, dx: f64) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        (s * dx.powi(self.shape.len() as i32)).sqrt()
    }

    pub fn check_mesh(&self, mesh: &MeshSpec) -> Result<()> {
        if self.shape != mesh.nx {
            return Err(FggcError::GridMismatch(format!(
                "field shape {:?} does not match mesh grid {:?}",
                self.shape, mesh.nx
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldHeader {
    pub shape: Vec<usize>,
    pub epsilon: f64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
}

impl FieldHeader {
    pub fn from_mesh(mesh: &MeshSpec) -> Self {
        FieldHeader {
            shape: mesh.nx.clone(),
            epsilon: mesh.epsilon,
            domain_lo: mesh.domain_lo.clone(),
            domain_hi: mesh.domain_hi.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Grid spacing recovered from the header (uniform across axes).
    pub fn dx(&self) -> f64 {
        (self.domain_hi[0] - self.domain_lo[0]) / self.shape[0] as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub header: FieldHeader,
    pub field: ComplexField,
}

impl FieldFile {
    pub fn new(mesh: &MeshSpec, field: ComplexField) -> Result<Self> {
        field.check_mesh(mesh)?;
        Ok(FieldFile { header: FieldHeader::from_mesh(mesh), field })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let h = &self.header;
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&FIELD_VERSION.to_le_bytes())?;
        w.write_all(&(h.dim() as u32).to_le_bytes())?;
        for &n in &h.shape {
            let n = u32::try_from(n).map_err(|_| FggcError::Format(format!("axis length {n} exceeds u32")))?;
            w.write_all(&n.to_le_bytes())?;
        }
        w.write_all(&h.epsilon.to_le_bytes())?;
        for a in 0..h.dim() {
            w.write_all(&h.domain_lo[a].to_le_bytes())?;
            w.write_all(&h.domain_hi[a].to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.field.len() * 16);
        for z in &self.field.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(FggcError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FIELD_VERSION {
            return Err(FggcError::Format(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        if !(1..=3).contains(&dim) {
            return Err(FggcError::Format(format!("dimension {dim} not in 1..=3")));
        }
        let shape = (0..dim).map(|_| read_u32(&mut r).map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
        let epsilon = read_f64(&mut r)?;
        let mut domain_lo = Vec::with_capacity(dim);
        let mut domain_hi = Vec::with_capacity(dim);
        for _ in 0..dim {
            domain_lo.push(read_f64(&mut r)?);
            domain_hi.push(read_f64(&mut r)?);
        }
        let n: usize = shape.iter().product();
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != 16 * n {
            return Err(FggcError::Format(format!("payload is {} bytes, expected {}", payload.len(), 16 * n)));
        }
        let data = payload
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(FieldFile {
            header: FieldHeader { shape: shape.clone(), epsilon, domain_lo, domain_hi },
            field: ComplexField { shape, data },
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let mesh = MeshSpec::recommended(2, 0.25, 1e-3).validate().unwrap();
        let field = ComplexField::from_fn(&mesh, |x| Complex64::new(x[0], x[1]));
        let mut buf = Vec::new();
        FieldFile::new(&mesh, field).unwrap().write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"FGCF");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(buf[20..28].try_into().unwrap()), 0.25);
        assert_eq!(buf.len(), 28 + 32 + 16 * 256);
        // first sample is (lo, lo), second (lo, lo + dx)
        let off = 28 + 32;
        assert_eq!(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()), -2.0);
        assert_eq!(f64::from_le_bytes(buf[off + 24..off + 32].try_into().unwrap()), -1.75);
    }

    #[test]
    fn rejects_truncated_payload() {
        let mesh = MeshSpec::recommended(1, 0.25, 1e-3).validate().unwrap();
        let mut buf = Vec::new();
        FieldFile::new(&mesh, ComplexField::zeros(&mesh.nx)).unwrap().write_to(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(FieldFile::read_from(&buf[..]), Err(FggcError::Format(_))));
        buf[0] = b'X';
        assert!(FieldFile::read_from(&buf[..]).is_err());
    }
}
