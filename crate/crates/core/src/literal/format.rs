//! `LEB1` binary layout (all little-endian):
//!
//! ```text
//! "LEB1" | u32 version = 1 | u32 dim | u64 count
//! count × ( u8 kind (0 entity, 1 relation) | u32 name_len | name bytes | dim × f32 )
//! ```
//!
//! A TSV debug form is also read: `E|R ⇥ name ⇥ space-separated floats`.

use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LEB1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    Entity,
    Relation,
}

impl LiteralKind {
    fn code(self) -> u8 {
        match self {
            LiteralKind::Entity => 0,
            LiteralKind::Relation => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralRecord {
    pub kind: LiteralKind,
    pub name: String,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiteralRecords {
    pub dim: usize,
    pub records: Vec<LiteralRecord>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, format!("truncated at byte {} (wanted {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn parse_binary(bytes: &[u8], path: &Path) -> Result<LiteralRecords> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take(4)? != MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let dim = c.u32()? as usize;
    if dim == 0 {
        return Err(Error::format(path, "zero literal dimension"));
    }
    let count = c.u64()?;
    let mut records = Vec::new();
    for i in 0..count {
        let kind = match c.u8()? {
            0 => LiteralKind::Entity,
            1 => LiteralKind::Relation,
            k => return Err(Error::format(path, format!("record {i}: unknown kind {k}"))),
        };
        let len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(len)?)
            .map_err(|_| Error::format(path, format!("record {i}: name is not UTF-8")))?
            .to_owned();
        let raw = c.take(dim * 4)?;
        let vector = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
        records.push(LiteralRecord { kind, name, vector });
    }
    if c.pos != bytes.len() {
        return Err(Error::format(path, format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(LiteralRecords { dim, records })
}

fn parse_tsv(text: &str, path: &Path) -> Result<LiteralRecords> {
    let mut dim = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let kind = match fields[0].trim() {
            "E" => LiteralKind::Entity,
            "R" => LiteralKind::Relation,
            other => return Err(err(format!("kind must be E or R, got `{other}`"))),
        };
        let vector = fields[2]
            .split_whitespace()
            .map(|v| v.parse::<f32>().map_err(|e| err(format!("bad float `{v}`: {e}"))))
            .collect::<Result<Vec<f32>>>()?;
        match dim {
            None if vector.is_empty() => return Err(err("empty vector".into())),
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(err(format!("vector has {} values, earlier records have {d}", vector.len())))
            }
            Some(_) => {}
        }
        records.push(LiteralRecord { kind, name: fields[1].trim().to_owned(), vector });
    }
    let dim = dim.ok_or_else(|| Error::format(path, "no literal records"))?;
    Ok(LiteralRecords { dim, records })
}

/// Reads either format; binary is recognised by its magic bytes.
pub fn read_literal_records(path: &Path) -> Result<LiteralRecords> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        return parse_binary(&bytes, path);
    }
    if bytes.starts_with(b"LEB") {
        return Err(Error::format(path, "bad magic"));
    }
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::format(path, "neither LEB1 nor UTF-8 TSV"))?;
    parse_tsv(text, path)
}

pub fn encode_literal_records(dim: usize, records: &[LiteralRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(20 + records.len() * (9 + dim * 4));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let dim32 = u32::try_from(dim).map_err(|_| Error::Data(format!("dimension {dim} too large")))?;
    buf.extend_from_slice(&dim32.to_le_bytes());
    buf.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        if r.vector.len() != dim {
            return Err(Error::Shape(format!(
                "record `{}` has {} values, file dimension is {dim}",
                r.name,
                r.vector.len()
            )));
        }
        buf.push(r.kind.code());
        buf.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(r.name.as_bytes());
        for v in &r.vector {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn write_literal_records(path: &Path, dim: usize, records: &[LiteralRecord]) -> Result<()> {
    let buf = encode_literal_records(dim, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_literal_tsv(path: &Path, records: &[LiteralRecord]) -> Result<()> {
    let mut s = String::new();
    for r in records {
        s.push_str(match r.kind {
            LiteralKind::Entity => "E",
            LiteralKind::Relation => "R",
        });
        s.push('\t');
        s.push_str(&r.name);
        s.push('\t');
        let vals: Vec<String> = r.vector.iter().map(|v| v.to_string()).collect();
        s.push_str(&vals.join(" "));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(kind: LiteralKind, name: &str, v: &[f32]) -> LiteralRecord {
        LiteralRecord { kind, name: name.into(), vector: v.to_vec() }
    }

    #[test]
    fn binary_layout() {
        let recs = [rec(LiteralKind::Relation, "r", &[1.0, -2.0])];
        let b = encode_literal_records(2, &recs).unwrap();
        assert_eq!(&b[0..4], b"LEB1");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(&b[12..20], &1u64.to_le_bytes());
        assert_eq!(b[20], 1);
        assert_eq!(&b[21..25], &1u32.to_le_bytes());
        assert_eq!(b[25], b'r');
        assert_eq!(&b[26..30], &1.0f32.to_le_bytes());
        assert_eq!(&b[30..34], &(-2.0f32).to_le_bytes());
        assert_eq!(b.len(), 34);
    }

    #[test]
    fn binary_and_tsv_read_back() {
        let recs = vec![
            rec(LiteralKind::Entity, "stack", &[0.5, 0.25, -1.0]),
            rec(LiteralKind::Relation, "dependency", &[1.0, 2.0, 3.0]),
        ];
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("l.leb");
        let tsv = dir.path().join("l.tsv");
        write_literal_records(&bin, 3, &recs).unwrap();
        write_literal_tsv(&tsv, &recs).unwrap();
        let a = read_literal_records(&bin).unwrap();
        let b = read_literal_records(&tsv).unwrap();
        assert_eq!(a.records, recs);
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_version_and_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        let mut b = encode_literal_records(1, &[]).unwrap();
        b[4] = 2;
        std::fs::write(&p, &b).unwrap();
        assert!(matches!(read_literal_records(&p), Err(Error::Format { .. })));
        b[3] = b'2';
        std::fs::write(&p, &b).unwrap();
        assert!(matches!(read_literal_records(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_binary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        let b = encode_literal_records(2, &[rec(LiteralKind::Entity, "a", &[1.0, 2.0])]).unwrap();
        std::fs::write(&p, &b[..b.len() - 1]).unwrap();
        assert!(read_literal_records(&p).is_err());
    }

    #[test]
    fn tsv_dimension_disagreement() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tsv");
        std::fs::write(&p, "E\ta\t1 2\nE\tb\t1 2 3\n").unwrap();
        assert!(matches!(read_literal_records(&p), Err(Error::Parse { line: 2, .. })));
    }
}
