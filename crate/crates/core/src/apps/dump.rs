//! Writing per-vertex result arrays to disk.
//!
//! Text: one value per line, vertex order. Binary: the 8-byte magic
//! `RSARRAY1`, one kind byte (0 = u32, 1 = i32, 2 = f64), the element count
//! as a little-endian u64, then the elements little-endian.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

pub const MAGIC: &[u8; 8] = b"RSARRAY1";

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad dump file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Text,
    Binary,
}

impl FromStr for DumpFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(DumpFormat::Text),
            "binary" => Ok(DumpFormat::Binary),
            other => Err(format!("unknown dump format {other:?} (expected text or binary)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    U32,
    I32,
    F64,
}

impl Kind {
    fn tag(self) -> u8 {
        match self {
            Kind::U32 => 0,
            Kind::I32 => 1,
            Kind::F64 => 2,
        }
    }

    fn from_tag(t: u8) -> Option<Kind> {
        match t {
            0 => Some(Kind::U32),
            1 => Some(Kind::I32),
            2 => Some(Kind::F64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Array {
    U32(Vec<u32>),
    I32(Vec<i32>),
    F64(Vec<f64>),
}

impl Array {
    pub fn kind(&self) -> Kind {
        match self {
            Array::U32(_) => Kind::U32,
            Array::I32(_) => Kind::I32,
            Array::F64(_) => Kind::F64,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Array::U32(v) => v.len(),
            Array::I32(v) => v.len(),
            Array::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn write_array(path: &Path, data: &Array, format: DumpFormat) -> Result<(), DumpError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    match format {
        DumpFormat::Text => match data {
            Array::U32(v) => v.iter().try_for_each(|x| writeln!(w, "{x}"))?,
            Array::I32(v) => v.iter().try_for_each(|x| writeln!(w, "{x}"))?,
            // `{:?}` prints the shortest string that reads back exactly
            Array::F64(v) => v.iter().try_for_each(|x| writeln!(w, "{x:?}"))?,
        },
        DumpFormat::Binary => {
            w.write_all(MAGIC)?;
            w.write_all(&[data.kind().tag()])?;
            w.write_all(&(data.len() as u64).to_le_bytes())?;
            match data {
                Array::U32(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                Array::I32(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
                Array::F64(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump. Text files carry no kind, so `kind` says how to parse them;
/// for binary files it must match the stored kind.
pub fn read_array(path: &Path, format: DumpFormat, kind: Kind) -> Result<Array, DumpError> {
    match format {
        DumpFormat::Text => read_text(path, kind),
        DumpFormat::Binary => {
            let bytes = fs::read(path)?;
            let a = decode_binary(&bytes)?;
            if a.kind() != kind {
                return Err(DumpError::Format(format!(
                    "stored kind {:?}, expected {kind:?}",
                    a.kind()
                )));
            }
            Ok(a)
        }
    }
}

fn read_text(path: &Path, kind: Kind) -> Result<Array, DumpError> {
    fn parse<T: FromStr>(lines: &[String]) -> Result<Vec<T>, DumpError> {
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse()
                    .map_err(|_| DumpError::Format(format!("line {}: cannot parse {l:?}", i + 1)))
            })
            .collect()
    }
    let lines: Vec<String> = BufReader::new(fs::File::open(path)?)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .collect::<Result<_, _>>()?;
    Ok(match kind {
        Kind::U32 => Array::U32(parse(&lines)?),
        Kind::I32 => Array::I32(parse(&lines)?),
        Kind::F64 => Array::F64(parse(&lines)?),
    })
}

pub fn decode_binary(bytes: &[u8]) -> Result<Array, DumpError> {
    if bytes.len() < 17 || &bytes[..8] != MAGIC {
        return Err(DumpError::Format("missing RSARRAY1 header".into()));
    }
    let kind = Kind::from_tag(bytes[8]).ok_or_else(|| DumpError::Format(format!("unknown kind byte {}", bytes[8])))?;
    let count = u64::from_le_bytes(bytes[9..17].try_into().unwrap());
    let body = &bytes[17..];
    let width = if kind == Kind::F64 { 8 } else { 4 };
    let expected = count.checked_mul(width).filter(|&n| n == body.len() as u64);
    if expected.is_none() {
        return Err(DumpError::Format(format!(
            "header says {count} elements of {width} bytes, body has {} bytes",
            body.len()
        )));
    }
    Ok(match kind {
        Kind::U32 => Array::U32(
            body.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Kind::I32 => Array::I32(
            body.chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        Kind::F64 => Array::F64(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    })
}
