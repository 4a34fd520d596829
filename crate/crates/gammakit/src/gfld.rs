//! GFLD binary field container.
//!
//! Layout: the bytes `GFLD`, a little-endian `u32` version (1), a little-endian `u64` header
//! length, a UTF-8 JSON header, then `points · m` little-endian complex128 values with the
//! component index fastest, then axis 0.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use gammakit_core::{Block, Field, Grid, Layout, Space, C64};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

const MAGIC: &[u8; 4] = b"GFLD";
const VERSION: u32 = 1;
const DTYPE: &str = "c128le";
const ORDER: &str = "component index fastest, then axis 0 fastest";
/// Headers beyond this size are rejected before allocation.
const MAX_HEADER: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub dim: usize,
    pub samples: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutHeader {
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub grid: GridHeader,
    pub layout: LayoutHeader,
    pub space: Space,
    pub dtype: String,
    pub order: String,
}

impl Header {
    pub fn of(field: &Field) -> Header {
        let g = field.grid();
        Header {
            grid: GridHeader { dim: g.dim(), samples: g.samples().to_vec(), lengths: g.lengths().to_vec() },
            layout: LayoutHeader { blocks: field.layout().blocks().to_vec() },
            space: field.space(),
            dtype: DTYPE.to_string(),
            order: ORDER.to_string(),
        }
    }
}

pub fn write<W: Write>(mut w: W, field: &Field) -> std::io::Result<()> {
    let header = serde_json::to_vec(&Header::of(field)).map_err(std::io::Error::other)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read<R: Read>(mut r: R) -> Result<Field> {
    let fmt = |e: std::io::Error| Error::Format(format!("truncated stream ({e})"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(fmt)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(fmt)?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut long = [0u8; 8];
    r.read_exact(&mut long).map_err(fmt)?;
    let hlen = u64::from_le_bytes(long);
    if hlen > MAX_HEADER {
        return Err(Error::Format(format!("header length {hlen} exceeds {MAX_HEADER}")));
    }
    let mut hbytes = vec![0u8; hlen as usize];
    r.read_exact(&mut hbytes).map_err(fmt)?;
    let header: Header = serde_json::from_slice(&hbytes).map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.order != ORDER {
        return Err(Error::Format(format!("unsupported order {:?}", header.order)));
    }
    if header.grid.samples.len() != header.grid.dim {
        return Err(Error::Format(format!("dim {} with {} sample counts", header.grid.dim, header.grid.samples.len())));
    }
    let grid = Grid::new(&header.grid.samples, &header.grid.lengths)?;
    let layout = Layout::new(grid.dim(), header.layout.blocks)?;
    let count = grid.points() * layout.m();
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(fmt)?;
    if payload.len() != 16 * count {
        return Err(Error::Format(format!("payload has {} bytes, expected {}", payload.len(), 16 * count)));
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    Ok(Field::new(&grid, &layout, header.space, values)?)
}

pub fn write_file(path: &Path, field: &Field) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    write(&mut w, field).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_file(path: &Path) -> Result<Field> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    read(std::io::BufReader::new(file))
}
