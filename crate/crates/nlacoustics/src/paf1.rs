//! "PAF1" field snapshot files: a one-line JSON header followed by the raw
//! little-endian `f64` value block.
//!
//! ```text
//! {"format":"PAF1","axes":[...],"frame":"kzk","components":1,"count":64,"byte_order":"little-endian","scalar":"f64"}\n
//! <count × 8 bytes>
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Field, Frame, Grid};

const MAGIC: &str = "PAF1";
const BYTE_ORDER: &str = "little-endian";
const SCALAR: &str = "f64";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    axes: Vec<Axis>,
    frame: Frame,
    components: usize,
    count: usize,
    byte_order: String,
    scalar: String,
}

/// Serializes `field` into any writer.
pub fn write_to(field: &Field, mut w: impl Write) -> Result<()> {
    let header = Header {
        format: MAGIC.into(),
        axes: field.grid().axes().to_vec(),
        frame: field.grid().frame(),
        components: field.components(),
        count: field.values().len(),
        byte_order: BYTE_ORDER.into(),
        scalar: SCALAR.into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Parses a field from any reader.
pub fn read_from(r: impl Read) -> Result<Field> {
    let mut r = BufReader::new(r);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header terminator".into()));
    }
    let header: Header = serde_json::from_slice(&line[..line.len() - 1])?;
    if header.format != MAGIC || header.byte_order != BYTE_ORDER || header.scalar != SCALAR {
        return Err(Error::Format(format!(
            "unsupported header ({}, {}, {})",
            header.format, header.byte_order, header.scalar
        )));
    }
    let grid = Grid::new(header.axes, header.frame)?;
    if header.count != grid.len() * header.components {
        return Err(Error::Format("value count does not match grid".into()));
    }
    let mut bytes = Vec::with_capacity(header.count * 8);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.count * 8 {
        return Err(Error::Format(format!("expected {} payload bytes, found {}", header.count * 8, bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Field::new(grid, header.components, values)
}

/// Writes `field` to `path`.
pub fn write_file(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_to(field, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Reads a field from `path`.
pub fn read_file(path: impl AsRef<Path>) -> Result<Field> {
    read_from(std::fs::File::open(path)?)
}
