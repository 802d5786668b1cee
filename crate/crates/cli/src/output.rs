//! Artifact writers.
//!
//! Binary slices are one file: the 8-byte magic `MTSLICE1`, the header
//! length as a little-endian `u64`, the JSON header
//! `{grid, particles, spin_dims, time_tuple}`, then every amplitude as two
//! little-endian `f64` (re, im) in grid-function order (particle 1's site
//! index most significant, spin index fastest).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use multitime::lattice::{Grid, GridFunction};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SLICE_MAGIC: &[u8; 8] = b"MTSLICE1";

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SliceHeader {
    pub grid: Grid,
    pub particles: usize,
    pub spin_dims: Vec<usize>,
    pub time_tuple: Vec<f64>,
}

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::io(self.dir.join(name), std::io::Error::other(e)))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with the header taken from the row type's field names.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let path = self.dir.join(name);
        let err = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(&path, std::io::Error::other(e.to_string())))?;
        self.write_bytes(name, &bytes)
    }

    /// CSV with an explicit header, for tables whose width depends on the
    /// input.
    pub fn csv_records(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let err = |e: csv::Error| CliError::io(&path, std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(&path, std::io::Error::other(e.to_string())))?;
        self.write_bytes(name, &bytes)
    }

    pub fn slice(&mut self, name: &str, psi: &GridFunction, time_tuple: &[f64]) -> Result<()> {
        let header = SliceHeader {
            grid: psi.grid.clone(),
            particles: psi.n_particles,
            spin_dims: psi.spin_dims.clone(),
            time_tuple: time_tuple.to_vec(),
        };
        let head = serde_json::to_vec(&header)
            .map_err(|e| CliError::io(self.dir.join(name), std::io::Error::other(e)))?;
        let mut bytes = Vec::with_capacity(16 + head.len() + 16 * psi.values.len());
        bytes.write_all(SLICE_MAGIC).expect("write to Vec");
        bytes.write_all(&(head.len() as u64).to_le_bytes()).expect("write to Vec");
        bytes.write_all(&head).expect("write to Vec");
        for z in &psi.values {
            bytes.write_all(&z.re.to_le_bytes()).expect("write to Vec");
            bytes.write_all(&z.im.to_le_bytes()).expect("write to Vec");
        }
        self.write_bytes(name, &bytes)
    }
}

/// Parses a slice file back into its header and amplitudes.
pub fn read_slice(path: &Path) -> Result<(SliceHeader, Vec<multitime::C64>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: &str| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()));
    if bytes.len() < 16 || &bytes[..8] != SLICE_MAGIC {
        return Err(bad("not a slice file"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16 + len).ok_or_else(|| bad("truncated header"))?;
    let header: SliceHeader = serde_json::from_slice(body).map_err(|_| bad("malformed header"))?;
    let data = &bytes[16 + len..];
    if data.len() % 16 != 0 {
        return Err(bad("truncated amplitude data"));
    }
    let values = data
        .chunks_exact(16)
        .map(|c| {
            multitime::C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((header, values))
}
