//! File formats: raw complex fields, mass logs, configs and potentials.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use effmass_core::grid::{Grid, WaveField};
use effmass_core::harness::{ExperimentConfig, PotentialSpec};
use effmass_core::C64;
use serde::de::DeserializeOwned;

/// Little-endian `d: u64`, `N: u64`, `X: f64`, then `N^d` interleaved
/// `(re, im)` pairs of `f64` in row-major order.
pub fn write_field(path: &Path, f: &WaveField) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 16 * f.data.len());
    buf.extend_from_slice(&(f.grid.dimension() as u64).to_le_bytes());
    buf.extend_from_slice(&(f.grid.points() as u64).to_le_bytes());
    buf.extend_from_slice(&f.grid.length().to_le_bytes());
    for z in &f.data {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut file| file.write_all(&buf))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_field(path: &Path) -> Result<WaveField> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut file| file.read_to_end(&mut bytes))
        .with_context(|| format!("reading {}", path.display()))?;
    decode_field(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn word(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().expect("eight bytes")
}

pub fn decode_field(bytes: &[u8]) -> Result<WaveField> {
    if bytes.len() < 24 {
        bail!("header needs 24 bytes, got {}", bytes.len());
    }
    let d = u64::from_le_bytes(word(bytes, 0)) as usize;
    let n = u64::from_le_bytes(word(bytes, 8)) as usize;
    let length = f64::from_le_bytes(word(bytes, 16));
    let grid = Grid::new(d, n, length)?;
    let want = 24 + 16 * grid.len();
    if bytes.len() != want {
        bail!("expected {want} bytes for d = {d}, N = {n}, got {}", bytes.len());
    }
    let data = bytes[24..]
        .chunks_exact(16)
        .map(|c| C64::new(f64::from_le_bytes(word(c, 0)), f64::from_le_bytes(word(c, 8))))
        .collect();
    Ok(WaveField::new(grid, 0.0, data)?)
}

pub fn mass_log_csv(log: &[(f64, f64)]) -> String {
    let mut out = String::from("t,mass_error\n");
    for (t, m) in log {
        out.push_str(&format!("{t},{m:e}\n"));
    }
    out
}

/// TOML when the extension says so, JSON otherwise.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    load(path)
}

pub fn load_potential(path: &Path) -> Result<PotentialSpec> {
    load(path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}
