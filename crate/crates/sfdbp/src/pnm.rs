//! Binary PGM (P5, 8/16-bit) and grayscale PFM (32-bit float) readers
//! and writers.
//!
//! PFM stores rows bottom-to-top with a signed scale whose sign encodes
//! endianness; we write little-endian (`-1.0`). Floats round-trip
//! bit-exactly at f32 precision, 16-bit PGM round-trips label maps
//! exactly.

use std::fs;
use std::path::Path;

use sfd_core::{GrayImage, GroundTruthDepth};

use crate::error::{CliError, Result};

/// Raw integer raster as stored in a PGM file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

impl Pgm {
    pub fn new(width: usize, height: usize, maxval: u16, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(CliError::Runtime(format!(
                "pgm data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if maxval == 0 {
            return Err(CliError::Runtime("pgm maxval must be positive".into()));
        }
        if data.iter().any(|v| *v > maxval) {
            return Err(CliError::Runtime("pgm sample exceeds maxval".into()));
        }
        Ok(Self {
            width,
            height,
            maxval,
            data,
        })
    }

    /// Quantizes a `[0, 1]` image to the given maxval.
    pub fn from_gray(img: &GrayImage, maxval: u16) -> Self {
        let m = maxval as f64;
        let data = img
            .as_slice()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * m).round() as u16)
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            maxval,
            data,
        }
    }

    /// Normalizes samples by maxval into a `[0, 1]` image.
    pub fn to_gray(&self) -> GrayImage {
        let m = self.maxval as f64;
        let data = self.data.iter().map(|v| *v as f64 / m).collect();
        GrayImage::new(self.width, self.height, data).expect("pgm samples are finite")
    }
}

/// Skips PNM whitespace and `#` comments, then parses one ASCII integer.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(CliError::Runtime("malformed pgm header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Runtime("malformed pgm header".into()))
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| CliError::io("reading", path, e))?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(CliError::Runtime(format!(
            "{} is not a binary (P5) PGM file",
            path.display()
        )));
    }
    let mut pos = 2;
    let width = next_token(&bytes, &mut pos)?;
    let height = next_token(&bytes, &mut pos)?;
    let maxval = next_token(&bytes, &mut pos)?;
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::Runtime(format!(
            "unsupported pgm maxval {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let n = width * height;
    let wide = maxval > 255;
    let need = n * if wide { 2 } else { 1 };
    if bytes.len() < pos + need {
        return Err(CliError::Runtime(format!(
            "{} truncated: need {need} raster bytes",
            path.display()
        )));
    }
    let raster = &bytes[pos..pos + need];
    let data = if wide {
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster.iter().map(|b| *b as u16).collect()
    };
    Pgm::new(width, height, maxval as u16, data)
}

pub fn write_pgm(path: &Path, pgm: &Pgm) -> Result<()> {
    let mut out = format!("P5\n{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).into_bytes();
    if pgm.maxval > 255 {
        for v in &pgm.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(pgm.data.iter().map(|v| *v as u8));
    }
    fs::write(path, out).map_err(|e| CliError::io("writing", path, e))
}

pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io("reading", path, e))?;
    let header_end = bytes
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_ascii_whitespace())
        .nth(3)
        .map(|(i, _)| i + 1)
        .ok_or_else(|| CliError::Runtime("malformed pfm header".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| CliError::Runtime("malformed pfm header".into()))?;
    let mut it = header.split_ascii_whitespace();
    let magic = it.next().unwrap_or("");
    if magic != "Pf" {
        return Err(CliError::Runtime(format!(
            "{} is not a grayscale (Pf) PFM file",
            path.display()
        )));
    }
    let width: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Runtime("malformed pfm width".into()))?;
    let height: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Runtime("malformed pfm height".into()))?;
    let scale: f32 = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Runtime("malformed pfm scale".into()))?;
    let little_endian = scale < 0.0;
    let n = width * height;
    if bytes.len() < header_end + 4 * n {
        return Err(CliError::Runtime(format!(
            "{} truncated: need {} raster bytes",
            path.display(),
            4 * n
        )));
    }
    let raster = &bytes[header_end..header_end + 4 * n];
    let mut rows: Vec<f32> = raster
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    // PFM rows are stored bottom-to-top
    let mut data = Vec::with_capacity(n);
    for y in (0..height).rev() {
        data.extend_from_slice(&rows[y * width..(y + 1) * width]);
    }
    rows.clear();
    Ok((width, height, data))
}

pub fn write_pfm(path: &Path, width: usize, height: usize, data: &[f32]) -> Result<()> {
    if data.len() != width * height {
        return Err(CliError::Runtime(format!(
            "pfm data length {} does not match {width}x{height}",
            data.len()
        )));
    }
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    for y in (0..height).rev() {
        for v in &data[y * width..(y + 1) * width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| CliError::io("writing", path, e))
}

/// Reads an observation image by extension: `.pgm` normalized by maxval,
/// `.pfm` as raw floats.
pub fn read_image(path: &Path) -> Result<GrayImage> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => Ok(read_pgm(path)?.to_gray()),
        Some("pfm") => {
            let (w, h, data) = read_pfm(path)?;
            GrayImage::new(w, h, data.into_iter().map(f64::from).collect()).map_err(CliError::from)
        }
        other => Err(CliError::Config(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

pub fn write_depth_pfm(path: &Path, width: usize, height: usize, depths: &[f64]) -> Result<()> {
    let data: Vec<f32> = depths.iter().map(|d| *d as f32).collect();
    write_pfm(path, width, height, &data)
}

pub fn read_depth_pfm(path: &Path) -> Result<GroundTruthDepth> {
    let (w, h, data) = read_pfm(path)?;
    GroundTruthDepth::new(w, h, data.into_iter().map(f64::from).collect()).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pgm8_roundtrip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let pgm = Pgm::new(3, 2, 255, vec![0, 17, 255, 128, 1, 99]).unwrap();
        write_pgm(&p, &pgm).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), pgm);
    }

    #[test]
    fn pgm16_roundtrip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let pgm = Pgm::new(2, 2, 65535, vec![0, 65535, 300, 12345]).unwrap();
        write_pgm(&p, &pgm).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), pgm);
    }

    #[test]
    fn pfm_roundtrip_bit_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.pfm");
        let data = vec![0.0f32, -1.5, 3.25e-7, 1.0e12, f32::MIN_POSITIVE, 0.1];
        write_pfm(&p, 3, 2, &data).unwrap();
        let (w, h, back) = read_pfm(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pgm_rejects_garbage() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        std::fs::write(&p, b"P6\n2 2\n255\nxxxx").unwrap();
        assert!(read_pgm(&p).is_err());
        std::fs::write(&p, b"P5\n9 9\n255\nshort").unwrap();
        assert!(read_pgm(&p).is_err());
    }

    #[test]
    fn pgm_header_comments() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.pgm");
        std::fs::write(&p, b"P5\n# a comment\n2 1\n255\n\x07\x09").unwrap();
        let pgm = read_pgm(&p).unwrap();
        assert_eq!(pgm.data, vec![7, 9]);
    }
}
