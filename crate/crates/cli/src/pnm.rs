//! PGM input (P2 and P5) and PPM output (P6).

use crate::error::{CliError, CliResult};

/// Fixed false-color palette; label `k` uses entry `k % 12`.
pub const PALETTE: [[u8; 3]; 12] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [170, 110, 40],
];

/// Grayscale image with samples scaled to `[0,1]` by the max value.
#[derive(Debug, Clone, PartialEq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> CliResult<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::Input(format!("PGM: missing or invalid {what}")))
    }
}

pub fn read_pgm(bytes: &[u8]) -> CliResult<Graymap> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => {
            return Err(CliError::Input(
                "unsupported image format: expected a P2 or P5 graymap".into(),
            ))
        }
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("max value")?;
    if width == 0 || height == 0 {
        return Err(CliError::Input("PGM: zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::Input(format!("PGM: max value {maxval} outside 1..=65535")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| CliError::Input("PGM: image dimensions overflow".into()))?;
    let scale = maxval as f64;
    let mut samples = Vec::with_capacity(count.min(1 << 24));
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = h.pos + 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| CliError::Input(format!("PGM: raster truncated, expected {need} bytes")))?;
        if wide {
            samples.extend(raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize));
        } else {
            samples.extend(raster.iter().map(|&b| b as usize));
        }
    } else {
        for k in 0..count {
            samples.push(h.number(&format!("sample {}", k + 1))?);
        }
    }
    if let Some(k) = samples.iter().position(|&s| s > maxval) {
        return Err(CliError::Input(format!("PGM: sample {} exceeds max value {maxval}", k + 1)));
    }
    Ok(Graymap {
        width,
        height,
        pixels: samples.into_iter().map(|s| s as f64 / scale).collect(),
    })
}

/// Binary graymap with max value 255; intensities are rounded.
pub fn write_pgm(width: usize, height: usize, pixels: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

/// False-color P6 image of a label grid.
pub fn write_ppm(width: usize, height: usize, labels: &[usize]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for &l in labels {
        out.extend_from_slice(&PALETTE[l % PALETTE.len()]);
    }
    out
}
