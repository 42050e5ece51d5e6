//! Grid types and binary PGM (P5) I/O.
//!
//! All grids are row-major with the origin at the top-left; coordinates are
//! `(row, col)`. Three value types share the same layout:
//!
//! * [`GrayImage`]: input intensity in `[0, 1]`, stored on disk as 8-bit PGM.
//! * [`ProbMask`]: per-pixel target confidence in `[0, 1]`, stored as 16-bit PGM
//!   with value `round(p * 65535)`.
//! * [`BinaryMask`]: `{0, 1}` labels, stored as 8-bit PGM with `{0, 255}`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::ZeroDimension { height, width });
    }
    if height.checked_mul(width) != Some(len) {
        return Err(Error::LengthMismatch {
            height,
            width,
            got: len,
        });
    }
    Ok(())
}

fn check_unit(data: &[f64]) -> Result<()> {
    match data
        .iter()
        .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
    {
        Some(index) => Err(Error::OutOfRange {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

/// Common read access for the real-valued grids.
pub trait UnitGrid: Sized + Clone {
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    fn as_slice(&self) -> &[f64];
    fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self>;

    fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }

    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn is_empty(&self) -> bool {
        self.as_slice().is_empty()
    }

    fn get(&self, row: usize, col: usize) -> f64 {
        self.as_slice()[row * self.width() + col]
    }
}

macro_rules! unit_grid {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            height: usize,
            width: usize,
            data: Vec<f64>,
        }

        impl $name {
            /// Builds the grid, rejecting NaN, infinities and values outside `[0, 1]`.
            pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
                check_dims(height, width, data.len())?;
                check_unit(&data)?;
                Ok(Self { height, width, data })
            }

            pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
                Self::new(height, width, vec![value; height.saturating_mul(width)])
            }

            pub fn from_fn(
                height: usize,
                width: usize,
                mut f: impl FnMut(usize, usize) -> f64,
            ) -> Result<Self> {
                let mut data = Vec::with_capacity(height.saturating_mul(width));
                for r in 0..height {
                    for c in 0..width {
                        data.push(f(r, c));
                    }
                }
                Self::new(height, width, data)
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn dims(&self) -> (usize, usize) {
                (self.height, self.width)
            }

            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.data
            }

            pub fn get(&self, row: usize, col: usize) -> f64 {
                self.data[row * self.width + col]
            }

            /// Largest value in the grid.
            pub fn max_value(&self) -> f64 {
                self.data.iter().copied().fold(0.0, f64::max)
            }
        }

        impl UnitGrid for $name {
            fn height(&self) -> usize {
                self.height
            }
            fn width(&self) -> usize {
                self.width
            }
            fn as_slice(&self) -> &[f64] {
                &self.data
            }
            fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
                Self::new(height, width, data)
            }
        }
    };
}

unit_grid!(
    /// Input intensity image with values in `[0, 1]`.
    GrayImage
);

unit_grid!(
    /// Per-pixel target confidence in `[0, 1]`, i.e. a network's output map.
    ProbMask
);

/// Grid of `{0, 1}` labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds a mask from `0`/`1` bytes; any other byte value is rejected.
    pub fn from_bits(height: usize, width: usize, bits: &[u8]) -> Result<Self> {
        check_dims(height, width, bits.len())?;
        let data = bits
            .iter()
            .enumerate()
            .map(|(index, &b)| match b {
                0 => Ok(false),
                1 => Ok(true),
                value => Err(Error::NotBinary { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![false; height.saturating_mul(width)])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height.saturating_mul(width));
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.data.iter().map(|&v| u8::from(v)).collect()
    }

    /// Pixel-wise union. Dimensions must agree.
    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        ensure_same_dims(self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a || b)
            .collect();
        BinaryMask::new(self.height, self.width, data)
    }

    /// True when every foreground pixel of `other` is also set here.
    pub fn contains(&self, other: &BinaryMask) -> Result<bool> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(self.data.iter().zip(&other.data).all(|(&a, &b)| a || !b))
    }
}

pub(crate) fn ensure_same_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

/// On-disk encoding of a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    Gray8,
    Gray16,
    Binary8,
}

impl RasterKind {
    pub fn maxval(self) -> u32 {
        match self {
            RasterKind::Gray8 | RasterKind::Binary8 => 255,
            RasterKind::Gray16 => 65535,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RasterKind::Gray8 => "gray8",
            RasterKind::Gray16 => "gray16",
            RasterKind::Binary8 => "binary8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub kind: RasterKind,
    pub height: usize,
    pub width: usize,
    pub maxval: u32,
}

/// A decoded raster, typed by the kind it was read as.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Gray(GrayImage),
    Prob(ProbMask),
    Binary(BinaryMask),
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

/// Parses a P5 header, returning `(width, height, maxval, payload offset)`.
fn parse_header(bytes: &[u8]) -> Result<(usize, usize, u32, usize)> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("magic is not P5".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "non-positive dimensions {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((width, height, maxval, cur.pos + 1)),
        _ => Err(Error::MalformedHeader(
            "missing separator after maxval".into(),
        )),
    }
}

/// Decodes a P5 byte buffer, interpreting it as `kind`.
pub fn decode_pgm(bytes: &[u8], kind: RasterKind) -> Result<Raster> {
    let (width, height, maxval, offset) = parse_header(bytes)?;
    if maxval != kind.maxval() {
        return Err(Error::MaxvalMismatch {
            kind: kind.name(),
            expected: kind.maxval(),
            found: maxval,
        });
    }
    let n = width * height;
    let sample = if maxval > 255 { 2 } else { 1 };
    let payload = &bytes[offset..];
    if payload.len() < n * sample {
        return Err(Error::Truncated {
            expected: n * sample,
            found: payload.len(),
        });
    }
    Ok(match kind {
        RasterKind::Gray8 => Raster::Gray(GrayImage::new(
            height,
            width,
            payload[..n].iter().map(|&v| f64::from(v) / 255.0).collect(),
        )?),
        RasterKind::Gray16 => Raster::Prob(ProbMask::new(
            height,
            width,
            payload[..2 * n]
                .chunks_exact(2)
                .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / 65535.0)
                .collect(),
        )?),
        RasterKind::Binary8 => Raster::Binary(BinaryMask::new(
            height,
            width,
            payload[..n].iter().map(|&v| v != 0).collect(),
        )?),
    })
}

/// Reads just the header of a PGM file.
pub fn read_header(path: &Path) -> Result<RasterHeader> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, maxval, _) = parse_header(&bytes)?;
    let kind = match maxval {
        255 => RasterKind::Gray8,
        65535 => RasterKind::Gray16,
        other => {
            return Err(Error::MalformedHeader(format!(
                "unsupported maxval {other}"
            )))
        }
    };
    Ok(RasterHeader {
        kind,
        height,
        width,
        maxval,
    })
}

pub fn read_mask(path: &Path, kind: RasterKind) -> Result<Raster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, kind)
}

fn header_bytes(width: usize, height: usize, maxval: u32) -> Vec<u8> {
    format!("P5\n{width} {height}\n{maxval}\n").into_bytes()
}

/// Anything that can be written as a PGM.
pub trait PgmEncode {
    fn encode_pgm(&self) -> Vec<u8>;
}

impl PgmEncode for ProbMask {
    fn encode_pgm(&self) -> Vec<u8> {
        let mut out = header_bytes(self.width, self.height, 65535);
        out.reserve(self.data.len() * 2);
        for &p in &self.data {
            out.extend_from_slice(&((p * 65535.0).round() as u16).to_be_bytes());
        }
        out
    }
}

impl PgmEncode for GrayImage {
    fn encode_pgm(&self) -> Vec<u8> {
        let mut out = header_bytes(self.width, self.height, 255);
        out.extend(self.data.iter().map(|&v| (v * 255.0).round() as u8));
        out
    }
}

impl PgmEncode for BinaryMask {
    fn encode_pgm(&self) -> Vec<u8> {
        let mut out = header_bytes(self.width, self.height, 255);
        out.extend(self.data.iter().map(|&v| if v { 255u8 } else { 0 }));
        out
    }
}

impl PgmEncode for Raster {
    fn encode_pgm(&self) -> Vec<u8> {
        match self {
            Raster::Gray(g) => g.encode_pgm(),
            Raster::Prob(p) => p.encode_pgm(),
            Raster::Binary(b) => b.encode_pgm(),
        }
    }
}

pub fn write_mask(mask: &impl PgmEncode, path: &Path) -> Result<()> {
    fs::write(path, mask.encode_pgm()).map_err(|e| Error::io(path, e))
}

impl ProbMask {
    pub fn read(path: &Path) -> Result<Self> {
        match read_mask(path, RasterKind::Gray16)? {
            Raster::Prob(p) => Ok(p),
            _ => unreachable!("gray16 decodes to a probability mask"),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_mask(self, path)
    }
}

impl BinaryMask {
    pub fn read(path: &Path) -> Result<Self> {
        match read_mask(path, RasterKind::Binary8)? {
            Raster::Binary(b) => Ok(b),
            _ => unreachable!("binary8 decodes to a binary mask"),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_mask(self, path)
    }
}

impl GrayImage {
    /// Reads an 8-bit or 16-bit PGM as an intensity image.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (_, _, maxval, _) = parse_header(&bytes)?;
        match decode_pgm(
            &bytes,
            if maxval == 65535 {
                RasterKind::Gray16
            } else {
                RasterKind::Gray8
            },
        )? {
            Raster::Gray(g) => Ok(g),
            Raster::Prob(p) => {
                let (h, w) = p.dims();
                GrayImage::new(h, w, p.into_vec())
            }
            Raster::Binary(_) => unreachable!(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_mask(self, path)
    }
}
