//! 8-bit grayscale rasters and PGM (P2/P5) encoding.
//!
//! Pixels are stored row-major with a top-left origin, which is the sample
//! order of the Netpbm format. Every other module uses the same convention.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported PGM maxval {0} (must be <= 255)")]
    UnsupportedMaxval(u32),
    #[error("invalid image dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
}

/// An 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImageError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A `width` x `height` image filled with `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Pixel at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// PGM sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmVariant {
    /// `P2`, whitespace-separated decimal samples.
    Ascii,
    /// `P5`, one byte per sample.
    Binary,
}

/// Header tokenizer: skips whitespace and `#` comments running to end of line.
struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len()
            && !self.data[self.pos].is_ascii_whitespace()
            && self.data[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.data[start..self.pos])
    }

    fn header_number(&mut self, what: &str) -> Result<u32, ImageError> {
        let tok = self
            .token()
            .ok_or_else(|| ImageError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                ImageError::MalformedHeader(format!(
                    "non-numeric {what} {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

/// Decodes a P2 or P5 PGM file.
///
/// Samples are stored as-is when `maxval < 255`; no rescaling is applied.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut cur = Cursor {
        data: bytes,
        pos: 0,
    };
    let variant = match bytes.get(..2) {
        Some(b"P2") => PgmVariant::Ascii,
        Some(b"P5") => PgmVariant::Binary,
        _ => return Err(ImageError::MalformedHeader("bad magic number".into())),
    };
    cur.pos = 2;
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(ImageError::MalformedHeader("bad magic number".into()));
    }

    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 {
        return Err(ImageError::MalformedHeader("maxval 0".into()));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| ImageError::MalformedHeader("dimensions overflow".into()))?;

    let pixels = match variant {
        PgmVariant::Binary => {
            // exactly one whitespace byte separates maxval from the raster
            let start = cur.pos + 1;
            let available = bytes.len().saturating_sub(start);
            if available < expected {
                return Err(ImageError::TruncatedData {
                    expected,
                    found: available,
                });
            }
            bytes[start..start + expected].to_vec()
        }
        PgmVariant::Ascii => {
            let mut pixels = Vec::with_capacity(expected);
            while pixels.len() < expected {
                let Some(tok) = cur.token() else {
                    return Err(ImageError::TruncatedData {
                        expected,
                        found: pixels.len(),
                    });
                };
                let value = std::str::from_utf8(tok)
                    .ok()
                    .and_then(|s| s.parse::<u32>().ok())
                    .filter(|&v| v <= maxval)
                    .ok_or_else(|| {
                        ImageError::MalformedHeader(format!(
                            "invalid sample {:?} at index {}",
                            String::from_utf8_lossy(tok),
                            pixels.len()
                        ))
                    })?;
                pixels.push(value as u8);
            }
            pixels
        }
    };
    GrayImage::new(width, height, pixels)
}

/// Encodes an image as PGM with maxval 255.
pub fn write_pgm(img: &GrayImage, variant: PgmVariant) -> Vec<u8> {
    let magic = match variant {
        PgmVariant::Ascii => "P2",
        PgmVariant::Binary => "P5",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    match variant {
        PgmVariant::Binary => out.extend_from_slice(&img.pixels),
        PgmVariant::Ascii => {
            for row in img.pixels.chunks(img.width) {
                let line = row
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.extend_from_slice(line.as_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}
