//! MIAS-style annotation records and annotation-driven mass cropping.
//!
//! A record line is whitespace separated:
//!
//! ```text
//! mdb001 G CIRC B 535 425 197
//! mdb003 D NORM
//! ```
//!
//! holding the image id, tissue code (`F`, `G`, `D`), abnormality code and,
//! for abnormal tissue, a severity code (`B`, `M`) followed by the circle
//! center `x y` and radius in pixels.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("line {line}: bad tissue code {code:?}")]
    BadTissueCode { line: usize, code: String },
    #[error("line {line}: bad severity code {code:?}")]
    BadSeverityCode { line: usize, code: String },
    #[error("line {line}: non-numeric geometry {token:?}")]
    NonNumericGeometry { line: usize, token: String },
    #[error("line {line}: expected 'x y radius' after severity, found {found} value(s)")]
    IncompleteGeometry { line: usize, found: usize },
    #[error("line {line}: radius must be positive")]
    NonPositiveRadius { line: usize },
    #[error("line {line}: record has fewer than three fields")]
    MissingFields { line: usize },
}

impl AnnotationError {
    pub fn line(&self) -> usize {
        match self {
            Self::BadTissueCode { line, .. }
            | Self::BadSeverityCode { line, .. }
            | Self::NonNumericGeometry { line, .. }
            | Self::IncompleteGeometry { line, .. }
            | Self::NonPositiveRadius { line }
            | Self::MissingFields { line } => *line,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CropError {
    #[error("annotation has no circle geometry")]
    NoGeometry,
    #[error("circle center ({x}, {y}) lies outside the {width}x{height} image")]
    CenterOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("bounding square does not intersect the image")]
    EmptyRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tissue {
    Fatty,
    FattyGlandular,
    Dense,
}

impl Tissue {
    pub fn code(self) -> char {
        match self {
            Tissue::Fatty => 'F',
            Tissue::FattyGlandular => 'G',
            Tissue::Dense => 'D',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Benign,
    Malignant,
    None,
}

/// Circle around an abnormality, in annotation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Circle {
    pub center_x: u32,
    pub center_y: u32,
    pub radius: u32,
}

/// One annotation record.
///
/// `severity` is [`Severity::None`] exactly when `circle` is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiAnnotation {
    pub id: String,
    pub tissue: Tissue,
    pub abnormality: String,
    pub severity: Severity,
    pub circle: Option<Circle>,
}

/// Result of parsing an annotation file. Bad lines do not abort the parse.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedAnnotations {
    pub records: Vec<RoiAnnotation>,
    pub errors: Vec<AnnotationError>,
}

pub fn parse_annotations(text: &str) -> ParsedAnnotations {
    let mut out = ParsedAnnotations::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line, idx + 1) {
            Ok(rec) => out.records.push(rec),
            Err(e) => out.errors.push(e),
        }
    }
    out
}

fn parse_line(line: &str, lineno: usize) -> Result<RoiAnnotation, AnnotationError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 3 {
        return Err(AnnotationError::MissingFields { line: lineno });
    }
    let tissue = match fields[1] {
        "F" => Tissue::Fatty,
        "G" => Tissue::FattyGlandular,
        "D" => Tissue::Dense,
        other => {
            return Err(AnnotationError::BadTissueCode {
                line: lineno,
                code: other.to_string(),
            })
        }
    };
    let mut rec = RoiAnnotation {
        id: fields[0].to_string(),
        tissue,
        abnormality: fields[2].to_string(),
        severity: Severity::None,
        circle: None,
    };
    let Some(&sev) = fields.get(3) else {
        return Ok(rec);
    };
    rec.severity = match sev {
        "B" => Severity::Benign,
        "M" => Severity::Malignant,
        other => {
            return Err(AnnotationError::BadSeverityCode {
                line: lineno,
                code: other.to_string(),
            })
        }
    };
    let geometry = &fields[4..];
    let mut nums = [0u32; 3];
    for (slot, tok) in nums.iter_mut().zip(geometry) {
        *slot = tok
            .parse()
            .map_err(|_| AnnotationError::NonNumericGeometry {
                line: lineno,
                token: tok.to_string(),
            })?;
    }
    if geometry.len() != 3 {
        return Err(AnnotationError::IncompleteGeometry {
            line: lineno,
            found: geometry.len(),
        });
    }
    if nums[2] == 0 {
        return Err(AnnotationError::NonPositiveRadius { line: lineno });
    }
    rec.circle = Some(Circle {
        center_x: nums[0],
        center_y: nums[1],
        radius: nums[2],
    });
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskMode {
    Square,
    #[default]
    Circle,
}

/// Where row 0 of the annotation coordinate system sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YOrigin {
    Top,
    /// MIAS convention: `y` counts up from the bottom row.
    #[default]
    Bottom,
}

macro_rules! text_enum {
    ($ty:ty, $( $variant:path => $name:literal ),+ ) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $( $variant => $name ),+ })
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $( $name => Ok($variant), )+
                    _ => Err(format!("expected one of: {}", [$( $name ),+].join(", "))),
                }
            }
        }
    };
}

text_enum!(MaskMode, MaskMode::Square => "square", MaskMode::Circle => "circle");
text_enum!(YOrigin, YOrigin::Top => "top", YOrigin::Bottom => "bottom");

/// A cropped square plus the pixels that take part in the statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedRegion {
    image: GrayImage,
    mask: Vec<bool>,
    active_count: usize,
}

impl MaskedRegion {
    /// Returns `None` when the mask length does not match or no pixel is active.
    pub fn new(image: GrayImage, mask: Vec<bool>) -> Option<Self> {
        if mask.len() != image.pixels().len() {
            return None;
        }
        let active_count = mask.iter().filter(|&&m| m).count();
        (active_count > 0).then_some(Self {
            image,
            mask,
            active_count,
        })
    }

    /// Every pixel of `image` is active.
    pub fn full(image: GrayImage) -> Self {
        let n = image.pixels().len();
        Self {
            image,
            mask: vec![true; n],
            active_count: n,
        }
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    /// Raw values of the active pixels in row-major order.
    pub fn active_pixels(&self) -> impl Iterator<Item = u8> + '_ {
        self.image
            .pixels()
            .iter()
            .zip(&self.mask)
            .filter_map(|(&p, &m)| m.then_some(p))
    }
}

/// Crops the bounding square `[cx-r, cx+r] x [cy-r, cy+r]` clipped to the image.
///
/// In circle mode a pixel is active when its Euclidean distance to the center
/// is at most `r`.
pub fn crop_region(
    img: &GrayImage,
    ann: &RoiAnnotation,
    mask_mode: MaskMode,
    y_origin: YOrigin,
) -> Result<MaskedRegion, CropError> {
    let circle = ann.circle.ok_or(CropError::NoGeometry)?;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let cx = i64::from(circle.center_x);
    let cy = match y_origin {
        YOrigin::Top => i64::from(circle.center_y),
        YOrigin::Bottom => h - 1 - i64::from(circle.center_y),
    };
    let r = i64::from(circle.radius);

    let (x0, x1) = ((cx - r).max(0), (cx + r).min(w - 1));
    let (y0, y1) = ((cy - r).max(0), (cy + r).min(h - 1));
    if x0 > x1 || y0 > y1 {
        return Err(CropError::EmptyRegion);
    }
    if !(0..w).contains(&cx) || !(0..h).contains(&cy) {
        return Err(CropError::CenterOutOfBounds {
            x: cx,
            y: cy,
            width: img.width(),
            height: img.height(),
        });
    }

    let (cw, ch) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let mut pixels = Vec::with_capacity(cw * ch);
    let mut mask = Vec::with_capacity(cw * ch);
    for y in y0..=y1 {
        for x in x0..=x1 {
            pixels.push(img.get(x as usize, y as usize));
            mask.push(match mask_mode {
                MaskMode::Square => true,
                MaskMode::Circle => (x - cx).pow(2) + (y - cy).pow(2) <= r * r,
            });
        }
    }
    let image = GrayImage::new(cw, ch, pixels).expect("crop is non-empty");
    // the center pixel is always active, so this cannot be empty
    Ok(MaskedRegion::new(image, mask).expect("center pixel is active"))
}
