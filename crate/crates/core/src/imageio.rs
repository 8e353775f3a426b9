//! 8-bit grayscale rasters and their PGM (P2/P5) and PNG encodings.
//!
//! Only `maxval = 255` graymaps are accepted. PNG decoding sits behind the
//! `png` feature; colour PNGs are reduced to Rec.601 luma
//! `(299 R + 587 G + 114 B) / 1000`, rounded half away from zero in exact
//! integer arithmetic.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} image needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Row-major pixel intensities.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" | "pnm" => Some(Self::Pgm),
            "png" => Some(Self::Png),
            _ => None,
        }
    }

    fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
            Some(Self::Pgm)
        } else if bytes.starts_with(b"\x89PNG") {
            Some(Self::Png)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmEncoding {
    /// ASCII samples (`P2`).
    Plain,
    /// Binary samples (`P5`).
    #[default]
    Raw,
}

/// Which class becomes white in a binary mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolarity {
    /// Pixels `>= t` become 255, pixels `< t` become 0.
    #[default]
    ForegroundWhite,
    /// Pixels `>= t` become 0, pixels `< t` become 255.
    ForegroundBlack,
}

/// Decode a graymap. Without a hint the format is sniffed from the magic bytes.
pub fn load_image<R: Read>(mut source: R, hint: Option<ImageFormat>) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_bytes(&bytes, hint)
}

pub fn load_image_path(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    let hint = ImageFormat::sniff(&bytes).or_else(|| ImageFormat::from_path(path));
    decode_bytes(&bytes, hint)
}

pub fn decode_bytes(bytes: &[u8], hint: Option<ImageFormat>) -> Result<GrayImage> {
    match hint.or_else(|| ImageFormat::sniff(bytes)) {
        Some(ImageFormat::Pgm) => decode_pgm(bytes),
        Some(ImageFormat::Png) => decode_png(bytes),
        None => Err(Error::UnsupportedFormat(
            "unrecognised magic bytes (expected P2, P5 or PNG)".into(),
        )),
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(match self.bytes.get(self.pos) {
                Some(b) => format!("expected {what}, found byte 0x{b:02x}"),
                None => format!("expected {what}, found end of data"),
            }));
        }
        // digits only, so from_utf8 cannot fail
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or_default();
        text.parse()
            .map_err(|_| Error::MalformedHeader(format!("{what} out of range: {text}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let raw = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::MalformedHeader("missing P2/P5 magic".into())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if !cur
        .bytes
        .get(cur.pos)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(Error::MalformedHeader(
            "magic number must be followed by whitespace".into(),
        ));
    }
    let width = cur.next_number("width")?;
    let height = cur.next_number("height")?;
    let maxval = cur.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    let expected = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| Error::MalformedHeader("image dimensions overflow".into()))?;

    let pixels = if raw {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(Error::MalformedHeader(
                    "maxval must be followed by a single whitespace byte".into(),
                ))
            }
        }
        let payload = &bytes[cur.pos..];
        if payload.len() < expected {
            return Err(Error::TruncatedData {
                expected,
                found: payload.len(),
            });
        }
        payload[..expected].to_vec()
    } else {
        let mut pixels = Vec::with_capacity(expected);
        while pixels.len() < expected {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(Error::TruncatedData {
                    expected,
                    found: pixels.len(),
                });
            }
            let value = cur.next_number("sample")?;
            let value = u8::try_from(value)
                .map_err(|_| Error::InvalidImage(format!("sample {value} exceeds maxval 255")))?;
            pixels.push(value);
        }
        pixels
    };
    GrayImage::new(width, height, pixels)
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    use png::{BitDepth, ColorType, Transformations};

    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::MalformedHeader(format!("png: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::MalformedHeader(format!("png: {e}")))?;
    if info.bit_depth != BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!(
            "png with {:?}-bit samples",
            info.bit_depth
        )));
    }
    let data = &buf[..info.buffer_size()];
    let stride = info.line_size;
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => {
            return Err(Error::UnsupportedFormat(
                "indexed png was not expanded".into(),
            ))
        }
    };
    let mut pixels = Vec::with_capacity(info.width as usize * info.height as usize);
    for row in data.chunks(stride).take(info.height as usize) {
        for px in row.chunks(channels).take(info.width as usize) {
            pixels.push(match channels {
                1 | 2 => px[0],
                _ => rec601_luma(px[0], px[1], px[2]),
            });
        }
    }
    GrayImage::new(info.width, info.height, pixels)
}

#[cfg(not(feature = "png"))]
fn decode_png(_bytes: &[u8]) -> Result<GrayImage> {
    Err(Error::UnsupportedFormat(
        "png support was not compiled in".into(),
    ))
}

/// Rec.601 luma rounded half away from zero.
pub fn rec601_luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000) as u8
}

pub fn write_pgm<W: Write>(image: &GrayImage, encoding: PgmEncoding, mut sink: W) -> Result<()> {
    match encoding {
        PgmEncoding::Raw => {
            write!(sink, "P5\n{} {}\n255\n", image.width, image.height)?;
            sink.write_all(&image.pixels)?;
        }
        PgmEncoding::Plain => {
            write!(sink, "P2\n{} {}\n255\n", image.width, image.height)?;
            // netpbm asks for lines of at most 70 characters
            for row in image.pixels.chunks(image.width as usize) {
                let mut line = String::with_capacity(72);
                for &p in row {
                    let sample = p.to_string();
                    if !line.is_empty() && line.len() + 1 + sample.len() > 70 {
                        writeln!(sink, "{line}")?;
                        line.clear();
                    }
                    if !line.is_empty() {
                        line.push(' ');
                    }
                    line.push_str(&sample);
                }
                writeln!(sink, "{line}")?;
            }
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn save_pgm(image: &GrayImage, encoding: PgmEncoding, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_pgm(image, encoding, std::io::BufWriter::new(file))
}

/// Two-level image: `p >= threshold` is the foreground class.
pub fn binarize(image: &GrayImage, threshold: u8, polarity: MaskPolarity) -> GrayImage {
    let (fg, bg) = match polarity {
        MaskPolarity::ForegroundWhite => (255, 0),
        MaskPolarity::ForegroundBlack => (0, 255),
    };
    let pixels = image
        .pixels
        .iter()
        .map(|&p| if p >= threshold { fg } else { bg })
        .collect();
    GrayImage {
        width: image.width,
        height: image.height,
        pixels,
    }
}

/// Writes the default-polarity mask as a raw PGM.
pub fn write_binary_mask<W: Write>(image: &GrayImage, threshold: u8, sink: W) -> Result<()> {
    write_pgm(
        &binarize(image, threshold, MaskPolarity::default()),
        PgmEncoding::Raw,
        sink,
    )
}
