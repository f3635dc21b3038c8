use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GrayImage, ImageError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    /// Guesses the format from a file extension, defaulting to PGM.
    pub fn from_path(path: &Path) -> ImageFormat {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(ext) if ext == "png" => ImageFormat::Png,
            _ => ImageFormat::Pgm,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ImageError {
    if source.kind() == std::io::ErrorKind::NotFound {
        ImageError::NotFound(path.display().to_string())
    } else {
        ImageError::Io { path: path.display().to_string(), source }
    }
}

/// Reads a PGM (P2 or P5, maxval up to 255) or an 8-bit PNG.
///
/// Color PNGs are reduced to luminance with `0.299R + 0.587G + 0.114B`,
/// rounded half-up. Alpha channels are dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(path)
    } else {
        decode_pgm(&bytes)
    }
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<(), ImageError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        ImageFormat::Pgm => {
            write!(w, "P5\n{} {}\n255\n", img.width(), img.height()).map_err(|e| io_err(path, e))?;
            w.write_all(img.data()).map_err(|e| io_err(path, e))?;
        }
        ImageFormat::Png => {
            let mut enc = png::Encoder::new(&mut w, img.width() as u32, img.height() as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(|e| png_write_err(path, e))?;
            writer.write_image_data(img.data()).map_err(|e| png_write_err(path, e))?;
            writer.finish().map_err(|e| png_write_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn png_write_err(path: &Path, e: png::EncodingError) -> ImageError {
    match e {
        png::EncodingError::IoError(source) => io_err(path, source),
        other => ImageError::Malformed(other.to_string()),
    }
}

/// Whitespace/comment aware tokenizer over a PGM header.
struct PnmTokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmTokens<'a> {
    fn skip_space(&mut self) {
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

    fn next_token(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn next_number(&mut self, what: &str) -> Result<usize, ImageError> {
        let tok = self.next_token().ok_or_else(|| ImageError::Malformed(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Malformed(format!("bad {what} '{}'", String::from_utf8_lossy(tok))))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut toks = PnmTokens { bytes, pos: 0 };
    let magic = toks.next_token().ok_or_else(|| ImageError::Malformed("empty file".into()))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(ImageError::Malformed(format!(
                "unknown magic '{}'",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = toks.next_number("width")?;
    let height = toks.next_number("height")?;
    let maxval = toks.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::Malformed(format!("zero dimension {width}x{height}")));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedDepth(format!("maxval {maxval} (only 8-bit PGM is supported)")));
    }
    if maxval == 0 {
        return Err(ImageError::Malformed("maxval 0".into()));
    }
    let expected = width * height;
    let mut data = Vec::with_capacity(expected);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = toks.pos + 1;
        let payload = bytes.get(start..).unwrap_or(&[]);
        if payload.len() < expected {
            return Err(ImageError::Malformed(format!("expected {expected} samples, got {}", payload.len())));
        }
        data.extend_from_slice(&payload[..expected]);
    } else {
        while data.len() < expected {
            let Some(tok) = toks.next_token() else { break };
            let v: usize = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ImageError::Malformed(format!("bad sample '{}'", String::from_utf8_lossy(tok))))?;
            if v > maxval {
                return Err(ImageError::Malformed(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as u8);
        }
        if data.len() < expected {
            return Err(ImageError::Malformed(format!("expected {expected} samples, got {}", data.len())));
        }
    }
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as usize * 255 * 2 + maxval) / (2 * maxval)) as u8;
        }
    }
    GrayImage::from_vec(width, height, data)
}

fn decode_png(path: &Path) -> Result<GrayImage, ImageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| png_read_err(path, e))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedDepth(format!("{:?}-bit PNG (only 8-bit is supported)", info.bit_depth)));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(ImageError::UnsupportedDepth("indexed-color PNG".into())),
    };
    let size = reader.output_buffer_size().ok_or_else(|| ImageError::Malformed("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let out = reader.next_frame(&mut buf).map_err(|e| png_read_err(path, e))?;
    let (w, h) = (out.width as usize, out.height as usize);
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(out.line_size).take(h) {
        for px in row[..w * channels].chunks(channels) {
            data.push(match channels {
                1 | 2 => px[0],
                _ => luminance(px[0], px[1], px[2]),
            });
        }
    }
    GrayImage::from_vec(w, h, data)
}

/// `0.299R + 0.587G + 0.114B` rounded half-up, in exact integer arithmetic.
pub(crate) fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

fn png_read_err(path: &Path, e: png::DecodingError) -> ImageError {
    match e {
        png::DecodingError::IoError(source) => io_err(path, source),
        other => ImageError::Malformed(other.to_string()),
    }
}
