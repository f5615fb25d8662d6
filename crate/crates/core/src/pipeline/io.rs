//! Image decode/encode.
//!
//! PNG (8- or 16-bit) and JPEG (read only) go through the sRGB transfer
//! function unless `assume_linear` is set. PFM files hold linear floats and
//! are read and written without any transfer function.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb as PixelRgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{LinearImage, Rgb};
use crate::srgb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BitDepth {
    #[default]
    #[serde(rename = "8")]
    Eight,
    #[serde(rename = "16")]
    Sixteen,
}

impl std::str::FromStr for BitDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "8" => Ok(BitDepth::Eight),
            "16" => Ok(BitDepth::Sixteen),
            other => Err(Error::InvalidParameter(format!("bit depth must be 8 or 16, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Container {
    Png,
    Jpeg,
    Pfm,
}

fn container(path: &Path) -> Result<Container> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(Container::Png),
        "jpg" | "jpeg" => Ok(Container::Jpeg),
        "pfm" => Ok(Container::Pfm),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected .png, .jpg/.jpeg or .pfm",
            path.display()
        ))),
    }
}

/// sRGB-decodes an 8-bit RGB image.
pub fn srgb_decode(image: &RgbImage) -> Result<LinearImage> {
    decode_codes(image.width(), image.height(), image.pixels().map(|p| p.0.map(srgb::decode_u8)))
}

/// sRGB-encodes to 8-bit RGB.
pub fn srgb_encode(image: &LinearImage) -> RgbImage {
    let mut out = RgbImage::new(image.width() as u32, image.height() as u32);
    for (dst, src) in out.pixels_mut().zip(image.pixels()) {
        *dst = PixelRgb(src.map(srgb::encode_u8));
    }
    out
}

fn decode_codes(width: u32, height: u32, pixels: impl Iterator<Item = Rgb>) -> Result<LinearImage> {
    LinearImage::new(width as usize, height as usize, pixels.collect())
}

fn from_dynamic(img: DynamicImage, assume_linear: bool) -> Result<LinearImage> {
    let (w, h) = (img.width(), img.height());
    match img {
        DynamicImage::ImageRgb8(buf) => decode_codes(w, h, buf.pixels().map(|p| decode8(p.0, assume_linear))),
        DynamicImage::ImageRgba8(buf) => decode_codes(
            w,
            h,
            buf.pixels().map(|p| decode8([p.0[0], p.0[1], p.0[2]], assume_linear)),
        ),
        DynamicImage::ImageRgb16(buf) => decode_codes(w, h, buf.pixels().map(|p| decode16(p.0, assume_linear))),
        DynamicImage::ImageRgba16(buf) => decode_codes(
            w,
            h,
            buf.pixels().map(|p| decode16([p.0[0], p.0[1], p.0[2]], assume_linear)),
        ),
        other => Err(Error::UnsupportedFormat(format!(
            "pixel format {:?}, expected 8- or 16-bit RGB",
            other.color()
        ))),
    }
}

fn decode8(code: [u8; 3], assume_linear: bool) -> Rgb {
    if assume_linear {
        code.map(|c| c as f64 / 255.0)
    } else {
        code.map(srgb::decode_u8)
    }
}

fn decode16(code: [u16; 3], assume_linear: bool) -> Rgb {
    if assume_linear {
        code.map(|c| c as f64 / 65535.0)
    } else {
        code.map(srgb::decode_u16)
    }
}

/// Reads an image into linear RGB.
pub fn read_image(path: &Path, assume_linear: bool) -> Result<LinearImage> {
    match container(path)? {
        Container::Pfm => read_pfm(path),
        Container::Png | Container::Jpeg => {
            let img = image::ImageReader::open(path)
                .map_err(|e| Error::io(path, e))?
                .with_guessed_format()
                .map_err(|e| Error::io(path, e))?
                .decode()?;
            from_dynamic(img, assume_linear)
        }
    }
}

/// Writes an image; PNG is encoded at `depth`, PFM ignores it.
pub fn write_image(path: &Path, image: &LinearImage, depth: BitDepth, assume_linear: bool) -> Result<()> {
    match container(path)? {
        Container::Pfm => write_pfm(path, image),
        Container::Jpeg => Err(Error::UnsupportedFormat("JPEG output is not supported, use PNG".into())),
        Container::Png => {
            let (w, h) = (image.width() as u32, image.height() as u32);
            let dynamic = match depth {
                BitDepth::Eight => {
                    if assume_linear {
                        let mut out = RgbImage::new(w, h);
                        for (dst, src) in out.pixels_mut().zip(image.pixels()) {
                            *dst = PixelRgb(src.map(|v| (v * 255.0).round() as u8));
                        }
                        DynamicImage::ImageRgb8(out)
                    } else {
                        DynamicImage::ImageRgb8(srgb_encode(image))
                    }
                }
                BitDepth::Sixteen => {
                    let mut out: ImageBuffer<PixelRgb<u16>, Vec<u16>> = ImageBuffer::new(w, h);
                    for (dst, src) in out.pixels_mut().zip(image.pixels()) {
                        *dst = PixelRgb(src.map(|v| {
                            if assume_linear {
                                (v * 65535.0).round() as u16
                            } else {
                                srgb::encode_u16(v)
                            }
                        }));
                    }
                    DynamicImage::ImageRgb16(out)
                }
            };
            dynamic.save(path)?;
            Ok(())
        }
    }
}

/// Reads a color PFM (`PF`) file.
pub fn read_pfm(path: &Path) -> Result<LinearImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(BufReader::new(file)).map_err(|e| match e {
        Error::UnsupportedFormat(msg) => Error::UnsupportedFormat(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_pfm(mut reader: impl BufRead) -> Result<LinearImage> {
    let bad = |m: &str| Error::UnsupportedFormat(format!("PFM: {m}"));
    let mut header = Vec::new();
    // three whitespace-separated tokens after the magic: width, height, scale
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        header.clear();
        let n = reader
            .read_until(b'\n', &mut header)
            .map_err(|_| bad("truncated header"))?;
        if n == 0 {
            return Err(bad("truncated header"));
        }
        let line = std::str::from_utf8(&header).map_err(|_| bad("header is not ASCII"))?;
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    if tokens[0] != "PF" {
        return Err(bad("only color (PF) files are supported"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
    let little_endian = scale < 0.0;
    let mut data = vec![0u8; width * height * 12];
    reader.read_exact(&mut data).map_err(|_| bad("truncated pixel data"))?;
    let mut pixels = vec![[0.0; 3]; width * height];
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        let px = i / 3;
        // rows are stored bottom to top
        let (x, y_from_bottom) = (px % width, px / width);
        let y = height - 1 - y_from_bottom;
        pixels[y * width + x][i % 3] = v as f64;
    }
    LinearImage::new(width, height, pixels)
}

/// Writes a little-endian color PFM file.
pub fn write_pfm(path: &Path, image: &LinearImage) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(w, "PF\n{} {}\n-1.0\n", image.width(), image.height()).map_err(io)?;
    for y in (0..image.height()).rev() {
        for x in 0..image.width() {
            for v in image.get(x, y) {
                w.write_all(&(v as f32).to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}
