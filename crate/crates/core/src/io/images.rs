use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::splat::Image;

/// 8-bit PNG of an RGB or single-channel image, values clamped to `[0, 1]`.
pub fn write_png(path: &Path, img: &Image) -> Result<()> {
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        c => {
            return Err(Error::InvalidArgument(format!(
                "PNG export supports 1 or 3 channels, got {c}"
            )))
        }
    };
    image::save_buffer(path, &bytes, img.width(), img.height(), color)
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_png(path: &Path) -> Result<Image> {
    let dynimg = image::open(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let rgb = dynimg.to_rgb8();
    let data = rgb.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
    Image::from_data(rgb.width(), rgb.height(), 3, data)
}

/// Little-endian PFM (`PF` for RGB, `Pf` for one channel), bottom row first.
pub fn write_pfm(path: &Path, img: &Image) -> Result<()> {
    let tag = match img.channels() {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(Error::InvalidArgument(format!(
                "PFM supports 1 or 3 channels, got {c}"
            )))
        }
    };
    let mut out = Vec::with_capacity(img.data().len() * 4 + 32);
    write!(out, "{tag}\n{} {}\n-1.0\n", img.width(), img.height()).expect("writing to memory");
    let row = img.width() as usize * img.channels();
    for r in img.data().chunks(row).rev() {
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn header_token<R: BufRead>(r: &mut R, path: &Path) -> Result<String> {
    let mut tok = Vec::new();
    loop {
        let mut b = [0u8];
        if r.read(&mut b).map_err(|e| Error::io(path, e))? == 0 {
            break;
        }
        if b[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b[0]);
    }
    String::from_utf8(tok).map_err(|_| Error::parse(path, "non-ASCII PFM header"))
}

pub fn read_pfm(path: &Path) -> Result<Image> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let channels = match header_token(&mut r, path)?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        t => return Err(Error::parse(path, format!("not a PFM file (magic {t:?})"))),
    };
    let parse_u32 = |s: String| {
        s.parse::<u32>()
            .map_err(|_| Error::parse(path, format!("bad PFM size {s:?}")))
    };
    let width = parse_u32(header_token(&mut r, path)?)?;
    let height = parse_u32(header_token(&mut r, path)?)?;
    let scale_tok = header_token(&mut r, path)?;
    let scale: f32 = scale_tok
        .parse()
        .map_err(|_| Error::parse(path, format!("bad PFM scale {scale_tok:?}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let n = width as usize * height as usize * channels;
    if bytes.len() != 4 * n {
        return Err(Error::parse(
            path,
            format!("expected {} payload bytes, found {}", 4 * n, bytes.len()),
        ));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if scale < 0.0 {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let row = width as usize * channels;
    let data = values.chunks(row.max(1)).rev().flatten().copied().collect();
    Image::from_data(width, height, channels, data)
}

/// JSON sidecar describing a raw float image file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawHeader {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    pub dtype: String,
    pub byte_order: String,
}

/// Writes `path` as row-major little-endian f32 and `path.json` as its
/// sidecar.
pub fn write_raw(path: &Path, img: &Image) -> Result<()> {
    let bytes: Vec<u8> = img.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let header = RawHeader {
        width: img.width(),
        height: img.height(),
        channels: img.channels(),
        dtype: "float32".into(),
        byte_order: "little".into(),
    };
    super::write_json(&sidecar(path), &header)
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn read_raw(path: &Path) -> Result<Image> {
    let side = sidecar(path);
    let header: RawHeader = super::read_json(&side)?;
    if header.dtype != "float32" || header.byte_order != "little" {
        return Err(Error::parse(
            &side,
            "only little-endian float32 raw images are supported",
        ));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Image::from_data(header.width, header.height, header.channels, data)
        .map_err(|e| Error::parse(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(channels: usize) -> Image {
        let n = 5 * 3 * channels;
        Image::from_data(
            5,
            3,
            channels,
            (0..n).map(|i| i as f32 / n as f32 + 1e-7).collect(),
        )
        .unwrap()
    }

    #[test]
    fn lossless_formats_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for c in [1, 3] {
            let img = ramp(c);
            let p = dir.path().join(format!("a{c}.pfm"));
            write_pfm(&p, &img).unwrap();
            assert_eq!(read_pfm(&p).unwrap(), img);
            let p = dir.path().join(format!("a{c}.f32"));
            write_raw(&p, &img).unwrap();
            assert_eq!(read_raw(&p).unwrap(), img);
        }
    }

    #[test]
    fn png_quantizes_to_8_bits() {
        let dir = tempfile::tempdir().unwrap();
        let img = ramp(3);
        let p = dir.path().join("a.png");
        write_png(&p, &img).unwrap();
        let back = read_png(&p).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn truncated_pfm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pfm");
        std::fs::write(&p, b"PF\n4 4\n-1.0\n\0\0\0\0").unwrap();
        assert!(matches!(read_pfm(&p), Err(Error::Parse { .. })));
    }
}
