//! 8-bit PNG and binary PGM/PPM load/save.
//!
//! Loading divides by 255; saving scales by `1/L`, then rounds half-up to 8 bits.

use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, GrayImage, ImageEncoder, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::raster::Raster;

pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    from_dynamic(decoded)
}

pub fn from_dynamic(img: DynamicImage) -> Result<Raster> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let data = rgb.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
        Raster::new(w, h, 3, 1.0, data)
    } else {
        let gray = img.to_luma8();
        let data = gray.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
        Raster::new(w, h, 1, 1.0, data)
    }
}

/// Round-half-up quantization of a normalized sample to 8 bits.
#[inline]
pub fn to_u8(v: f64, range: f64) -> u8 {
    ((v / range).clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn to_dynamic(img: &Raster) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes: Vec<u8> = img.samples().iter().map(|&v| to_u8(v, img.range())).collect();
    if img.channels() == 3 {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer size"))
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer size"))
    }
}

/// Saves as PNG, or binary PGM/PPM for `.pgm`/`.ppm`/`.pnm` extensions.
pub fn save(img: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let dynamic = to_dynamic(img);
    let err = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    if matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
        let subtype = if img.channels() == 3 {
            PnmSubtype::Pixmap(SampleEncoding::Binary)
        } else {
            PnmSubtype::Graymap(SampleEncoding::Binary)
        };
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = std::io::BufWriter::new(file);
        PnmEncoder::new(&mut w)
            .with_subtype(subtype)
            .write_image(
                dynamic.as_bytes(),
                dynamic.width(),
                dynamic.height(),
                dynamic.color().into(),
            )
            .map_err(|e| err(e.to_string()))?;
        return w.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        });
    }
    dynamic
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| err(e.to_string()))
}
