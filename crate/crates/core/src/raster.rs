//! Minimal 8-bit raster type shared by the renderer and the extraction
//! pipeline. Grayscale (1 channel) and RGB (3 channels) are supported;
//! anything else is converted on load.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image error for {path}: {source}")]
    Image {
        path: String,
        source: image::ImageError,
    },
    #[error("empty raster ({width}x{height})")]
    Empty { width: u32, height: u32 },
    #[error("unsupported channel count {0}")]
    Channels(u8),
}

/// Interleaved 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8) -> Self {
        assert!(channels == 1 || channels == 3, "1 or 3 channels");
        Raster {
            width,
            height,
            channels,
            data: vec![0; width as usize * height as usize * channels as usize],
        }
    }

    pub fn from_fn<F: FnMut(u32, u32, u8) -> u8>(
        width: u32,
        height: u32,
        channels: u8,
        mut f: F,
    ) -> Self {
        let mut r = Raster::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let v = f(x, y, c);
                    r.put(x, y, c, v);
                }
            }
        }
        r
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    fn idx(&self, x: u32, y: u32, c: u8) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[self.idx(x, y, c)]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, c: u8, v: u8) {
        let i = self.idx(x, y, c);
        self.data[i] = v;
    }

    /// Bilinear sample at continuous index coordinates (pixel centers at
    /// integer positions), clamped to the image borders.
    pub fn bilinear(&self, x: f64, y: f64, c: u8) -> f64 {
        let w = self.width as i64;
        let h = self.height as i64;
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let clamp = |v: i64, hi: i64| v.clamp(0, hi - 1) as u32;
        let x0i = clamp(x0 as i64, w);
        let x1i = clamp(x0 as i64 + 1, w);
        let y0i = clamp(y0 as i64, h);
        let y1i = clamp(y0 as i64 + 1, h);
        let p00 = self.get(x0i, y0i, c) as f64;
        let p10 = self.get(x1i, y0i, c) as f64;
        let p01 = self.get(x0i, y1i, c) as f64;
        let p11 = self.get(x1i, y1i, c) as f64;
        p00 * (1.0 - fx) * (1.0 - fy) + p10 * fx * (1.0 - fy) + p01 * (1.0 - fx) * fy
            + p11 * fx * fy
    }

    pub fn from_dynamic(img: DynamicImage) -> Self {
        match img {
            DynamicImage::ImageLuma8(g) => {
                let (width, height) = g.dimensions();
                Raster {
                    width,
                    height,
                    channels: 1,
                    data: g.into_raw(),
                }
            }
            other => {
                let rgb = other.into_rgb8();
                let (width, height) = rgb.dimensions();
                Raster {
                    width,
                    height,
                    channels: 3,
                    data: rgb.into_raw(),
                }
            }
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                GrayImage::from_raw(self.width, self.height, self.data.clone()).unwrap(),
            ),
            _ => DynamicImage::ImageRgb8(
                RgbImage::from_raw(self.width, self.height, self.data.clone()).unwrap(),
            ),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RasterError> {
        let img = image::open(path).map_err(|source| RasterError::Image {
            path: path.display().to_string(),
            source,
        })?;
        let r = Raster::from_dynamic(img);
        if r.is_empty() {
            return Err(RasterError::Empty {
                width: r.width,
                height: r.height,
            });
        }
        Ok(r)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        self.to_dynamic()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| RasterError::Image {
                path: path.display().to_string(),
                source,
            })
    }
}

/// Round half away from zero and clamp to the 8-bit range.
#[inline]
pub fn round_u8(v: f64) -> u8 {
    let r = if v >= 0.0 { (v + 0.5).floor() } else { (v - 0.5).ceil() };
    r.clamp(0.0, 255.0) as u8
}
