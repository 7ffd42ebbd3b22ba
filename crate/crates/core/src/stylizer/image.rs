use std::path::Path;

use image::{imageops, imageops::FilterType, RgbImage};

use crate::error::{Error, Result};

/// Row-major `height x width` RGB in `[0, 1]`.
///
/// 8-bit files are mapped by `v / 255` with no gamma decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleImage {
    height: usize,
    width: usize,
    pixels: Vec<[f64; 3]>,
}

impl StyleImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::Shape(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "style pixels must lie in [0, 1]".into(),
            ));
        }
        Ok(StyleImage {
            height,
            width,
            pixels,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        f: impl Fn(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let pixels = (0..height * width)
            .map(|i| f(i / width, i % width))
            .collect();
        StyleImage::new(height, width, pixels)
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        StyleImage {
            height: img.height() as usize,
            width: img.width() as usize,
            pixels: img
                .pixels()
                .map(|p| p.0.map(|v| v as f64 / 255.0))
                .collect(),
        }
    }

    /// Loads a PNG or JPEG.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(StyleImage::from_rgb8(&image::open(path)?.to_rgb8()))
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    fn to_rgb8(&self) -> RgbImage {
        RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let p = self.pixels[y as usize * self.width + x as usize];
            image::Rgb(p.map(|v| (v * 255.0).round() as u8))
        })
    }

    /// Shrinks so the longer side is at most `max_side`, keeping the aspect ratio.
    pub fn downscaled(&self, max_side: usize) -> StyleImage {
        let longest = self.height.max(self.width);
        if longest <= max_side || max_side == 0 {
            return self.clone();
        }
        let scale = max_side as f64 / longest as f64;
        let w = ((self.width as f64 * scale).round() as u32).max(1);
        let h = ((self.height as f64 * scale).round() as u32).max(1);
        StyleImage::from_rgb8(&imageops::resize(
            &self.to_rgb8(),
            w,
            h,
            FilterType::Triangle,
        ))
    }

    /// Centre crop to the largest dimensions divisible by `factor`.
    pub fn cropped_to_multiple(&self, factor: usize) -> StyleImage {
        let factor = factor.max(1);
        let h = self.height / factor * factor;
        let w = self.width / factor * factor;
        let (r0, c0) = ((self.height - h) / 2, (self.width - w) / 2);
        let pixels = (0..h)
            .flat_map(|r| {
                let start = (r0 + r) * self.width + c0;
                self.pixels[start..start + w].iter().copied()
            })
            .collect();
        StyleImage {
            height: h,
            width: w,
            pixels,
        }
    }

    pub fn mean_color(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for p in &self.pixels {
            for c in 0..3 {
                m[c] += p[c];
            }
        }
        m.map(|v| v / self.pixels.len().max(1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_bit_is_linear() {
        let img = RgbImage::from_pixel(2, 1, image::Rgb([0, 51, 255]));
        let s = StyleImage::from_rgb8(&img);
        assert_eq!(s.pixels()[1], [0.0, 0.2, 1.0]);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.png");
        let s = StyleImage::from_fn(3, 4, |r, c| [r as f64 / 2.0, c as f64 / 3.0, 0.0]).unwrap();
        s.to_rgb8().save(&path).unwrap();
        let back = StyleImage::load(&path).unwrap();
        assert_eq!((back.height(), back.width()), (3, 4));
        for (a, b) in back.pixels().iter().zip(s.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn crop_and_downscale() {
        let s =
            StyleImage::from_fn(37, 70, |r, c| [r as f64 / 36.0, c as f64 / 69.0, 0.5]).unwrap();
        let c = s.cropped_to_multiple(8);
        assert_eq!((c.height(), c.width()), (32, 64));
        assert_eq!(c.pixels()[0], s.pixels()[2 * 70 + 3]);
        let d = s.downscaled(35);
        assert_eq!((d.height(), d.width()), (19, 35));
        assert!(StyleImage::new(1, 1, vec![[1.5, 0.0, 0.0]]).is_err());
    }
}
