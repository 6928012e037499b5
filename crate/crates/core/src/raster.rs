//! 8-bit grayscale rasters and binary PGM (P5) I/O.

use std::io::{Read, Write};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid dimensions {width}x{height} for {len} pixels")]
    Dimensions { width: usize, height: usize, len: usize },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(RasterError::Dimensions { width, height, len: pixels.len() });
        }
        Ok(RasterImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
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

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample at continuous coordinates where pixel `(i, j)` has its
    /// center at `(i + 0.5, j + 0.5)`. Taps outside the image read as 0.
    pub fn sample_bilinear<T: Scalar>(&self, x: T, y: T) -> T {
        let fx = x - T::lit(0.5);
        let fy = y - T::lit(0.5);
        if !fx.is_finite() || !fy.is_finite() {
            return T::zero();
        }
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let (ix, iy) = (x0.to_i64().unwrap_or(i64::MIN / 2), y0.to_i64().unwrap_or(i64::MIN / 2));
        let tap = |dx: i64, dy: i64| -> T {
            let (px, py) = (ix + dx, iy + dy);
            if px < 0 || py < 0 || px >= self.width as i64 || py >= self.height as i64 {
                T::zero()
            } else {
                T::from_count(self.get(px as usize, py as usize) as usize)
            }
        };
        let one = T::one();
        let top = tap(0, 0) * (one - tx) + tap(1, 0) * tx;
        let bottom = tap(0, 1) * (one - tx) + tap(1, 1) * tx;
        top * (one - ty) + bottom * ty
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<(), RasterError> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 20);
        self.write_pgm(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self, RasterError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_pgm_bytes(&buf)
    }

    /// Parses binary PGM with `maxval <= 255`; samples are rescaled to 0..=255.
    pub fn from_pgm_bytes(buf: &[u8]) -> Result<Self, RasterError> {
        let mut pos = 0usize;
        let mut fields = [0usize; 3];
        if buf.len() < 2 || &buf[..2] != b"P5" {
            return Err(RasterError::Pgm("missing P5 magic".into()));
        }
        pos += 2;
        for field in fields.iter_mut() {
            // whitespace and comments between header tokens
            loop {
                match buf.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while buf.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while buf.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            if start == pos {
                return Err(RasterError::Pgm(format!("expected a number at byte {start}")));
            }
            *field = std::str::from_utf8(&buf[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| RasterError::Pgm("header number out of range".into()))?;
        }
        if !buf.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(RasterError::Pgm("missing separator after maxval".into()));
        }
        pos += 1;
        let [width, height, maxval] = fields;
        if maxval == 0 || maxval > 255 {
            return Err(RasterError::Pgm(format!("unsupported maxval {maxval}")));
        }
        let n = width.checked_mul(height).ok_or_else(|| RasterError::Pgm("size overflow".into()))?;
        let data = buf
            .get(pos..pos + n)
            .ok_or_else(|| RasterError::Pgm(format!("expected {n} pixel bytes")))?;
        let pixels = if maxval == 255 {
            data.to_vec()
        } else {
            data.iter().map(|&v| ((v.min(maxval as u8) as usize * 255 + maxval / 2) / maxval) as u8).collect()
        };
        Self::new(width, height, pixels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = RasterImage::new(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        let bytes = img.to_pgm_bytes();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(RasterImage::from_pgm_bytes(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_comments_and_maxval() {
        let mut bytes = b"P5 # made by hand\n2 1\n# another\n15\n".to_vec();
        bytes.extend_from_slice(&[0, 15]);
        let img = RasterImage::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(img.pixels(), &[0, 255]);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(RasterImage::from_pgm_bytes(b"P6\n1 1\n255\n\0").is_err());
        assert!(RasterImage::from_pgm_bytes(b"P5\n2 2\n255\n\0").is_err());
        assert!(RasterImage::from_pgm_bytes(b"P5\n1 1\n65535\n\0\0").is_err());
        assert!(RasterImage::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn bilinear_centers_and_midpoints() {
        let img = RasterImage::new(2, 2, vec![0, 100, 200, 40]).unwrap();
        assert_eq!(img.sample_bilinear(0.5f64, 0.5), 0.0);
        assert_eq!(img.sample_bilinear(1.5f64, 1.5), 40.0);
        assert!((img.sample_bilinear(1.0f64, 1.0) - 85.0).abs() < 1e-12);
        // half a pixel outside the border blends with zero
        assert!((img.sample_bilinear(2.0f64, 0.5) - 50.0).abs() < 1e-12);
        assert_eq!(img.sample_bilinear(-5.0f64, 0.5), 0.0);
    }
}
