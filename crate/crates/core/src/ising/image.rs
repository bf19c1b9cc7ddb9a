use std::io::{BufRead, Write};

use crate::rng::{DeviateBuffer, Stream};
use crate::{Error, Result};

/// Row-major binary image with pixels in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbmFormat {
    /// `P1`, ASCII.
    Plain,
    /// `P4`, packed bits.
    Raw,
}

impl BinaryImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} image needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::InvalidArgument("pixels must be 0 or 1".into()));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Pixel 1 maps to spin +1, pixel 0 to -1.
    pub fn to_spins(&self) -> Vec<i8> {
        self.pixels.iter().map(|&p| if p == 1 { 1 } else { -1 }).collect()
    }

    pub fn from_spins(height: usize, width: usize, s: &[i8]) -> Result<Self> {
        Self::new(height, width, s.iter().map(|&v| u8::from(v > 0)).collect())
    }

    /// Fraction of pixels that differ from `other`.
    pub fn error_rate(&self, other: &BinaryImage) -> Result<f64> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::Dimension("images differ in shape".into()));
        }
        let diff = self.pixels.iter().zip(&other.pixels).filter(|(a, b)| a != b).count();
        Ok(diff as f64 / self.pixels.len().max(1) as f64)
    }
}

/// Disk of ones centered in a field of zeros, radius a third of the short side.
pub fn synthetic_two_region(height: usize, width: usize) -> BinaryImage {
    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    let r = height.min(width) as f64 / 3.0;
    let pixels = (0..height * width)
        .map(|i| {
            let (y, x) = ((i / width) as f64 + 0.5, (i % width) as f64 + 0.5);
            u8::from((y - cy).powi(2) + (x - cx).powi(2) <= r * r)
        })
        .collect();
    BinaryImage { height, width, pixels }
}

/// Flips each pixel independently with probability `rate`.
pub fn add_flip_noise(img: &BinaryImage, rate: f64, seed: u64) -> Result<BinaryImage> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("noise rate {rate} outside [0, 1]")));
    }
    let mut u = DeviateBuffer::new(crate::rng::DeviateKind::Uniform01, Stream::new(seed).split(20), 4096);
    let pixels = img.pixels.iter().map(|&p| if u.next() < rate { 1 - p } else { p }).collect();
    Ok(BinaryImage { height: img.height, width: img.width, pixels })
}

struct Tokens<R> {
    inner: R,
    line: usize,
}

impl<R: BufRead> Tokens<R> {
    fn byte(&mut self) -> Result<Option<u8>> {
        let mut b = [0u8];
        match self.inner.read(&mut b)? {
            0 => Ok(None),
            _ => {
                if b[0] == b'\n' {
                    self.line += 1;
                }
                Ok(Some(b[0]))
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, column: 0, msg: msg.into() }
    }

    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<String> {
        let mut out = String::new();
        loop {
            let Some(b) = self.byte()? else { break };
            if b == b'#' {
                while let Some(c) = self.byte()? {
                    if c == b'\n' {
                        break;
                    }
                }
                if !out.is_empty() {
                    break;
                }
            } else if b.is_ascii_whitespace() {
                if !out.is_empty() {
                    break;
                }
            } else {
                out.push(b as char);
            }
        }
        if out.is_empty() {
            return Err(self.err("unexpected end of file"));
        }
        Ok(out)
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| self.err(format!("bad {what} '{t}'")))
    }

    /// Next `0` or `1` digit of a plain raster; digits need no separators.
    fn bit(&mut self) -> Result<u8> {
        loop {
            match self.byte()? {
                None => return Err(self.err("raster ends early")),
                Some(b'0') => return Ok(0),
                Some(b'1') => return Ok(1),
                Some(b'#') => {
                    while let Some(c) = self.byte()? {
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => {}
                Some(b) => return Err(self.err(format!("unexpected byte {b:#04x} in raster"))),
            }
        }
    }
}

/// Reads a PBM image (`P1` or `P4`). Black (1) stays 1.
pub fn read_pbm<R: BufRead>(reader: R) -> Result<BinaryImage> {
    let mut t = Tokens { inner: reader, line: 1 };
    let magic = t.token()?;
    let raw = match magic.as_str() {
        "P1" => false,
        "P4" => true,
        other => return Err(t.err(format!("not a PBM file (magic '{other}')"))),
    };
    let width = t.number("width")?;
    let height = t.number("height")?;
    if width == 0 || height == 0 {
        return Err(t.err("image has no pixels"));
    }
    let mut pixels = Vec::with_capacity(width * height);
    if raw {
        // Exactly one whitespace byte was consumed after the height.
        let stride = width.div_ceil(8);
        let mut row = vec![0u8; stride];
        for _ in 0..height {
            t.inner.read_exact(&mut row).map_err(|_| t.err("raster ends early"))?;
            pixels.extend((0..width).map(|c| (row[c / 8] >> (7 - c % 8)) & 1));
        }
    } else {
        for _ in 0..width * height {
            pixels.push(t.bit()?);
        }
    }
    Ok(BinaryImage { height, width, pixels })
}

pub fn write_pbm<W: Write>(mut out: W, img: &BinaryImage, format: PbmFormat) -> Result<()> {
    match format {
        PbmFormat::Plain => {
            writeln!(out, "P1\n{} {}", img.width, img.height)?;
            for row in img.pixels.chunks(img.width.max(1)) {
                let line: Vec<&str> = row.iter().map(|&p| if p == 1 { "1" } else { "0" }).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        PbmFormat::Raw => {
            writeln!(out, "P4\n{} {}", img.width, img.height)?;
            let stride = img.width.div_ceil(8);
            for row in img.pixels.chunks(img.width.max(1)) {
                let mut packed = vec![0u8; stride];
                for (c, &p) in row.iter().enumerate() {
                    packed[c / 8] |= p << (7 - c % 8);
                }
                out.write_all(&packed)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_round_trip() {
        let img = BinaryImage::new(2, 3, vec![1, 0, 1, 0, 0, 1]).unwrap();
        let mut buf = Vec::new();
        write_pbm(&mut buf, &img, PbmFormat::Plain).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "P1\n3 2\n1 0 1\n0 0 1\n");
        assert_eq!(read_pbm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn raw_round_trip_odd_width() {
        let img = add_flip_noise(&BinaryImage::filled(5, 11, 0).unwrap(), 0.5, 3).unwrap();
        let mut buf = Vec::new();
        write_pbm(&mut buf, &img, PbmFormat::Raw).unwrap();
        assert_eq!(read_pbm(&buf[..]).unwrap(), img);
    }

    #[test]
    fn plain_with_comments_and_packed_digits() {
        let text = "P1\n# made by hand\n4 1\n1001\n";
        let img = read_pbm(text.as_bytes()).unwrap();
        assert_eq!(img.pixels(), &[1, 0, 0, 1]);
    }

    #[test]
    fn bad_files() {
        assert!(read_pbm("P2\n1 1\n0".as_bytes()).is_err());
        assert!(read_pbm("P1\n2 2\n1 0 1".as_bytes()).is_err());
        assert!(read_pbm("P1\n0 2\n".as_bytes()).is_err());
        assert!(read_pbm("P1\n1 1\n7".as_bytes()).is_err());
    }

    #[test]
    fn noise_rate_is_close() {
        let img = BinaryImage::filled(100, 100, 1).unwrap();
        let noisy = add_flip_noise(&img, 0.1, 9).unwrap();
        let r = img.error_rate(&noisy).unwrap();
        assert!((r - 0.1).abs() < 0.01, "{r}");
    }

    #[test]
    fn two_region_has_both_values() {
        let img = synthetic_two_region(30, 40);
        let ones = img.pixels().iter().filter(|&&p| p == 1).count();
        assert!(ones > 100 && ones < 1100);
    }
}
