//! Plain (P2) grayscale PGM images with intensities scaled to `[0, 1]`.

use crate::{Error, Result};

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Parse(format!(
                "image of {width}×{height} cannot hold {} pixels",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Parses a P2 file; `#` comments run to end of line.
pub fn read_pgm(text: &str) -> Result<Image> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let magic = tokens.next().ok_or_else(|| Error::Parse("empty PGM".into()))?;
    if magic != "P2" {
        return Err(Error::Parse(format!("expected plain PGM magic P2, found {magic:?}")));
    }
    let mut header = |what: &str| -> Result<usize> {
        let tok = tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("PGM header ends before {what}")))?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("PGM {what} {tok:?} is not a nonnegative integer")))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Parse(format!("PGM maxval {maxval} outside 1..=65535")));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for tok in tokens {
        let v: usize = tok
            .parse()
            .map_err(|_| Error::Parse(format!("PGM pixel {tok:?} is not a nonnegative integer")))?;
        if v > maxval {
            return Err(Error::Parse(format!("PGM pixel {v} exceeds maxval {maxval}")));
        }
        pixels.push(v as f64 / maxval as f64);
    }
    if pixels.len() != width * height {
        return Err(Error::Parse(format!(
            "PGM declares {width}×{height} pixels but holds {}",
            pixels.len()
        )));
    }
    Image::new(width, height, pixels)
}

/// Writes P2 with maxval 255, clamping to `[0, 1]` and rounding.
pub fn write_pgm(img: &Image) -> String {
    let mut out = format!("P2\n{} {}\n255\n", img.width, img.height);
    for row in img.pixels.chunks(img.width) {
        let line: Vec<String> = row
            .iter()
            .map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u32).to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comments() {
        let text = "P2\n# made by hand\n3 2\n255\n0 128 255\n# second row\n64 32 16\n";
        let img = read_pgm(text).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.at(0, 2), 1.0);
        assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_pgm("").is_err());
        assert!(read_pgm("P5\n1 1\n255\n0").is_err());
        assert!(read_pgm("P2\n2 2\n255\n0 0 0").is_err());
        assert!(read_pgm("P2\n1 1\n10\n11").is_err());
        assert!(read_pgm("P2\n1 1\n255\n-3").is_err());
        assert!(read_pgm("P2\n1 x\n255\n3").is_err());
    }
}
