//! Square grayscale images: PGM (P2/P5) and headerless CSV input, binary PGM
//! output, and bilinear resizing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major grayscale image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        let img = Self { rows, cols, data };
        img.check_range()?;
        Ok(img)
    }

    pub fn filled(size: usize, value: f64) -> Result<Self> {
        Self::new(size, size, vec![value; size * size])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Side length, or an error for non-square images.
    pub fn side(&self) -> Result<usize> {
        if self.rows != self.cols {
            return Err(Error::NonSquareImage {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }

    fn check_range(&self) -> Result<()> {
        for (k, &v) in self.data.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::PixelOutOfRange {
                    row: k / self.cols,
                    col: k % self.cols,
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Loads a `.pgm` (P2 or P5) or a headerless `.csv` grid of reals.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let is_csv = path.extension().map(|e| e.eq_ignore_ascii_case("csv")).unwrap_or(false);
        if is_csv {
            let text = String::from_utf8(bytes).map_err(|e| Error::parse(path.display().to_string(), e))?;
            parse_csv(&text)
        } else {
            parse_pgm(&bytes)
        }
    }

    /// Writes a binary PGM (P5, maxval 255).
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let mut out = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        out.extend(self.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Resizes to `size × size` by bilinear interpolation with half-pixel
    /// centres (`align_corners = false`); edge samples are clamped.
    pub fn resize_bilinear(&self, size: usize) -> Result<Self> {
        let side = self.side()?;
        if size == 0 {
            return Err(Error::Config("resize target must be positive".into()));
        }
        let taps = axis_taps(side, size);
        let mut data = Vec::with_capacity(size * size);
        for &(r0, r1, wr) in &taps {
            for &(c0, c1, wc) in &taps {
                let top = (1.0 - wc) * self.get(r0, c0) + wc * self.get(r0, c1);
                let bottom = (1.0 - wc) * self.get(r1, c0) + wc * self.get(r1, c1);
                data.push(((1.0 - wr) * top + wr * bottom).clamp(0.0, 1.0));
            }
        }
        Self::new(size, size, data)
    }
}

/// Source pixel pair and weight of the second one, per output index.
fn axis_taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(input - 1);
            let i1 = (i0 + 1).min(input - 1);
            (i0, i1, src - i0 as f64)
        })
        .collect()
}

/// Resizes a square image (e.g. 28×28 MNIST) to `size × size`.
pub fn resize_bilinear(img: &GrayImage, size: usize) -> Result<GrayImage> {
    img.resize_bilinear(size)
}

fn parse_csv(text: &str) -> Result<GrayImage> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(format!("csv image line {}", n + 1), e))?;
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::parse("csv image", "ragged rows"));
    }
    GrayImage::new(nrows, ncols, rows.into_iter().flatten().collect())
}

/// Splits the PGM header into tokens, skipping `#` comments. Returns the
/// tokens and the offset just past the single whitespace byte ending the
/// header.
fn pgm_header(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < count {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse("pgm header", "unexpected end of file"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    Ok((tokens, pos + 1))
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let (head, offset) = pgm_header(bytes, 4)?;
    let magic = head[0].as_str();
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::parse("pgm header", e));
    let (cols, rows, maxval) = (num(&head[1])?, num(&head[2])?, num(&head[3])?);
    if maxval != 255 {
        return Err(Error::parse(
            "pgm header",
            format!("maxval {maxval} unsupported (need 255)"),
        ));
    }
    let n = rows * cols;
    let raw: Vec<f64> = match magic {
        "P5" => {
            let body = bytes
                .get(offset..offset + n)
                .ok_or_else(|| Error::parse("pgm body", "truncated pixel data"))?;
            body.iter().map(|&b| b as f64).collect()
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[offset.min(bytes.len())..]);
            let vals = text
                .split_whitespace()
                .take(n)
                .map(|t| t.parse::<u32>().map(f64::from))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("pgm body", e))?;
            if vals.len() != n {
                return Err(Error::parse("pgm body", "truncated pixel data"));
            }
            vals
        }
        other => return Err(Error::parse("pgm header", format!("unsupported magic `{other}`"))),
    };
    GrayImage::new(rows, cols, raw.into_iter().map(|v| v / 255.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference bilinear resize written as a separable interpolation matrix
    /// built from the triangle kernel.
    fn reference_resize(img: &GrayImage, size: usize) -> Vec<f64> {
        let n = img.rows();
        let scale = n as f64 / size as f64;
        let mut w = vec![vec![0.0; n]; size];
        for (o, row) in w.iter_mut().enumerate() {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
            for (i, wi) in row.iter_mut().enumerate() {
                *wi = (1.0 - (src - i as f64).abs()).max(0.0);
            }
        }
        let mut out = vec![0.0; size * size];
        for r in 0..size {
            for c in 0..size {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += w[r][i] * w[c][j] * img.get(i, j);
                    }
                }
                out[r * size + c] = acc;
            }
        }
        out
    }

    #[test]
    fn constants_survive_resize() {
        for v in [0.0, 1.0, 0.3] {
            let img = GrayImage::filled(28, v).unwrap();
            let out = img.resize_bilinear(32).unwrap();
            assert_eq!(out.rows(), 32);
            assert!(out.data().iter().all(|&p| (p - v).abs() < 1e-15));
        }
    }

    #[test]
    fn impulse_matches_reference() {
        let mut data = vec![0.0; 28 * 28];
        data[13 * 28 + 7] = 1.0;
        let img = GrayImage::new(28, 28, data).unwrap();
        let out = img.resize_bilinear(32).unwrap();
        let want = reference_resize(&img, 32);
        for (a, b) in out.data().iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert!(out.data().iter().any(|&p| p > 0.5));
    }

    #[test]
    fn rejects_non_square_and_out_of_range() {
        let img = GrayImage::new(2, 3, vec![0.0; 6]).unwrap();
        assert!(matches!(img.resize_bilinear(4), Err(Error::NonSquareImage { .. })));
        assert!(matches!(
            GrayImage::new(1, 2, vec![0.5, 1.5]),
            Err(Error::PixelOutOfRange { col: 1, .. })
        ));
    }

    #[test]
    fn pgm_p2_p5_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p2 = dir.path().join("a.pgm");
        fs::write(&p2, "P2\n# comment\n2 2\n255\n0 255\n51 102\n").unwrap();
        let img = GrayImage::load(&p2).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0, 0.2, 0.4]);

        let p5 = dir.path().join("b.pgm");
        img.save_pgm(&p5).unwrap();
        assert_eq!(GrayImage::load(&p5).unwrap(), img);

        let csv = dir.path().join("c.csv");
        fs::write(&csv, "0,0.5\n1, 0.25\n").unwrap();
        assert_eq!(GrayImage::load(&csv).unwrap().data(), &[0.0, 0.5, 1.0, 0.25]);

        fs::write(&csv, "0,1.5\n1,0\n").unwrap();
        assert!(matches!(GrayImage::load(&csv), Err(Error::PixelOutOfRange { .. })));
    }
}
