//! Grayscale density images for 2D grid tasks.
//!
//! Images are binary PGM (`P5`), one pixel per grid bin, intensity scaled so
//! the densest bin is 255. Column `c` is x-level `c` (x = −2 on the left) and
//! row 0 is the top edge y = +2.

use std::path::Path;

/// Pixel buffer in row-major order, `side × side`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub side: usize,
    pub pixels: Vec<u8>,
}

impl Graymap {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.side, self.side).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Option<Graymap> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return None;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
        }
        let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
        if fields[0] != "P5" || w != h || fields[3] != "255" {
            return None;
        }
        let pixels = bytes.get(pos + 1..)?.to_vec();
        (pixels.len() == w * h).then_some(Graymap { side: w, pixels })
    }

    /// 4-connected components of pixels at or above `threshold`.
    pub fn components_above(&self, threshold: u8) -> usize {
        let n = self.side;
        let mut seen = vec![false; n * n];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..n * n {
            if seen[start] || self.pixels[start] < threshold {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (r, c) = (p / n, p % n);
                let mut visit = |q: usize| {
                    if !seen[q] && self.pixels[q] >= threshold {
                        seen[q] = true;
                        stack.push(q);
                    }
                };
                if r > 0 {
                    visit(p - n);
                }
                if r + 1 < n {
                    visit(p + n);
                }
                if c > 0 {
                    visit(p - 1);
                }
                if c + 1 < n {
                    visit(p + 1);
                }
            }
        }
        count
    }
}

/// Renders per-state weights of a 2D grid (index `ix · side + iy`).
/// An all-zero input gives a black image and a warning.
pub fn render(weights: &[f64], side: usize) -> Graymap {
    assert_eq!(weights.len(), side * side, "weights must cover a {side}x{side} grid");
    let max = weights.iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        log::warn!("heatmap has zero total mass; writing an all-black image");
    }
    let mut pixels = vec![0u8; side * side];
    if max > 0.0 {
        for row in 0..side {
            let iy = side - 1 - row;
            for col in 0..side {
                let w = weights[col * side + iy];
                pixels[row * side + col] = (255.0 * w / max).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Graymap { side, pixels }
}

pub fn render_counts(counts: &[u64], side: usize) -> Graymap {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    render(&w, side)
}

pub fn emit_heatmap(counts: &[u64], side: usize, path: &Path) -> std::io::Result<Graymap> {
    let g = render_counts(counts, side);
    std::fs::write(path, g.to_pgm())?;
    Ok(g)
}
