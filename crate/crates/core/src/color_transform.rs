//! Global and pixel-wise 3x3 color transforms acting on linear RGB vectors,
//! plus a least-squares fit of a global transform between two images.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::isp::{mat_vec, Mat3};
use crate::types::LinearImage;

/// Pivot magnitude below which the 3x3 normal equations count as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalTransform(pub Mat3);

impl GlobalTransform {
    pub fn new(m: Mat3) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("transform entries must be finite".into()));
        }
        Ok(GlobalTransform(m))
    }

    pub fn identity() -> Self {
        GlobalTransform(crate::isp::IDENTITY3)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }
}

/// One 3x3 matrix per pixel, stored row-major as 9 values per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTransformField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl PixelTransformField {
    /// `values` is the `height x width x 9` interchange array.
    pub fn from_array(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width * 9 {
            return Err(Error::SampleCount {
                expected: height * width * 9,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(PixelTransformField { height, width, values })
    }

    pub fn constant(height: usize, width: usize, m: &Mat3) -> Self {
        let flat: Vec<f64> = m.iter().flatten().copied().collect();
        let values = (0..height * width).flat_map(|_| flat.iter().copied()).collect();
        PixelTransformField { height, width, values }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Mat3) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width * 9);
        for r in 0..height {
            for c in 0..width {
                values.extend(f(r, c).iter().flatten());
            }
        }
        Self::from_array(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_array(&self) -> &[f64] {
        &self.values
    }

    pub fn matrix(&self, row: usize, col: usize) -> Mat3 {
        let i = (row * self.width + col) * 9;
        let v = &self.values[i..i + 9];
        [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]
    }

    /// Serializes as a little-endian float64 `.npy` array of shape `(H, W, 9)`.
    pub fn write_npy<W: Write>(&self, mut out: W) -> Result<()> {
        let header = format!(
            "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}, 9), }}",
            self.height, self.width
        );
        // Magic (6) + version (2) + header length (2) + header + newline, padded to 64.
        let unpadded = 10 + header.len() + 1;
        let pad = (64 - unpadded % 64) % 64;
        let header = format!("{header}{}\n", " ".repeat(pad));
        let mut bytes = Vec::with_capacity(10 + header.len() + self.values.len() * 8);
        bytes.extend_from_slice(b"\x93NUMPY\x01\x00");
        bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
        bytes.extend_from_slice(header.as_bytes());
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&bytes).map_err(|e| Error::io("<npy>", e))
    }

    /// Reads an `(H, W, 9)` or `(H, W, 3, 3)` little-endian float64 `.npy` array.
    pub fn read_npy<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| Error::io("<npy>", e))?;
        let bad = |msg: &str| Error::UnsupportedFormat(format!("npy: {msg}"));
        if bytes.len() < 10 || &bytes[..6] != b"\x93NUMPY" {
            return Err(bad("missing magic"));
        }
        let (header_len, start) = match bytes[6] {
            1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
            2 | 3 if bytes.len() >= 12 => (
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
                12,
            ),
            _ => return Err(bad("unsupported version")),
        };
        let header = std::str::from_utf8(
            bytes
                .get(start..start + header_len)
                .ok_or_else(|| bad("truncated header"))?,
        )
        .map_err(|_| bad("header is not UTF-8"))?;
        if !header.contains("'<f8'") {
            return Err(bad("dtype must be little-endian float64"));
        }
        if header.contains("'fortran_order': True") {
            return Err(bad("fortran order not supported"));
        }
        let shape_start = header.find("'shape': (").ok_or_else(|| bad("missing shape"))? + 10;
        let shape_end = shape_start + header[shape_start..].find(')').ok_or_else(|| bad("bad shape"))?;
        let dims: Vec<usize> = header[shape_start..shape_end]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| bad("bad shape entry")))
            .collect::<Result<_>>()?;
        let (h, w) = match dims[..] {
            [h, w, 9] | [h, w, 3, 3] => (h, w),
            _ => return Err(bad("shape must be (H, W, 9) or (H, W, 3, 3)")),
        };
        let body = &bytes[start + header_len..];
        if body.len() != h * w * 9 * 8 {
            return Err(bad("payload size does not match shape"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_array(h, w, values)
    }
}

/// `out[i, j] = M * img[i, j]`, clipped to `[0, 1]`.
pub fn apply_global(img: &LinearImage, t: &GlobalTransform) -> LinearImage {
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|px| mat_vec(&t.0, [px[0], px[1], px[2]]).map(|v| v.clamp(0.0, 1.0)))
        .collect();
    LinearImage::from_parts(img.height(), img.width(), data)
}

/// `out[i, j] = F[i, j] * img[i, j]`, clipped to `[0, 1]`.
pub fn apply_pixelwise(img: &LinearImage, field: &PixelTransformField) -> Result<LinearImage> {
    if (field.height, field.width) != (img.height(), img.width()) {
        return Err(Error::DimensionMismatch(format!(
            "field {}x{} vs image {}x{}",
            field.height,
            field.width,
            img.height(),
            img.width()
        )));
    }
    let data = img
        .data()
        .chunks_exact(3)
        .zip(field.values.chunks_exact(9))
        .flat_map(|(px, m)| {
            let m = [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]];
            mat_vec(&m, [px[0], px[1], px[2]]).map(|v| v.clamp(0.0, 1.0))
        })
        .collect();
    Ok(LinearImage::from_parts(img.height(), img.width(), data))
}

/// Solves `a * x = b` for three right-hand sides (columns of `b`) with
/// partial pivoting.
fn solve3(mut a: Mat3, mut b: Mat3) -> Result<Mat3> {
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        let pivot = a[pivot_row][col];
        if pivot.abs() < SINGULAR_THRESHOLD {
            return Err(Error::RankDeficient { pivot });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..3 {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let mut x = [[0.0; 3]; 3];
    for row in (0..3).rev() {
        for k in 0..3 {
            let mut s = b[row][k];
            for j in row + 1..3 {
                s -= a[row][j] * x[j][k];
            }
            x[row][k] = s / a[row][row];
        }
    }
    Ok(x)
}

/// Least-squares `M` minimizing `sum ||M * src[i, j] - dst[i, j]||^2`.
///
/// Solves the normal equations `(S^T S) M^T = S^T D` where `S^T S` is the
/// mean outer product of source pixels.
pub fn fit_global(src: &LinearImage, dst: &LinearImage) -> Result<GlobalTransform> {
    if (src.height(), src.width()) != (dst.height(), dst.width()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            src.height(),
            src.width(),
            dst.height(),
            dst.width()
        )));
    }
    let n = (src.height() * src.width()) as f64;
    let mut gram = [[0.0; 3]; 3];
    let mut cross = [[0.0; 3]; 3];
    for (s, d) in src.data().chunks_exact(3).zip(dst.data().chunks_exact(3)) {
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += s[i] * s[j];
                cross[i][j] += s[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            gram[i][j] /= n;
            cross[i][j] /= n;
        }
    }
    let mt = solve3(gram, cross)?;
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = mt[j][i];
        }
    }
    GlobalTransform::new(m)
}
