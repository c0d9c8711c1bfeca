//! Bayer demosaicing: a bilinear baseline and adaptive homogeneity-directed
//! (AHD) interpolation.
//!
//! AHD builds two full-color candidates, one interpolating green along rows
//! and one along columns, measures how homogeneous each candidate is around
//! every pixel in CIELAB, and keeps the more homogeneous one. Color
//! differences are then cleaned up with 3x3 median filtering.
//!
//! Both methods leave measured sensel values untouched. Out-of-image
//! neighbours are mirrored without repeating the edge, which keeps the CFA
//! phase intact.

use rayon::prelude::*;

use crate::types::{BayerRaw, Channel, LinearImage};

/// Pixels within this distance of the border use bilinear interpolation.
pub const AHD_BORDER: usize = 2;
/// Side of the window over which homogeneity counts are summed.
pub const AHD_HOMOGENEITY_WINDOW: usize = 3;
/// Number of 3x3 median passes over the color differences.
pub const AHD_MEDIAN_ITERATIONS: usize = 2;

/// Linear sRGB (D65) to CIE XYZ.
pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];
/// D65 reference white in XYZ.
pub const D65_WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

#[inline]
fn mirror(k: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut k = k.rem_euclid(period);
    if k >= n {
        k = period - k;
    }
    k as usize
}

/// Raw accessor with mirrored borders.
struct Mosaic<'a> {
    raw: &'a BayerRaw,
    h: usize,
    w: usize,
}

impl<'a> Mosaic<'a> {
    fn new(raw: &'a BayerRaw) -> Self {
        Mosaic {
            raw,
            h: raw.height(),
            w: raw.width(),
        }
    }

    #[inline]
    fn at(&self, r: isize, c: isize) -> f64 {
        self.raw.get(mirror(r, self.h), mirror(c, self.w))
    }

    #[inline]
    fn color(&self, r: isize, c: isize) -> Channel {
        self.raw.color_at(mirror(r, self.h), mirror(c, self.w))
    }
}

#[inline]
fn mean2(a: f64, b: f64) -> f64 {
    (a + b) * 0.5
}

#[inline]
fn mean4(a: f64, b: f64, c: f64, d: f64) -> f64 {
    ((a + b) + (c + d)) * 0.25
}

const AXIAL: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const DIAGONAL: [(isize, isize); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
const HORIZONTAL: [(isize, isize); 2] = [(0, -1), (0, 1)];
const VERTICAL: [(isize, isize); 2] = [(-1, 0), (1, 0)];

/// Which neighbours of `(r, c)` carry `channel`.
fn neighbour_set(m: &Mosaic, r: isize, c: isize, channel: Channel) -> &'static [(isize, isize)] {
    let has = |set: &[(isize, isize)]| set.iter().all(|&(dr, dc)| m.color(r + dr, c + dc) == channel);
    if has(&AXIAL) {
        &AXIAL
    } else if has(&HORIZONTAL) {
        &HORIZONTAL
    } else if has(&VERTICAL) {
        &VERTICAL
    } else {
        &DIAGONAL
    }
}

fn average_over(set: &[(isize, isize)], mut f: impl FnMut(isize, isize) -> f64) -> f64 {
    match set {
        [a, b] => mean2(f(a.0, a.1), f(b.0, b.1)),
        [a, b, c, d] => mean4(f(a.0, a.1), f(b.0, b.1), f(c.0, c.1), f(d.0, d.1)),
        _ => unreachable!("neighbour sets have two or four members"),
    }
}

fn bilinear_pixel(m: &Mosaic, r: usize, c: usize) -> [f64; 3] {
    let (ri, ci) = (r as isize, c as isize);
    let own = m.raw.color_at(r, c);
    let mut px = [0.0; 3];
    for ch in Channel::ALL {
        px[ch.index()] = if ch == own {
            m.raw.get(r, c)
        } else {
            let set = neighbour_set(m, ri, ci, ch);
            average_over(set, |dr, dc| m.at(ri + dr, ci + dc))
        };
    }
    px
}

/// Each missing value is the mean of its nearest same-color neighbours.
pub fn demosaic_bilinear(raw: &BayerRaw) -> LinearImage {
    let m = Mosaic::new(raw);
    let (h, w) = (m.h, m.w);
    let mut data = vec![0.0; h * w * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(r, row)| {
        for c in 0..w {
            row[c * 3..c * 3 + 3].copy_from_slice(&bilinear_pixel(&m, r, c));
        }
    });
    LinearImage::from_parts(h, w, data)
}

/// Interpolation direction chosen by AHD at a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
    /// Equal homogeneity; both candidates are averaged.
    Tie,
    /// Border pixel filled by the bilinear fallback.
    Border,
}

#[derive(Debug, Clone)]
pub struct AhdOutput {
    pub image: LinearImage,
    pub directions: Vec<Direction>,
}

#[inline]
fn in_rim(m: &Mosaic, r: usize, c: usize) -> bool {
    r < AHD_BORDER || c < AHD_BORDER || r + AHD_BORDER >= m.h || c + AHD_BORDER >= m.w
}

/// Directional green estimates at every pixel (`vertical` selects columns).
fn green_candidate(m: &Mosaic, vertical: bool) -> Vec<f64> {
    let (h, w) = (m.h, m.w);
    let (dr, dc) = if vertical { (1, 0) } else { (0, 1) };
    let mut g = vec![0.0; h * w];
    g.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, out) in row.iter_mut().enumerate() {
            let (ri, ci) = (r as isize, c as isize);
            let x = m.raw.get(r, c);
            if m.raw.color_at(r, c) == Channel::G {
                *out = x;
                continue;
            }
            if in_rim(m, r, c) {
                *out = bilinear_pixel(m, r, c)[1];
                continue;
            }
            let g0 = m.at(ri - dr, ci - dc);
            let g1 = m.at(ri + dr, ci + dc);
            let x0 = m.at(ri - 2 * dr, ci - 2 * dc);
            let x1 = m.at(ri + 2 * dr, ci + 2 * dc);
            let est = mean2(g0, g1) + (2.0 * x - x0 - x1) * 0.25;
            *out = est.clamp(g0.min(g1), g0.max(g1));
        }
    });
    g
}

/// Per-channel extent of the measured samples; reconstructed values are
/// kept inside it.
struct ChannelRange {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl ChannelRange {
    fn of(raw: &BayerRaw) -> Self {
        let mut range = ChannelRange {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        };
        for r in 0..raw.height() {
            for c in 0..raw.width() {
                let (i, v) = (raw.color_at(r, c).index(), raw.get(r, c));
                range.lo[i] = range.lo[i].min(v);
                range.hi[i] = range.hi[i].max(v);
            }
        }
        range
    }

    #[inline]
    fn clamp(&self, ch: Channel, v: f64) -> f64 {
        v.clamp(self.lo[ch.index()], self.hi[ch.index()])
    }
}

/// Fills R and B by color-difference interpolation against a green plane.
fn chroma_candidate(m: &Mosaic, green: &[f64], range: &ChannelRange) -> Vec<[f64; 3]> {
    let (h, w) = (m.h, m.w);
    let g_at = |r: isize, c: isize| green[mirror(r, h) * w + mirror(c, w)];
    let mut out = vec![[0.0; 3]; h * w];
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, px) in row.iter_mut().enumerate() {
            if in_rim(m, r, c) {
                *px = bilinear_pixel(m, r, c);
                continue;
            }
            let (ri, ci) = (r as isize, c as isize);
            let g = green[r * w + c];
            let own = m.raw.color_at(r, c);
            px[1] = g;
            for ch in [Channel::R, Channel::B] {
                px[ch.index()] = if ch == own {
                    m.raw.get(r, c)
                } else {
                    let set = neighbour_set(m, ri, ci, ch);
                    let diff = average_over(set, |dr, dc| m.at(ri + dr, ci + dc) - g_at(ri + dr, ci + dc));
                    range.clamp(ch, g + diff)
                };
            }
        }
    });
    out
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Linear RGB (sRGB primaries, D65) to CIELAB.
pub fn rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let mut xyz = [0.0; 3];
    for (i, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[i] = (row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2]) / D65_WHITE[i];
    }
    let (fx, fy, fz) = (lab_f(xyz[0]), lab_f(xyz[1]), lab_f(xyz[2]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Per-pixel homogeneity counts of the horizontal and vertical candidates.
fn homogeneity(lab_h: &[[f64; 3]], lab_v: &[[f64; 3]], h: usize, w: usize) -> (Vec<u8>, Vec<u8>) {
    let mut homo_h = vec![0u8; h * w];
    let mut homo_v = vec![0u8; h * w];
    homo_h
        .par_chunks_mut(w)
        .zip(homo_v.par_chunks_mut(w))
        .enumerate()
        .for_each(|(r, (row_h, row_v))| {
            for c in 0..w {
                let p = r * w + c;
                // Order: left, right, up, down.
                let nbrs = AXIAL_LRUD.map(|(dr, dc)| mirror(r as isize + dr, h) * w + mirror(c as isize + dc, w));
                let diffs = |lab: &[[f64; 3]]| {
                    nbrs.map(|q| {
                        let dl = (lab[p][0] - lab[q][0]).abs();
                        let da = lab[p][1] - lab[q][1];
                        let db = lab[p][2] - lab[q][2];
                        (dl, da * da + db * db)
                    })
                };
                let (dh, dv) = (diffs(lab_h), diffs(lab_v));
                let leps = dh[0].0.max(dh[1].0).min(dv[2].0.max(dv[3].0));
                let abeps = dh[0].1.max(dh[1].1).min(dv[2].1.max(dv[3].1));
                let count = |d: &[(f64, f64); 4]| d.iter().filter(|(l, ab)| *l <= leps && *ab <= abeps).count() as u8;
                row_h[c] = count(&dh);
                row_v[c] = count(&dv);
            }
        });
    (homo_h, homo_v)
}

const AXIAL_LRUD: [(isize, isize); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

fn window_sum(counts: &[u8], h: usize, w: usize, r: usize, c: usize) -> u32 {
    let half = (AHD_HOMOGENEITY_WINDOW / 2) as isize;
    let mut s = 0u32;
    for dr in -half..=half {
        for dc in -half..=half {
            s += u32::from(counts[mirror(r as isize + dr, h) * w + mirror(c as isize + dc, w)]);
        }
    }
    s
}

fn median9(mut v: [f64; 9]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[4]
}

fn median_filter(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        for (c, o) in row.iter_mut().enumerate() {
            let mut v = [0.0; 9];
            let mut k = 0;
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    v[k] = plane[mirror(r as isize + dr, h) * w + mirror(c as isize + dc, w)];
                    k += 1;
                }
            }
            *o = median9(v);
        }
    });
    out
}

/// AHD demosaicing; see [`demosaic_ahd_detailed`] for the direction map.
pub fn demosaic_ahd(raw: &BayerRaw) -> LinearImage {
    demosaic_ahd_detailed(raw).image
}

pub fn demosaic_ahd_detailed(raw: &BayerRaw) -> AhdOutput {
    let m = Mosaic::new(raw);
    let (h, w) = (m.h, m.w);
    let range = ChannelRange::of(raw);

    let cand_h = chroma_candidate(&m, &green_candidate(&m, false), &range);
    let cand_v = chroma_candidate(&m, &green_candidate(&m, true), &range);
    let lab_h: Vec<[f64; 3]> = cand_h.par_iter().map(|&p| rgb_to_lab(p)).collect();
    let lab_v: Vec<[f64; 3]> = cand_v.par_iter().map(|&p| rgb_to_lab(p)).collect();
    let (homo_h, homo_v) = homogeneity(&lab_h, &lab_v, h, w);

    let mut rgb = vec![[0.0; 3]; h * w];
    let mut directions = vec![Direction::Tie; h * w];
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let (sh, sv) = (window_sum(&homo_h, h, w, r, c), window_sum(&homo_v, h, w, r, c));
            let (px, dir) = if sh > sv {
                (cand_h[p], Direction::Horizontal)
            } else if sv > sh {
                (cand_v[p], Direction::Vertical)
            } else {
                let (a, b) = (cand_h[p], cand_v[p]);
                (
                    [mean2(a[0], b[0]), mean2(a[1], b[1]), mean2(a[2], b[2])],
                    Direction::Tie,
                )
            };
            rgb[p] = px;
            directions[p] = dir;
        }
    }

    for _ in 0..AHD_MEDIAN_ITERATIONS {
        let diff_r: Vec<f64> = rgb.iter().map(|p| p[0] - p[1]).collect();
        let diff_b: Vec<f64> = rgb.iter().map(|p| p[2] - p[1]).collect();
        let (med_r, med_b) = (median_filter(&diff_r, h, w), median_filter(&diff_b, h, w));
        for r in 0..h {
            for c in 0..w {
                if in_rim(&m, r, c) {
                    continue;
                }
                let p = r * w + c;
                let own = raw.color_at(r, c);
                let g = rgb[p][1];
                if own != Channel::R {
                    rgb[p][0] = range.clamp(Channel::R, g + med_r[p]);
                }
                if own != Channel::B {
                    rgb[p][2] = range.clamp(Channel::B, g + med_b[p]);
                }
            }
        }
    }

    let mut data = Vec::with_capacity(h * w * 3);
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let px = if in_rim(&m, r, c) {
                directions[p] = Direction::Border;
                bilinear_pixel(&m, r, c)
            } else {
                rgb[p]
            };
            data.extend(px.map(|v| v.clamp(0.0, 1.0)));
        }
    }
    AhdOutput {
        image: LinearImage::from_parts(h, w, data),
        directions,
    }
}
