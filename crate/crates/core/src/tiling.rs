//! Overlapping patch decomposition for inference on large images, and the
//! coverage-averaging merge that reassembles processed patches.

use crate::error::{Error, Result};
use crate::types::{Crop, LinearImage};

pub const DEFAULT_PATCH_SIZE: usize = 256;
pub const DEFAULT_OVERLAP: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Tile<T> {
    pub top: usize,
    pub left: usize,
    pub patch: T,
}

/// Start offsets along one axis: stride `patch - overlap`, with the last
/// patch shifted inward to end exactly at `len`.
pub fn axis_offsets(len: usize, patch: usize, overlap: usize) -> Result<Vec<usize>> {
    if patch == 0 || patch > len || overlap >= patch {
        return Err(Error::InvalidParameter(format!(
            "patch {patch} with overlap {overlap} does not tile length {len}"
        )));
    }
    let stride = patch - overlap;
    let last = len - patch;
    let mut offsets: Vec<usize> = (0..=last).step_by(stride).collect();
    if *offsets.last().expect("at least one offset") != last {
        offsets.push(last);
    }
    Ok(offsets)
}

/// Top-left corners of every patch, row-major.
pub fn tile_positions(height: usize, width: usize, patch: usize, overlap: usize) -> Result<Vec<(usize, usize)>> {
    let rows = axis_offsets(height, patch, overlap)?;
    let cols = axis_offsets(width, patch, overlap)?;
    Ok(rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect())
}

/// Cuts `img` into square overlapping patches covering every pixel.
pub fn chop<T: Crop>(img: &T, height: usize, width: usize, patch: usize, overlap: usize) -> Result<Vec<Tile<T>>> {
    tile_positions(height, width, patch, overlap)?
        .into_iter()
        .map(|(top, left)| {
            Ok(Tile {
                top,
                left,
                patch: img.crop(top, left, patch, patch)?,
            })
        })
        .collect()
}

/// Chops a linear image; dimensions are taken from the image.
pub fn chop_linear(img: &LinearImage, patch: usize, overlap: usize) -> Result<Vec<Tile<LinearImage>>> {
    chop(img, img.height(), img.width(), patch, overlap)
}

/// Places patches at `scale` times their recorded positions and averages
/// overlapping contributions. Contributions are accumulated in patch order;
/// a pixel whose contributions all agree takes that value unchanged.
pub fn merge(tiles: &[Tile<LinearImage>], out_h: usize, out_w: usize, scale: usize) -> Result<LinearImage> {
    if scale == 0 {
        return Err(Error::InvalidParameter("merge scale must be positive".into()));
    }
    let n = out_h * out_w;
    let mut sum = vec![0.0; n * 3];
    let mut first = vec![0.0; n * 3];
    let mut uniform = vec![true; n * 3];
    let mut count = vec![0u32; n];
    for t in tiles {
        let (top, left) = (t.top * scale, t.left * scale);
        let (ph, pw) = (t.patch.height(), t.patch.width());
        if top + ph > out_h || left + pw > out_w {
            return Err(Error::OutOfBounds {
                top,
                left,
                h: ph,
                w: pw,
                height: out_h,
                width: out_w,
            });
        }
        for r in 0..ph {
            for c in 0..pw {
                let p = (top + r) * out_w + left + c;
                let px = t.patch.pixel(r, c);
                for ch in 0..3 {
                    let i = p * 3 + ch;
                    if count[p] == 0 {
                        first[i] = px[ch];
                    } else if px[ch] != first[i] {
                        uniform[i] = false;
                    }
                    sum[i] += px[ch];
                }
                count[p] += 1;
            }
        }
    }
    let mut data = Vec::with_capacity(n * 3);
    for p in 0..n {
        if count[p] == 0 {
            return Err(Error::UncoveredPixel {
                row: p / out_w,
                col: p % out_w,
            });
        }
        for ch in 0..3 {
            let i = p * 3 + ch;
            data.push(if uniform[i] {
                first[i]
            } else {
                sum[i] / f64::from(count[p])
            });
        }
    }
    LinearImage::new(out_h, out_w, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::types::BayerRaw;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> LinearImage {
        let mut rng = stream(seed);
        LinearImage::new(h, w, (0..h * w * 3).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn single_patch() {
        let img = random_image(16, 16, 1);
        let tiles = chop_linear(&img, 16, 0).unwrap();
        assert_eq!(tiles.len(), 1);
        assert_eq!(tiles[0].patch, img);
    }

    #[test]
    fn exact_tiling() {
        let pos = tile_positions(512, 512, 256, 0).unwrap();
        assert_eq!(pos, vec![(0, 0), (0, 256), (256, 0), (256, 256)]);
    }

    #[test]
    fn coverage_of_irregular_size() {
        let (h, w) = (500, 300);
        let pos = tile_positions(h, w, 256, 32).unwrap();
        let mut cover = vec![0u32; h * w];
        for (t, l) in &pos {
            for r in *t..t + 256 {
                for c in *l..l + 256 {
                    cover[r * w + c] += 1;
                }
            }
        }
        assert!(cover.iter().all(|&n| n >= 1));
        assert!(pos.iter().all(|&(t, l)| t + 256 <= h && l + 256 <= w));
    }

    #[test]
    fn invalid_sizes() {
        assert!(tile_positions(100, 100, 128, 0).is_err());
        assert!(tile_positions(100, 100, 64, 64).is_err());
        assert!(tile_positions(100, 100, 0, 0).is_err());
    }

    #[test]
    fn merge_averages_overlap() {
        let zero = LinearImage::constant(4, 4, [0.0; 3]).unwrap();
        let one = LinearImage::constant(4, 4, [1.0; 3]).unwrap();
        let tiles = vec![
            Tile {
                top: 0,
                left: 0,
                patch: zero,
            },
            Tile {
                top: 0,
                left: 0,
                patch: one,
            },
        ];
        let out = merge(&tiles, 4, 4, 1).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn merge_errors() {
        let p = LinearImage::constant(4, 4, [0.0; 3]).unwrap();
        let tiles = vec![Tile {
            top: 0,
            left: 0,
            patch: p.clone(),
        }];
        assert!(matches!(
            merge(&tiles, 6, 4, 1),
            Err(Error::UncoveredPixel { row: 4, col: 0 })
        ));
        let tiles = vec![Tile {
            top: 1,
            left: 0,
            patch: p,
        }];
        assert!(matches!(merge(&tiles, 4, 4, 1), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn merge_matches_accumulation_oracle() {
        let (h, w, patch, overlap) = (37, 29, 12, 5);
        let tiles: Vec<_> = tile_positions(h, w, patch, overlap)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, (top, left))| Tile {
                top,
                left,
                patch: random_image(patch, patch, 100 + i as u64),
            })
            .collect();
        let got = merge(&tiles, h, w, 1).unwrap();
        let mut acc = vec![0.0; h * w * 3];
        let mut n = vec![0.0; h * w];
        for t in &tiles {
            for r in 0..patch {
                for c in 0..patch {
                    let p = (t.top + r) * w + t.left + c;
                    for ch in 0..3 {
                        acc[p * 3 + ch] += t.patch.get(r, c, ch);
                    }
                    n[p] += 1.0;
                }
            }
        }
        let want: Vec<f64> = acc.iter().enumerate().map(|(i, s)| s / n[i / 3]).collect();
        assert_eq!(got.data(), &want[..]);
    }

    #[test]
    fn merge_at_scale_two() {
        let img = random_image(24, 24, 3);
        let low_pos = tile_positions(12, 12, 6, 2).unwrap();
        let tiles: Vec<_> = low_pos
            .iter()
            .map(|&(t, l)| Tile {
                top: t,
                left: l,
                patch: img.crop(2 * t, 2 * l, 12, 12).unwrap(),
            })
            .collect();
        assert_eq!(merge(&tiles, 24, 24, 2).unwrap(), img);
    }

    #[test]
    fn chop_raw_keeps_phase() {
        let raw = BayerRaw::new(12, 12, vec![0.5; 144], Default::default()).unwrap();
        let tiles = chop(&raw, 12, 12, 6, 2).unwrap();
        assert!(tiles.iter().all(|t| t.top % 2 == 0 && t.left % 2 == 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn merge_of_chop_is_identity(
            h in 8usize..64, w in 8usize..64, patch in 1usize..24, overlap_frac in 0.0f64..1.0, seed in 0u64..1000,
        ) {
            let patch = patch.min(h).min(w);
            let overlap = ((patch as f64) * overlap_frac) as usize % patch;
            let img = random_image(h, w, seed);
            let tiles = chop_linear(&img, patch, overlap).unwrap();
            prop_assert_eq!(merge(&tiles, h, w, 1).unwrap(), img);
        }
    }
}
