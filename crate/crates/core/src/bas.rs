//! Bars-and-Stripes images.
//!
//! An `m x m` image is stored row-major as `m^2` bits, black = 1, white = 0.
//! A *stripe* image has every row identical; a *bar* image has every column
//! identical. Pattern bit `k` is read most-significant first, so pattern value
//! `p` paints position `k` with bit `(p >> (m - 1 - k)) & 1`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasDataset {
    pub m: usize,
    pub images: Vec<Vec<u8>>,
}

fn pattern_bit(p: u32, m: usize, k: usize) -> u8 {
    ((p >> (m - 1 - k)) & 1) as u8
}

/// Every bar image (patterns in increasing value), then every stripe image
/// except the two uniform ones already listed.
pub fn generate_bas(m: usize) -> Result<BasDataset> {
    if m < 2 {
        return Err(Error::param("m", "side length must be at least 2"));
    }
    if m > 16 {
        return Err(Error::param("m", "side length above 16 is not supported"));
    }
    let mut images = Vec::with_capacity((1 << (m + 1)) - 2);
    for p in 0..(1u32 << m) {
        // bar: pixel(r, c) depends on the row only
        let img = (0..m * m).map(|idx| pattern_bit(p, m, idx / m)).collect();
        images.push(img);
    }
    let full = (1u32 << m) - 1;
    for p in 1..full {
        let img = (0..m * m).map(|idx| pattern_bit(p, m, idx % m)).collect();
        images.push(img);
    }
    Ok(BasDataset { m, images })
}

impl BasDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn n_pixels(&self) -> usize {
        self.m * self.m
    }

    /// One image per line, `m^2` characters of `0`/`1`.
    pub fn to_lines(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.n_pixels() + 1));
        for img in &self.images {
            out.extend(img.iter().map(|&b| if b == 1 { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

pub fn is_bas_image(img: &[u8], m: usize) -> bool {
    if img.len() != m * m {
        return false;
    }
    let rows_equal = (1..m).all(|r| img[r * m..(r + 1) * m] == img[..m]);
    let cols_equal = (0..m).all(|r| (1..m).all(|c| img[r * m + c] == img[r * m]));
    rows_equal || cols_equal
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClampRegion {
    OuterBorder,
    Custom(Vec<usize>),
}

/// Visible indices held at their true values during reconstruction.
pub fn clamp_mask(m: usize, region: &ClampRegion) -> Result<BTreeSet<usize>> {
    if m == 0 {
        return Err(Error::param("m", "side length must be positive"));
    }
    match region {
        ClampRegion::OuterBorder => Ok((0..m * m)
            .filter(|&idx| {
                let (r, c) = (idx / m, idx % m);
                r == 0 || c == 0 || r == m - 1 || c == m - 1
            })
            .collect()),
        ClampRegion::Custom(indices) => {
            if let Some(&bad) = indices.iter().find(|&&i| i >= m * m) {
                return Err(Error::param(
                    "clamp index",
                    format!("{bad} is outside a {m}x{m} image"),
                ));
            }
            Ok(indices.iter().copied().collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(generate_bas(4).unwrap().len(), 30);
        assert_eq!(generate_bas(2).unwrap().len(), 6);
        assert_eq!(generate_bas(3).unwrap().len(), 14);
        assert!(generate_bas(1).is_err());
    }

    #[test]
    fn every_image_is_bas_and_distinct() {
        for m in 2..=5 {
            let data = generate_bas(m).unwrap();
            let distinct: BTreeSet<_> = data.images.iter().collect();
            assert_eq!(distinct.len(), data.len());
            assert_eq!(data.len(), (1 << (m + 1)) - 2);
            assert!(data.images.iter().all(|img| is_bas_image(img, m)));
        }
    }

    #[test]
    fn enumeration_is_exhaustive_for_m3() {
        // every 9-bit image that is BAS must be in the dataset
        let data = generate_bas(3).unwrap();
        let all: Vec<Vec<u8>> = (0..512u32)
            .map(|x| (0..9).map(|k| ((x >> k) & 1) as u8).collect())
            .filter(|img: &Vec<u8>| is_bas_image(img, 3))
            .collect();
        assert_eq!(all.len(), 14);
        for img in all {
            assert!(data.images.contains(&img));
        }
    }

    #[test]
    fn canonical_order() {
        let data = generate_bas(2).unwrap();
        let expect: Vec<Vec<u8>> = vec![
            vec![0, 0, 0, 0],
            vec![0, 0, 1, 1],
            vec![1, 1, 0, 0],
            vec![1, 1, 1, 1],
            vec![0, 1, 0, 1],
            vec![1, 0, 1, 0],
        ];
        assert_eq!(data.images, expect);
        assert_eq!(generate_bas(4).unwrap(), generate_bas(4).unwrap());
    }

    #[test]
    fn export_lines() {
        let text = generate_bas(4).unwrap().to_lines();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 30);
        assert!(lines.iter().all(|l| l.len() == 16));
    }

    #[test]
    fn clamp_regions() {
        let border = clamp_mask(4, &ClampRegion::OuterBorder).unwrap();
        assert_eq!(border.len(), 12);
        let free: Vec<usize> = (0..16).filter(|i| !border.contains(i)).collect();
        assert_eq!(free, vec![5, 6, 9, 10]);
        assert_eq!(clamp_mask(2, &ClampRegion::OuterBorder).unwrap().len(), 4);
        let custom = clamp_mask(4, &ClampRegion::Custom(vec![0])).unwrap();
        assert_eq!(custom.into_iter().collect::<Vec<_>>(), vec![0]);
        assert!(clamp_mask(4, &ClampRegion::Custom(vec![16])).is_err());
    }

    #[test]
    fn border_determines_image() {
        let data = generate_bas(4).unwrap();
        let border = clamp_mask(4, &ClampRegion::OuterBorder).unwrap();
        for img in &data.images {
            let compatible = data
                .images
                .iter()
                .filter(|other| border.iter().all(|&k| other[k] == img[k]))
                .count();
            assert_eq!(compatible, 1);
        }
    }
}
