//! Euclidean distance matrix over `N` points with `d <= 4` features.
//!
//! Only pairs `j <= i` are computed, stored packed in lower-triangle order.
//! Every path (reference and all strategies) evaluates a cell with the same
//! binary32 arithmetic in the same feature order, so results compare
//! bitwise.
//!
//! Dump layout (all little-endian): `b"PEDM"`, version `u32`, `N u32`,
//! `d u32`, then `N(N+1)/2` `f32` values in packed order.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::tri::{enumerate_lower, packed_index, tri_count, Diagonal, TriCoord, MAX_ELEMS};

pub const MAX_FEATURES: u32 = 4;
pub const DUMP_MAGIC: [u8; 4] = *b"PEDM";
pub const DUMP_VERSION: u32 = 1;
pub const DUMP_HEADER_LEN: usize = 16;

pub fn check_features(d: u32) -> Result<()> {
    if (1..=MAX_FEATURES).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidFeatures(d))
    }
}

/// `N x d` row-major binary32 points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: u32,
    d: u32,
    data: Vec<f32>,
}

impl PointSet {
    pub fn new(n: u32, d: u32, data: Vec<f32>) -> Result<Self> {
        if n == 0 || n > MAX_ELEMS {
            return Err(Error::InvalidElementCount(n as u64));
        }
        check_features(d)?;
        let expected = n as usize * d as usize;
        if data.len() != expected {
            return Err(Error::PointDataLength {
                expected,
                got: data.len(),
            });
        }
        Ok(Self { n, d, data })
    }

    pub fn len(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn features(&self) -> u32 {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline(always)]
    pub fn point(&self, i: u32) -> &[f32] {
        let d = self.d as usize;
        let at = i as usize * d;
        &self.data[at..at + d]
    }
}

/// Uniform `[0, 1)` points from ChaCha8 seeded with `seed`; each value takes
/// the top 24 bits of one `u32` draw, scaled by `2^-24`.
pub fn gen_points(n: u32, d: u32, seed: u64) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n as usize * d as usize;
    let data = (0..total)
        .map(|_| (rng.next_u32() >> 8) as f32 * (1.0 / (1u32 << 24) as f32))
        .collect();
    PointSet::new(n, d, data)
}

/// `sqrt(sum_k (a_k - b_k)^2)` in binary32, accumulated in feature order.
#[inline(always)]
pub fn edm_pair(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    libm::sqrtf(acc)
}

/// Packed lower-triangle distances.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedEdm {
    n: u32,
    d: u32,
    values: Vec<f32>,
}

impl PackedEdm {
    pub fn from_values(n: u32, d: u32, values: Vec<f32>) -> Result<Self> {
        let expected = tri_count(n as u64, Diagonal::Included) as usize;
        if values.len() != expected {
            return Err(Error::PointDataLength {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn len(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn features(&self) -> u32 {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Distance between points `i` and `j`, in either order.
    pub fn get(&self, i: u32, j: u32) -> f32 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        self.values[packed_index(i, j) as usize]
    }

    /// Bitwise comparison; distinguishes `-0.0` and NaN payloads.
    pub fn bitwise_eq(&self, other: &PackedEdm) -> bool {
        self.n == other.n
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DUMP_HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(&DUMP_MAGIC);
        out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.d.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < DUMP_HEADER_LEN {
            return Err(Error::MalformedDump("shorter than the header"));
        }
        if bytes[..4] != DUMP_MAGIC {
            return Err(Error::MalformedDump("bad magic"));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
        if word(4) != DUMP_VERSION {
            return Err(Error::MalformedDump("unsupported version"));
        }
        let (n, d) = (word(8), word(12));
        if n > MAX_ELEMS {
            return Err(Error::MalformedDump("element count too large"));
        }
        let cells = tri_count(n as u64, Diagonal::Included) as usize;
        let body = &bytes[DUMP_HEADER_LEN..];
        if body.len() != 4 * cells {
            return Err(Error::MalformedDump("payload length does not match N"));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self { n, d, values })
    }
}

/// Sequential row-major computation of every pair `j <= i`.
pub fn edm_reference(p: &PointSet) -> PackedEdm {
    let values = enumerate_lower(p.len(), Diagonal::Included)
        .map(|TriCoord { i, j }| edm_pair(p.point(i), p.point(j)))
        .collect();
    PackedEdm {
        n: p.len(),
        d: p.features(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gen_points_examples() {
        let one = gen_points(1, 1, 7).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.data().len(), 1);

        assert_eq!(gen_points(100, 3, 9).unwrap(), gen_points(100, 3, 9).unwrap());
        assert_ne!(gen_points(100, 3, 9).unwrap(), gen_points(100, 3, 10).unwrap());

        let p = gen_points(1024, 4, 42).unwrap();
        assert_eq!(p.data().len(), 4096);
        assert!(p.data().iter().all(|&v| (0.0..1.0).contains(&v)));

        assert_eq!(gen_points(4, 5, 0), Err(Error::InvalidFeatures(5)));
        assert_eq!(gen_points(4, 0, 0), Err(Error::InvalidFeatures(0)));
    }

    #[test]
    fn pair_examples() {
        let a = [0.3f32, 0.9, 0.1];
        assert_eq!(edm_pair(&a, &a), 0.0);
        assert_eq!(edm_pair(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn pair_matches_f64_reference() {
        let p = gen_points(200, 4, 3).unwrap();
        for i in 0..200 {
            for j in 0..i {
                let (a, b) = (p.point(i), p.point(j));
                let want = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let got = edm_pair(a, b) as f64;
                assert!((got - want).abs() <= 1e-6 * want.max(1e-3), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn reference_examples() {
        let one = PointSet::new(1, 1, vec![0.5]).unwrap();
        assert_eq!(edm_reference(&one).values(), &[0.0]);

        let line = PointSet::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(edm_reference(&line).values(), &[0.0, 1.0, 0.0, 2.0, 1.0, 0.0]);

        let r = edm_reference(&gen_points(50, 2, 1).unwrap());
        for i in 0..50 {
            assert_eq!(r.get(i, i).to_bits(), 0);
            for j in 0..i {
                assert!(r.get(i, j) >= 0.0);
                assert_eq!(r.get(i, j), r.get(j, i));
            }
        }
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(2, 2, vec![0.0; 3]).is_err());
        assert!(PointSet::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn dump_header_layout() {
        let r = edm_reference(&PointSet::new(2, 1, vec![0.0, 1.5]).unwrap());
        let bytes = r.to_bytes();
        assert_eq!(&bytes[..4], b"PEDM");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[1, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 3 * 4);
        assert_eq!(&bytes[20..24], &1.5f32.to_le_bytes());
        assert_eq!(PackedEdm::from_bytes(&bytes).unwrap(), r);
    }

    #[test]
    fn dump_rejects_malformed() {
        let good = edm_reference(&gen_points(5, 2, 0).unwrap()).to_bytes();
        assert!(PackedEdm::from_bytes(&good[..10]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(PackedEdm::from_bytes(&bad), Err(Error::MalformedDump("bad magic")));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(PackedEdm::from_bytes(&bad).is_err());
        assert!(PackedEdm::from_bytes(&good[..good.len() - 4]).is_err());
    }
}
