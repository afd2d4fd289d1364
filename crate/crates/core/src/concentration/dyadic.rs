//! Dyadic cubes `[c·2^k, (c+1)·2^k)^d` with exact integer predicates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest scale exponent the integer predicates support.
pub const MIN_SCALE: i32 = -30;
/// Largest scale exponent the integer predicates support.
pub const MAX_SCALE: i32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    /// Side length `2^k`.
    pub k: i32,
    /// Corner in units of the side length.
    pub corner: Vec<i64>,
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(k={}, corner={:?})", self.k, self.corner)
    }
}

impl DyadicCube {
    pub fn new(k: i32, corner: Vec<i64>) -> Result<Self> {
        check_scale(k)?;
        if corner.is_empty() {
            return Err(Error::InvalidArgument("cube needs at least one axis".into()));
        }
        Ok(Self { k, corner })
    }

    /// The cube of side `2^k` containing the integer point.
    pub fn containing(point: &[i64], k: i32) -> Result<Self> {
        check_scale(k)?;
        if point.is_empty() {
            return Err(Error::InvalidArgument("point needs at least one axis".into()));
        }
        let corner = point
            .iter()
            .map(|&x| {
                if k >= 0 {
                    x.div_euclid(1i64 << k)
                } else {
                    x << (-k)
                }
            })
            .collect();
        Ok(Self { k, corner })
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.k)
    }

    pub fn measure(&self) -> f64 {
        2f64.powi(self.k * self.dim() as i32)
    }

    pub fn parent(&self) -> Self {
        Self {
            k: self.k + 1,
            corner: self.corner.iter().map(|c| c.div_euclid(2)).collect(),
        }
    }

    /// Whether the integer point lies in the half-open cube.
    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.dim()
            && Self::containing(point, self.k).is_ok_and(|q| q.corner == self.corner)
    }

    /// Closures intersect (equal cubes count as adjacent).
    pub fn adjacent(&self, other: &Self) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let e = self.k.min(other.k);
        let (sa, sb) = ((self.k - e) as u32, (other.k - e) as u32);
        self.corner.iter().zip(&other.corner).all(|(&a, &b)| {
            let (a_lo, a_hi) = ((a as i128) << sa, ((a as i128) + 1) << sa);
            let (b_lo, b_hi) = ((b as i128) << sb, ((b as i128) + 1) << sb);
            a_lo <= b_hi && b_lo <= a_hi
        })
    }

    /// The `2^d` children one scale down.
    pub fn children(&self) -> Vec<Self> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| Self {
                k: self.k - 1,
                corner: (0..d)
                    .map(|i| 2 * self.corner[i] + ((mask >> i) & 1) as i64)
                    .collect(),
            })
            .collect()
    }

    /// All cubes close to this one.
    pub fn close_partners(&self) -> Vec<Self> {
        let parent = self.parent();
        let d = self.dim();
        let mut out = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut rest = code;
            let corner: Vec<i64> = (0..d)
                .map(|i| {
                    let off = (rest % 3) as i64 - 1;
                    rest /= 3;
                    parent.corner[i] + off
                })
                .collect();
            let neighbour = Self { k: parent.k, corner };
            for child in neighbour.children() {
                if !self.adjacent(&child) {
                    out.push(child);
                }
            }
        }
        out.sort();
        out
    }
}

fn check_scale(k: i32) -> Result<()> {
    if (MIN_SCALE..=MAX_SCALE).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scale exponent {k} outside [{MIN_SCALE}, {MAX_SCALE}]"
        )))
    }
}

/// Same side length, disjoint closures, adjacent parents.
pub fn close(a: &DyadicCube, b: &DyadicCube) -> bool {
    a.k == b.k
        && a.dim() == b.dim()
        && a.k < MAX_SCALE
        && !a.adjacent(b)
        && a.parent().adjacent(&b.parent())
}

/// The unique close pair `(Q, Q')` with `ξ ∈ Q`, `ξ' ∈ Q'`: the cubes at
/// the largest scale whose closures are disjoint.
pub fn whitney_pair_for(xi: &[i64], xi2: &[i64]) -> Result<(DyadicCube, DyadicCube)> {
    if xi.len() != xi2.len() || xi.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "frequency dimensions {} and {} differ",
            xi.len(),
            xi2.len()
        )));
    }
    if xi == xi2 {
        return Err(Error::Degenerate(format!("coincident frequencies {xi:?}")));
    }
    let spread = xi
        .iter()
        .zip(xi2)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0);
    // at 2^k ≥ spread the containing cubes touch
    let top = (u64::BITS - spread.leading_zeros()) as i32;
    for k in (-1..top.min(MAX_SCALE)).rev() {
        let q = DyadicCube::containing(xi, k)?;
        let q2 = DyadicCube::containing(xi2, k)?;
        if !q.adjacent(&q2) {
            return Ok((q, q2));
        }
    }
    Err(Error::Degenerate(format!("no close pair for {xi:?}, {xi2:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(k: i32, c: &[i64]) -> DyadicCube {
        DyadicCube::new(k, c.to_vec()).unwrap()
    }

    #[test]
    fn containment_is_half_open() {
        let q = cube(2, &[1]);
        assert!(q.contains(&[4]) && q.contains(&[7]));
        assert!(!q.contains(&[8]) && !q.contains(&[3]));
        assert!(cube(0, &[-1]).contains(&[-1]));
        assert!(cube(-1, &[6]).contains(&[3]));
        assert!(!cube(-1, &[7]).contains(&[3]));
    }

    #[test]
    fn adjacency_across_scales() {
        assert!(cube(0, &[0]).adjacent(&cube(0, &[1])));
        assert!(!cube(0, &[0]).adjacent(&cube(0, &[2])));
        assert!(cube(1, &[0]).adjacent(&cube(0, &[2])));
        assert!(cube(0, &[-1, 0]).adjacent(&cube(0, &[0, 1])));
    }

    #[test]
    fn small_close_examples() {
        assert!(close(&cube(0, &[0]), &cube(0, &[2])));
        assert!(!close(&cube(0, &[0]), &cube(0, &[1])));
        assert!(!close(&cube(0, &[0]), &cube(0, &[8])));
        assert_eq!(
            whitney_pair_for(&[0], &[2]).unwrap(),
            (cube(0, &[0]), cube(0, &[2]))
        );
        let (a, b) = whitney_pair_for(&[-1], &[0]).unwrap();
        assert_eq!((a.k, b.k), (-1, -1));
        assert!(matches!(whitney_pair_for(&[3], &[3]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn partners_are_close() {
        for q in [cube(0, &[5]), cube(-1, &[2, -3]), cube(3, &[-1, 0])] {
            let partners = q.close_partners();
            assert!(!partners.is_empty());
            assert!(partners.iter().all(|p| close(&q, p)));
        }
        // interior cube in d=1 has two or three partners
        assert!(matches!(cube(0, &[5]).close_partners().len(), 2 | 3));
    }
}
