use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform truncated box `[-L, L]^3` with `N` nodes per axis and zero
/// Dirichlet data on the outer layer of nodes.
///
/// `N` is odd so that the origin is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LabError::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if points_per_axis < 9 {
            return Err(LabError::InvalidGrid(format!(
                "need at least 9 points per axis, got {points_per_axis}"
            )));
        }
        if points_per_axis.is_multiple_of(2) {
            return Err(LabError::InvalidGrid(format!(
                "points per axis must be odd so the origin is a node, got {points_per_axis}"
            )));
        }
        let h = 2.0 * half_width / (points_per_axis - 1) as f64;
        Ok(Self {
            half_width,
            n: points_per_axis,
            h,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Quadrature weight of one node.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index stride along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.n * self.n,
            1 => self.n,
            _ => 1,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        [i, j, k]
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        // symmetric about the centre so that x(N-1-i) = -x(i) exactly
        let c = (self.n - 1) / 2;
        (i as f64 - c as f64) * self.h
    }

    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    #[inline]
    pub fn radius(&self, idx: usize) -> f64 {
        let [x, y, z] = self.point(idx);
        (x * x + y * y + z * z).sqrt()
    }

    pub fn origin_index(&self) -> usize {
        let c = (self.n - 1) / 2;
        self.index(c, c, c)
    }

    /// True for nodes on the outer face layer, where Dirichlet data vanish.
    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.n - 1;
        self.ijk(idx).iter().any(|&c| c == 0 || c == last)
    }

    /// Index of the neighbour one step along `axis` (`+1`/`-1`), if inside
    /// the node array.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.ijk(idx)[axis];
        let s = self.stride(axis);
        if forward {
            (c + 1 < self.n).then(|| idx + s)
        } else {
            (c > 0).then(|| idx - s)
        }
    }

    /// Default shell half-width `h * sqrt(3) / 2`.
    pub fn default_shell_width(&self) -> f64 {
        self.h * 3f64.sqrt() / 2.0
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_cover() {
        let g = GridSpec::new(12.0, 49).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.coord(0), -12.0);
        assert_eq!(g.coord(48), 12.0);
        assert_eq!(g.point(g.origin_index()), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 10).is_err());
        assert!(GridSpec::new(1.0, 7).is_err());
        assert!(GridSpec::new(-1.0, 9).is_err());
    }

    #[test]
    fn index_roundtrip_and_boundary() {
        let g = GridSpec::new(1.0, 9).unwrap();
        for idx in [0, 17, 400, g.len() - 1] {
            let [i, j, k] = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(g.origin_index()));
        assert_eq!(g.neighbor(0, 2, false), None);
        assert_eq!(g.neighbor(0, 0, true), Some(81));
    }
}
