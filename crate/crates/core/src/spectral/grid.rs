use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A wavevector on the integer lattice ℤ².
pub type Mode = [i64; 2];

/// Discrete torus geometry.
///
/// Fourier modes are the integer vectors `k` with `|k|_∞ <= cutoff_n`. Physical
/// samples live on a uniform `side_points × side_points` grid over `[0, 2π)²`.
/// The basis is `e_k(x) = (2π)^{-1} e^{i k·x}`, orthonormal in `L²(𝕋²)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    cutoff_n: usize,
    side_points: usize,
}

/// Validating constructor.
pub fn make_grid(cutoff_n: usize, side_points: usize) -> Result<GridSpec> {
    GridSpec::new(cutoff_n, side_points)
}

/// `|k|² + 1`, the eigenvalue of `−A` on the mode `k`.
#[inline]
pub fn eigenvalue(k: Mode) -> f64 {
    (k[0] * k[0] + k[1] * k[1]) as f64 + 1.0
}

#[inline]
pub fn norm_sq(k: Mode) -> i64 {
    k[0] * k[0] + k[1] * k[1]
}

impl GridSpec {
    pub fn new(cutoff_n: usize, side_points: usize) -> Result<Self> {
        let invalid = |reason| Error::InvalidDimensions {
            cutoff_n,
            side_points,
            reason,
        };
        if side_points < 2 || side_points % 2 != 0 {
            return Err(invalid("side_points must be even and at least 2"));
        }
        if side_points < 2 * cutoff_n + 1 {
            return Err(invalid("side_points must be at least 2·cutoff_n + 1"));
        }
        Ok(Self {
            cutoff_n,
            side_points,
        })
    }

    /// Grid whose padded resolution makes cubic products exact on the retained
    /// modes: the smallest even 5-smooth side with `side >= 2(2N+1)`.
    pub fn dealiased(cutoff_n: usize) -> Self {
        let side_points = smooth_even_at_least(2 * (2 * cutoff_n + 1));
        Self {
            cutoff_n,
            side_points,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff_n
    }

    pub fn side(&self) -> usize {
        self.side_points
    }

    /// Number of retained modes per axis, `2N + 1`.
    pub fn width(&self) -> usize {
        2 * self.cutoff_n + 1
    }

    pub fn mode_count(&self) -> usize {
        self.width() * self.width()
    }

    pub fn point_count(&self) -> usize {
        self.side_points * self.side_points
    }

    /// True when pointwise cubic products on the physical grid alias nothing
    /// back onto the retained modes.
    pub fn is_dealiased(&self) -> bool {
        self.side_points >= 2 * (2 * self.cutoff_n + 1)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.side_points as f64
    }

    /// Quadrature weight of one physical sample.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Same physical resolution with a different retained band.
    pub fn with_cutoff(&self, cutoff_n: usize) -> Result<Self> {
        Self::new(cutoff_n, self.side_points)
    }

    pub fn contains(&self, k: Mode) -> bool {
        let n = self.cutoff_n as i64;
        k[0].abs() <= n && k[1].abs() <= n
    }

    /// Dense storage index of a retained mode.
    #[inline]
    pub fn index(&self, k: Mode) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let n = self.cutoff_n as i64;
        Some(((k[0] + n) as usize) * self.width() + (k[1] + n) as usize)
    }

    #[inline]
    pub fn mode(&self, index: usize) -> Mode {
        let n = self.cutoff_n as i64;
        let w = self.width();
        [(index / w) as i64 - n, (index % w) as i64 - n]
    }

    /// Retained modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.mode_count()).map(move |i| self.mode(i))
    }

    /// Index of `-k` for the mode stored at `index`.
    #[inline]
    pub fn conjugate_index(&self, index: usize) -> usize {
        self.mode_count() - 1 - index
    }
}

/// True for the representative of each `{k, -k}` pair (and for `k = 0`).
#[inline]
pub fn in_half_space(k: Mode) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] >= 0)
}

fn smooth_even_at_least(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        if n % 2 == 0 && is_five_smooth(n) {
            return n;
        }
        n += 1;
    }
}

fn is_five_smooth(mut n: usize) -> bool {
    for p in [2, 3, 5] {
        while n % p == 0 {
            n /= p;
        }
    }
    n == 1
}
