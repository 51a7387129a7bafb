//! Six-parameter affine target state and the canonical sampling grid it warps.

use crate::error::{Error, Result};

/// Side length of the canonical patch grid; grid coordinates span `[-16, 16)`.
pub const CANONICAL_SIZE: usize = 32;

/// Target state: translation `(lx, ly)` in pixels (x = column, y = row),
/// rotation `theta` in radians, scale `s`, aspect ratio `alpha` and skew `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineState {
    pub lx: f64,
    pub ly: f64,
    pub theta: f64,
    pub s: f64,
    pub alpha: f64,
    pub phi: f64,
}

impl AffineState {
    pub fn new(lx: f64, ly: f64, theta: f64, s: f64, alpha: f64, phi: f64) -> Self {
        Self {
            lx,
            ly,
            theta,
            s,
            alpha,
            phi,
        }
    }

    /// Axis-aligned state centred at `(lx, ly)` covering `32 * s` pixels per side.
    pub fn centered(lx: f64, ly: f64, s: f64) -> Self {
        Self::new(lx, ly, 0.0, s, 1.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.lx, self.ly, self.theta, self.s, self.alpha, self.phi]
    }

    pub fn from_array(p: [f64; 6]) -> Self {
        Self::new(p[0], p[1], p[2], p[3], p[4], p[5])
    }

    pub fn validate(&self) -> Result<()> {
        if !self.as_array().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if self.s <= 0.0 || self.alpha <= 0.0 {
            return Err(Error::NonPositiveScale {
                s: self.s,
                alpha: self.alpha,
            });
        }
        Ok(())
    }

    /// Linear part `R(theta) * Shear(phi) * diag(s, s * alpha)` as `[[a, b], [c, d]]`.
    pub fn linear(&self) -> [[f64; 2]; 2] {
        let (sin, cos) = self.theta.sin_cos();
        let sx = self.s;
        let sy = self.s * self.alpha;
        // shear then scale: [[sx, phi * sy], [0, sy]]
        let m00 = sx;
        let m01 = self.phi * sy;
        let m11 = sy;
        [
            [cos * m00, cos * m01 - sin * m11],
            [sin * m00, sin * m01 + cos * m11],
        ]
    }

    /// Maps a canonical grid point `(cx, cy)` to frame coordinates `(x, y)`.
    pub fn apply(&self, cx: f64, cy: f64) -> (f64, f64) {
        let m = self.linear();
        (
            self.lx + m[0][0] * cx + m[0][1] * cy,
            self.ly + m[1][0] * cx + m[1][1] * cy,
        )
    }

    /// Width and height of the target footprint in frame pixels.
    pub fn extent(&self) -> (f64, f64) {
        let c = CANONICAL_SIZE as f64;
        (c * self.s, c * self.s * self.alpha)
    }
}

/// Canonical coordinate of output index `i` on an axis sampled with `n` points.
#[inline]
pub(crate) fn canonical_coord(i: usize, n: usize) -> f64 {
    let c = CANONICAL_SIZE as f64;
    i as f64 * c / n as f64 - c / 2.0
}
