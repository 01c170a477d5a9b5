//! Cubic Hermite interpolation between two consecutive path stations.
//!
//! Each segment matches position and heading at both stations, so the
//! interpolated curve is C1 and its normals are continuous across stations.
//! The tangent magnitude is the optimal circle-arc value, which makes a
//! constant-curvature segment indistinguishable from the true arc at the
//! tolerances the projections need.

use super::quad::gauss_legendre;
use super::wrap_angle;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
    /// Rotated by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct HermiteSegment {
    p0: Vec2,
    p1: Vec2,
    d0: Vec2,
    d1: Vec2,
    pub length: f64,
}

impl HermiteSegment {
    pub fn new(p0: Vec2, psi0: f64, p1: Vec2, psi1: f64, delta_s: f64) -> Self {
        let theta = wrap_angle(psi1 - psi0);
        let magnitude = if theta.abs() < 1e-9 {
            delta_s
        } else {
            delta_s * 4.0 * (theta / 4.0).tan() / theta
        };
        let d0 = Vec2::new(psi0.cos(), psi0.sin()).scale(magnitude);
        let d1 = Vec2::new(psi1.cos(), psi1.sin()).scale(magnitude);
        let mut seg = Self {
            p0,
            p1,
            d0,
            d1,
            length: 0.0,
        };
        seg.length = seg.arclength(1.0);
        seg
    }

    pub fn point(&self, t: f64) -> Vec2 {
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.p0
            .scale(h00)
            .add(self.d0.scale(h10))
            .add(self.p1.scale(h01))
            .add(self.d1.scale(h11))
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        let t2 = t * t;
        let h00 = 6.0 * t2 - 6.0 * t;
        let h10 = 3.0 * t2 - 4.0 * t + 1.0;
        let h01 = -6.0 * t2 + 6.0 * t;
        let h11 = 3.0 * t2 - 2.0 * t;
        self.p0
            .scale(h00)
            .add(self.d0.scale(h10))
            .add(self.p1.scale(h01))
            .add(self.d1.scale(h11))
    }

    pub fn second_derivative(&self, t: f64) -> Vec2 {
        let h00 = 12.0 * t - 6.0;
        let h10 = 6.0 * t - 4.0;
        let h01 = -12.0 * t + 6.0;
        let h11 = 6.0 * t - 2.0;
        self.p0
            .scale(h00)
            .add(self.d0.scale(h10))
            .add(self.p1.scale(h01))
            .add(self.d1.scale(h11))
    }

    pub fn arclength(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        gauss_legendre(0.0, t, |u| self.derivative(u).norm())
    }

    /// Parameter at which the arclength from the segment start equals `sigma`.
    pub fn parameter_at(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        if sigma >= self.length {
            return 1.0;
        }
        let mut t = sigma / self.length;
        for _ in 0..20 {
            let f = self.arclength(t) - sigma;
            let step = f / self.derivative(t).norm();
            t = (t - step).clamp(0.0, 1.0);
            if step.abs() < 1e-15 {
                break;
            }
        }
        t
    }

    /// Foot of the perpendicular from `p` onto this segment, if one exists
    /// with parameter in `[0, 1]` and corresponds to a distance minimum.
    pub fn project(&self, p: Vec2) -> Option<f64> {
        let g = |t: f64| p.sub(self.point(t)).dot(self.derivative(t));
        let (g0, g1) = (g(0.0), g(1.0));
        if g0 < 0.0 || g1 > 0.0 {
            return None;
        }
        if g0 == 0.0 {
            return Some(0.0);
        }
        if g1 == 0.0 {
            return Some(1.0);
        }
        let (mut a, mut b) = (0.0, 1.0);
        let mut t = g0 / (g0 - g1);
        for _ in 0..100 {
            let gt = g(t);
            if gt == 0.0 {
                return Some(t);
            }
            if gt > 0.0 {
                a = t;
            } else {
                b = t;
            }
            let d = self.derivative(t);
            let dg = -d.dot(d) + p.sub(self.point(t)).dot(self.second_derivative(t));
            let newton = if dg != 0.0 { t - gt / dg } else { f64::NAN };
            let next = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - t).abs() < 1e-16 || b - a < 1e-16 {
                return Some(next);
            }
            t = next;
        }
        Some(t)
    }
}
