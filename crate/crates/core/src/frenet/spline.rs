//! Chord-length parameterized cubic spline through waypoints with
//! not-a-knot end conditions, plus arclength queries.

use super::quad::gauss_legendre;

#[derive(Debug, Clone)]
struct Axis {
    values: Vec<f64>,
    second: Vec<f64>,
}

impl Axis {
    fn new(knots: &[f64], values: Vec<f64>) -> Self {
        let second = not_a_knot_second_derivatives(knots, &values);
        Self { values, second }
    }

    /// Value, first and second derivative on segment `k` at parameter `t`.
    fn eval(&self, knots: &[f64], k: usize, t: f64) -> (f64, f64, f64) {
        let h = knots[k + 1] - knots[k];
        let a = (knots[k + 1] - t) / h;
        let b = (t - knots[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.second[k], self.second[k + 1]);
        let f = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let df = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let ddf = a * m0 + b * m1;
        (f, df, ddf)
    }
}

/// Second derivatives at the knots. Two points give a line, three a single
/// parabola, four or more the not-a-knot cubic.
fn not_a_knot_second_derivatives(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    match n {
        0..=2 => vec![0.0; n],
        3 => {
            let d01 = (y[1] - y[0]) / (t[1] - t[0]);
            let d12 = (y[2] - y[1]) / (t[2] - t[1]);
            let m = 2.0 * (d12 - d01) / (t[2] - t[0]);
            vec![m; 3]
        }
        _ => {
            let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
            // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} eliminated.
            let m = n - 2;
            let mut sub = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut sup = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for r in 0..m {
                let i = r + 1;
                sub[r] = h[i - 1];
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                sup[r] = h[i];
                rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
            }
            // M_0 = ((h0 + h1) M_1 - h0 M_2) / h1
            diag[0] += h[0] * (h[0] + h[1]) / h[1];
            sup[0] -= h[0] * h[0] / h[1];
            sub[0] = 0.0;
            // M_{n-1} = ((h_{n-2} + h_{n-3}) M_{n-2} - h_{n-2} M_{n-3}) / h_{n-3}
            let (hl, hp) = (h[n - 2], h[n - 3]);
            diag[m - 1] += hl * (hl + hp) / hp;
            sub[m - 1] -= hl * hl / hp;
            sup[m - 1] = 0.0;

            let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
            let mut out = vec![0.0; n];
            out[1..n - 1].copy_from_slice(&inner);
            out[0] = ((h[0] + h[1]) * out[1] - h[0] * out[2]) / h[1];
            out[n - 1] = ((hl + hp) * out[n - 2] - hl * out[n - 3]) / hp;
            out
        }
    }
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }
    if n == 2 {
        let det = diag[0] * diag[1] - sup[0] * sub[1];
        return vec![
            (rhs[0] * diag[1] - sup[0] * rhs[1]) / det,
            (diag[0] * rhs[1] - sub[1] * rhs[0]) / det,
        ];
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Planar parametric spline `t -> (x(t), y(t))`.
#[derive(Debug, Clone)]
pub(crate) struct PlanarSpline {
    knots: Vec<f64>,
    x: Axis,
    y: Axis,
    /// Arclength from the start to each knot.
    cumulative: Vec<f64>,
}

/// Local geometry of the spline at one parameter value.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplineSample {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub curvature: f64,
}

impl PlanarSpline {
    /// Builds the spline; the caller guarantees at least two distinct,
    /// non-repeated consecutive points.
    pub fn through(points: &[(f64, f64)]) -> Self {
        let mut knots = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        knots.push(0.0);
        for w in points.windows(2) {
            acc += ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
            knots.push(acc);
        }
        let x = Axis::new(&knots, points.iter().map(|p| p.0).collect());
        let y = Axis::new(&knots, points.iter().map(|p| p.1).collect());
        let mut spline = Self {
            knots,
            x,
            y,
            cumulative: Vec::new(),
        };
        let mut cumulative = vec![0.0];
        for k in 0..spline.knots.len() - 1 {
            let seg = spline.arclength_within(k, spline.knots[k], spline.knots[k + 1]);
            cumulative.push(cumulative[k] + seg);
        }
        spline.cumulative = cumulative;
        spline
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    fn speed(&self, k: usize, t: f64) -> f64 {
        let (_, dx, _) = self.x.eval(&self.knots, k, t);
        let (_, dy, _) = self.y.eval(&self.knots, k, t);
        dx.hypot(dy)
    }

    /// Arclength between parameters `a <= b` inside segment `k`.
    fn arclength_within(&self, k: usize, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        // Pieces of at most half a meter of parameter keep the quadrature exact
        // to rounding for the curvatures of interest.
        let pieces = ((b - a) / 0.5).ceil().max(1.0) as usize;
        let step = (b - a) / pieces as f64;
        (0..pieces)
            .map(|p| {
                let lo = a + step * p as f64;
                gauss_legendre(lo, lo + step, |t| self.speed(k, t))
            })
            .sum()
    }

    /// Parameter value at arclength `s` (clamped to the curve).
    pub fn parameter_at(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.length());
        let nseg = self.knots.len() - 1;
        let k = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite arclength"))
        {
            Ok(i) => i.min(nseg - 1),
            Err(i) => i.saturating_sub(1).min(nseg - 1),
        };
        let (lo, hi) = (self.knots[k], self.knots[k + 1]);
        let target = s - self.cumulative[k];
        let seg_len = self.cumulative[k + 1] - self.cumulative[k];
        let mut t = lo + (hi - lo) * (target / seg_len).clamp(0.0, 1.0);
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let f = self.arclength_within(k, lo, t) - target;
            if f.abs() < 1e-13 {
                break;
            }
            if f > 0.0 {
                b = t;
            } else {
                a = t;
            }
            let newton = t - f / self.speed(k, t);
            t = if newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        (k, t)
    }

    pub fn sample(&self, k: usize, t: f64) -> SplineSample {
        let (x, dx, ddx) = self.x.eval(&self.knots, k, t);
        let (y, dy, ddy) = self.y.eval(&self.knots, k, t);
        let speed = dx.hypot(dy);
        SplineSample {
            x,
            y,
            heading: dy.atan2(dx),
            curvature: (dx * ddy - dy * ddx) / (speed * speed * speed),
        }
    }
}
