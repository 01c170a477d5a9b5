//! Planar polygon helpers: triangulation, overlap depth, point depth.

use crate::frenet::CartesianPoint;

fn cross(o: CartesianPoint, a: CartesianPoint, b: CartesianPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Twice the signed area; positive for counter-clockwise.
pub fn signed_area2(v: &[CartesianPoint]) -> f64 {
    (0..v.len())
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % v.len()]);
            p.x * q.y - q.x * p.y
        })
        .sum()
}

pub fn is_convex(v: &[CartesianPoint]) -> bool {
    let n = v.len();
    let sign = signed_area2(v).signum();
    (0..n).all(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) * sign >= -1e-12)
}

fn in_triangle(p: CartesianPoint, a: CartesianPoint, b: CartesianPoint, c: CartesianPoint) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Convex pieces of a simple counter-clockwise polygon: the polygon itself
/// when convex, otherwise triangles from ear clipping.
pub fn convex_parts(v: &[CartesianPoint]) -> Vec<Vec<CartesianPoint>> {
    if is_convex(v) {
        return vec![v.to_vec()];
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::new();
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (v[ia], v[ib], v[ic]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx
                .iter()
                .filter(|&&j| j != ia && j != ib && j != ic)
                .any(|&j| in_triangle(v[j], a, b, c));
            if !blocked {
                out.push(vec![a, b, c]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Degenerate remainder (collinear runs): fan it out.
            for k in 1..idx.len() - 1 {
                out.push(vec![v[idx[0]], v[idx[k]], v[idx[k + 1]]]);
            }
            return out;
        }
    }
    out.push(idx.iter().map(|&i| v[i]).collect());
    out
}

fn project(v: &[CartesianPoint], axis: (f64, f64)) -> (f64, f64) {
    v.iter()
        .map(|p| p.x * axis.0 + p.y * axis.1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// Penetration depth of two convex polygons: the shortest translation that
/// separates them, zero when their interiors are disjoint.
pub fn convex_overlap_depth(a: &[CartesianPoint], b: &[CartesianPoint]) -> f64 {
    let mut depth = f64::INFINITY;
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            let len = (q.x - p.x).hypot(q.y - p.y);
            if len < 1e-15 {
                continue;
            }
            let axis = (-(q.y - p.y) / len, (q.x - p.x) / len);
            let (alo, ahi) = project(a, axis);
            let (blo, bhi) = project(b, axis);
            let overlap = (ahi - blo).min(bhi - alo);
            if overlap <= 0.0 {
                return 0.0;
            }
            depth = depth.min(overlap);
        }
    }
    if depth.is_finite() {
        depth
    } else {
        0.0
    }
}

/// Largest convex overlap depth between `body` (convex) and the pieces of a
/// possibly concave polygon.
pub fn overlap_depth(body: &[CartesianPoint], parts: &[Vec<CartesianPoint>]) -> f64 {
    parts.iter().map(|p| convex_overlap_depth(body, p)).fold(0.0, f64::max)
}

pub fn segment_distance(p: CartesianPoint, a: CartesianPoint, b: CartesianPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.x - a.x - t * dx).hypot(p.y - a.y - t * dy)
}

pub fn contains(v: &[CartesianPoint], p: CartesianPoint) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

/// Distance from `p` to the boundary when `p` is inside, else zero.
pub fn point_depth(v: &[CartesianPoint], p: CartesianPoint) -> f64 {
    if !contains(v, p) {
        return 0.0;
    }
    let n = v.len();
    (0..n)
        .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}
