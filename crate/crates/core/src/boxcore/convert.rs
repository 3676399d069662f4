use super::{canonicalize_five_param, order_vertices, FiveParamBox, Point, QuadBox};
use crate::error::Result;

/// Default corner-angle tolerance used by [`quad_to_five`] to accept a quad
/// as an exact rectangle.
pub const DEFAULT_RECT_TOLERANCE: f64 = 1e-6;

/// Corners of a five-parameter box, ordered clockwise from the leftmost.
pub fn five_to_quad(b: &FiveParamBox) -> Result<QuadBox> {
    order_vertices(b.raw_corners())
}

/// Converts a quad back to five parameters.
///
/// A quad whose four corner angles are all within `tolerance` of a right
/// angle (measured as `|cos|` of the corner angle) is read as that exact
/// rectangle. Anything else is replaced by its minimum-area enclosing
/// rectangle.
pub fn quad_to_five(quad: &QuadBox, tolerance: f64) -> Result<FiveParamBox> {
    let c = quad.corners();
    let edges = [c[1] - c[0], c[2] - c[1], c[3] - c[2], c[0] - c[3]];
    let is_rect = (0..4).all(|i| {
        let (a, b) = (edges[i], edges[(i + 1) % 4]);
        (a.dot(b) / (a.norm() * b.norm())).abs() <= tolerance
    });
    if !is_rect {
        return min_area_rect(c);
    }
    let center = (c[0] + c[1] + c[2] + c[3]) * 0.25;
    let w = 0.5 * (edges[0].norm() + edges[2].norm());
    let h = 0.5 * (edges[1].norm() + edges[3].norm());
    let theta = edges[0].y.atan2(edges[0].x).to_degrees();
    canonicalize_five_param(center.x, center.y, w, h, theta)
}

/// Minimum-area enclosing rectangle of a convex polygon by rotating calipers.
///
/// `hull` must be convex with a positive shoelace sum (clockwise on screen).
/// One side of the optimum always lies on a hull edge, so each edge is tried
/// in turn while three calipers track the extreme vertices along the edge
/// direction, against it, and along its inward normal.
pub fn min_area_rect(hull: &[Point]) -> Result<FiveParamBox> {
    let n = hull.len();
    let dir = |i: usize| {
        let e = hull[(i + 1) % n] - hull[i];
        e * (1.0 / e.norm())
    };
    // positive shoelace => interior lies on the side of +normal
    let normal = |u: Point| Point::new(-u.y, u.x);

    let u0 = dir(0);
    let mut far = 0;
    let mut top = 0;
    for k in 0..n {
        if hull[k].dot(u0) > hull[far].dot(u0) {
            far = k;
        }
        if hull[k].dot(normal(u0)) > hull[top].dot(normal(u0)) {
            top = k;
        }
    }
    let mut back = far;
    for k in 0..n {
        if hull[k].dot(u0) < hull[back].dot(u0) {
            back = k;
        }
    }

    let mut best: Option<(f64, Point, f64, f64, Point)> = None;
    for i in 0..n {
        let u = dir(i);
        let v = normal(u);
        while hull[(far + 1) % n].dot(u) > hull[far].dot(u) {
            far = (far + 1) % n;
        }
        while hull[(top + 1) % n].dot(v) > hull[top].dot(v) {
            top = (top + 1) % n;
        }
        while hull[(back + 1) % n].dot(u) < hull[back].dot(u) {
            back = (back + 1) % n;
        }
        let base = hull[i];
        let (umin, umax) = (hull[back].dot(u), hull[far].dot(u));
        let (vmin, vmax) = (base.dot(v), hull[top].dot(v));
        let (w, h) = (umax - umin, vmax - vmin);
        let area = w * h;
        if best.is_none_or(|b| area < b.0) {
            let center = u * (0.5 * (umin + umax)) + v * (0.5 * (vmin + vmax));
            best = Some((area, center, w, h, u));
        }
    }
    let (_, center, w, h, u) = best.expect("non-empty hull");
    canonicalize_five_param(center.x, center.y, w, h, u.y.atan2(u.x).to_degrees())
}

/// Five-parameter box in the long-side convention: the angle is that of the
/// long side, in `[-180, 0)` degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongSideBox {
    pub cx: f64,
    pub cy: f64,
    pub long: f64,
    pub short: f64,
    pub theta_deg: f64,
}

impl LongSideBox {
    pub fn to_five_param(&self) -> Result<FiveParamBox> {
        canonicalize_five_param(self.cx, self.cy, self.long, self.short, self.theta_deg)
    }
}

/// Re-expresses a canonical box with its angle measured along the long side.
/// Squares keep their input angle.
pub fn to_long_side_convention(b: &FiveParamBox) -> LongSideBox {
    let (long, short, theta) = if b.w() >= b.h() {
        (b.w(), b.h(), b.theta_deg())
    } else {
        // long side is the height side, at θ + 90 ∈ [0, 90) ≡ θ - 90 (mod 180)
        (b.h(), b.w(), b.theta_deg() - 90.0)
    };
    LongSideBox {
        cx: b.cx(),
        cy: b.cy(),
        long,
        short,
        theta_deg: theta,
    }
}
