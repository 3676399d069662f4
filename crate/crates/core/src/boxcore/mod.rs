//! Box representations and conversions between them.
//!
//! Coordinates follow the image convention: x grows to the right, y grows
//! downwards. "Clockwise" always means clockwise as displayed on screen,
//! which under y-down is a positive shoelace sum.

mod convert;
mod encode;
mod order;

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

pub use convert::{
    five_to_quad, min_area_rect, quad_to_five, to_long_side_convention, LongSideBox,
    DEFAULT_RECT_TOLERANCE,
};
pub use encode::{
    decode_five, decode_quad, encode_five, encode_quad, EncodedFiveParam, EncodedQuad,
};
pub use order::order_vertices;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// `self.x * other.y - self.y * other.x`
    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Rotated rectangle `(cx, cy, w, h, θ)` in the OpenCV convention.
///
/// The width side points along `(cos θ, sin θ)` and the height side along
/// `(-sin θ, cos θ)`. After construction `θ ∈ [-90, 0)` degrees and both
/// sides are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveParamBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
}

impl FiveParamBox {
    /// Builds a canonical box from unrestricted parameters.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta_deg: f64) -> Result<Self> {
        canonicalize_five_param(cx, cy, w, h, theta_deg)
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Parameters as `[cx, cy, w, h, theta_deg]`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.cx, self.cy, self.w, self.h, self.theta_deg]
    }

    /// Corners in OpenCV `boxPoints` order (not re-ordered).
    pub fn raw_corners(&self) -> [Point; 4] {
        let (sin, cos) = sin_cos_deg(self.theta_deg);
        let half_w = Point::new(cos, sin) * (0.5 * self.w);
        let half_h = Point::new(-sin, cos) * (0.5 * self.h);
        let c = self.center();
        [
            c - half_w + half_h,
            c - half_w - half_h,
            c + half_w - half_h,
            c + half_w + half_h,
        ]
    }
}

/// `sin_cos` of an angle in degrees, exact at multiples of 90°.
pub(crate) fn sin_cos_deg(deg: f64) -> (f64, f64) {
    if deg % 90.0 == 0.0 {
        match (deg / 90.0).rem_euclid(4.0) as u8 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        deg.to_radians().sin_cos()
    }
}

/// Wraps an unrestricted angle into `[-90, 0)`, swapping `w` and `h` once per
/// 90° step so the rectangle stays geometrically identical.
pub fn canonicalize_five_param(
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    theta_deg: f64,
) -> Result<FiveParamBox> {
    if ![cx, cy, w, h, theta_deg].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("five-parameter box"));
    }
    if w <= 0.0 || h <= 0.0 {
        return Err(Error::NonPositiveSize { w, h });
    }
    // `%` is exact; each adjustment below stays inside a Sterbenz-exact or
    // monotone-rounding interval so the result lands in [-90, 0).
    let mut t = theta_deg % 180.0;
    let mut swap = false;
    if t >= 0.0 {
        t -= 90.0;
        swap = !swap;
    }
    if t >= 0.0 {
        t -= 90.0;
        swap = !swap;
    }
    if t < -90.0 {
        t += 90.0;
        swap = !swap;
    }
    debug_assert!((-90.0..0.0).contains(&t));
    let (w, h) = if swap { (h, w) } else { (w, h) };
    Ok(FiveParamBox {
        cx,
        cy,
        w,
        h,
        theta_deg: t,
    })
}

impl fmt::Display for FiveParamBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.cx, self.cy, self.w, self.h, self.theta_deg
        )
    }
}

impl FromStr for FiveParamBox {
    type Err = Error;

    /// Parses `"cx cy w h theta_deg"`.
    fn from_str(s: &str) -> Result<Self> {
        let v = parse_numbers(s, 5)?;
        FiveParamBox::new(v[0], v[1], v[2], v[3], v[4])
    }
}

/// Convex quadrilateral with corners clockwise on screen, starting at the
/// leftmost corner (ties broken by smallest y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadBox {
    corners: [Point; 4],
}

impl QuadBox {
    /// Orders four arbitrary points; see [`order_vertices`].
    pub fn from_points(points: [Point; 4]) -> Result<Self> {
        order_vertices(points)
    }

    pub fn corners(&self) -> &[Point; 4] {
        &self.corners
    }

    /// Coordinates as `[x1, y1, x2, y2, x3, y3, x4, y4]`.
    pub fn to_array(&self) -> [f64; 8] {
        let c = &self.corners;
        [
            c[0].x, c[0].y, c[1].x, c[1].y, c[2].x, c[2].y, c[3].x, c[3].y,
        ]
    }

    pub fn area(&self) -> f64 {
        0.5 * shoelace(&self.corners).abs()
    }
}

impl fmt::Display for QuadBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.to_array();
        write!(
            f,
            "{} {} {} {} {} {} {} {}",
            a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]
        )
    }
}

impl FromStr for QuadBox {
    type Err = Error;

    /// Parses `"x1 y1 x2 y2 x3 y3 x4 y4"` and re-orders the corners.
    fn from_str(s: &str) -> Result<Self> {
        let v = parse_numbers(s, 8)?;
        order_vertices(points_from_flat(&v))
    }
}

pub(crate) fn points_from_flat(v: &[f64]) -> [Point; 4] {
    [
        Point::new(v[0], v[1]),
        Point::new(v[2], v[3]),
        Point::new(v[4], v[5]),
        Point::new(v[6], v[7]),
    ]
}

pub(crate) fn parse_numbers(s: &str, expected: usize) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::ParseBox {
        input: s.to_string(),
        reason,
    };
    let v = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != expected {
        return Err(bad(format!("expected {expected} numbers, got {}", v.len())));
    }
    Ok(v)
}

/// Σ (x_i·y_{i+1} − x_{i+1}·y_i); positive for clockwise-on-screen order.
pub fn shoelace(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n).map(|i| points[i].cross(points[(i + 1) % n])).sum()
}

/// Largest distance from a corner of `a` to its nearest corner of `b`, taken
/// symmetrically. Zero iff the two corner sets coincide.
pub fn corner_set_distance(a: &[Point; 4], b: &[Point; 4]) -> f64 {
    let one_way = |p: &[Point; 4], q: &[Point; 4]| {
        p.iter()
            .map(|pi| {
                q.iter()
                    .map(|qj| (*pi - *qj).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}
