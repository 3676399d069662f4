use super::signed_area;
use crate::boxcore::{Point, QuadBox};
use crate::error::{Error, Result};

/// Points this close to a clip edge (in px) count as inside it.
const EDGE_EPS: f64 = 1e-9;

/// Convex polygon with positive shoelace orientation (clockwise on screen).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Validates convexity and normalizes the winding.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self> {
        vertices.dedup();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::DegenerateQuad(
                "polygon needs at least three vertices",
            ));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let e1 = vertices[(i + 1) % n] - vertices[i];
            let e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            if e1.cross(e2) < 0.0 {
                return Err(Error::DegenerateQuad("polygon is not convex"));
            }
        }
        Ok(Self { vertices })
    }

    pub fn from_quad(q: &QuadBox) -> Self {
        Self {
            vertices: q.corners().to_vec(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Inside-or-on-boundary test.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            (b - a).cross(p - a) >= 0.0
        })
    }
}

/// Intersection of two convex polygons by successive half-plane clipping
/// (Sutherland–Hodgman). `None` when the overlap has no interior.
pub fn polygon_clip(subject: &ConvexPolygon, clip: &ConvexPolygon) -> Option<ConvexPolygon> {
    let mut output: Vec<Point> = subject.vertices.clone();
    let cv = &clip.vertices;
    let n = cv.len();
    for i in 0..n {
        if output.is_empty() {
            return None;
        }
        let a = cv[i];
        let edge = cv[(i + 1) % n] - a;
        let len = edge.norm();
        let dist = |p: Point| edge.cross(p - a) / len;

        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (dc, dp) = (dist(cur), dist(prev));
            let cur_in = dc >= -EDGE_EPS;
            let prev_in = dp >= -EDGE_EPS;
            if cur_in {
                if !prev_in {
                    output.push(crossing(prev, cur, dp, dc));
                }
                output.push(cur);
            } else if prev_in {
                output.push(crossing(prev, cur, dp, dc));
            }
        }
    }

    output.dedup();
    while output.len() > 1 && output.first() == output.last() {
        output.pop();
    }
    if output.len() < 3 {
        return None;
    }
    Some(ConvexPolygon { vertices: output })
}

fn crossing(p: Point, q: Point, dp: f64, dq: f64) -> Point {
    let t = dp / (dp - dq);
    p + (q - p) * t
}

/// Unsigned polygon area, `|shoelace| / 2`.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    signed_area(&p.vertices).abs()
}
