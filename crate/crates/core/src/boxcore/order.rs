use super::{Point, QuadBox};
use crate::error::{Error, Result};

/// Relative threshold under which a cross product counts as zero; scaled by
/// the squared bounding extent of the input.
const COLLINEAR_EPS: f64 = 1e-9;

/// Relative tolerance (against the bounding extent) for two x coordinates to
/// tie when picking the leftmost corner.
const X_TIE_EPS: f64 = 1e-12;

/// Orders four corners of a convex quadrilateral clockwise on screen,
/// starting from the leftmost one (ties: smallest y).
///
/// The diagonal partner of the leftmost corner is the one that splits the
/// remaining two to opposite sides; the sign of one more cross product then
/// decides which of those comes second. The result does not depend on the
/// input order.
pub fn order_vertices(points: [Point; 4]) -> Result<QuadBox> {
    if !points.iter().all(|p| p.is_finite()) {
        return Err(Error::NonFinite("quadrilateral corner"));
    }
    let eps = zero_threshold(&points);
    if eps == 0.0 {
        return Err(Error::DegenerateQuad("all corners coincide"));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if points[i] == points[j] {
                return Err(Error::DegenerateQuad("coincident corners"));
            }
        }
    }

    // x values within rounding noise of the minimum count as tied, so a
    // rectangle computed through sin/cos still starts at its top-left corner
    let min_x = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let tie = X_TIE_EPS * (eps / COLLINEAR_EPS).sqrt();
    let first_idx = (0..4)
        .filter(|&i| points[i].x - min_x <= tie)
        .min_by(|&a, &b| {
            let (pa, pb) = (points[a], points[b]);
            pa.y.total_cmp(&pb.y).then(pa.x.total_cmp(&pb.x))
        })
        .expect("four points");
    let first = points[first_idx];
    let rest: Vec<Point> = (0..4)
        .filter(|&i| i != first_idx)
        .map(|i| points[i])
        .collect();

    let mut opposite = None;
    for k in 0..3 {
        let s1 = rest[k] - first;
        let s2 = rest[(k + 1) % 3] - first;
        let s3 = rest[(k + 2) % 3] - first;
        let c2 = s1.cross(s2);
        let c3 = s1.cross(s3);
        if c2.abs() < eps || c3.abs() < eps {
            return Err(Error::DegenerateQuad("three collinear corners"));
        }
        if c2 * c3 < 0.0 {
            opposite = Some(k);
            break;
        }
    }
    let k = opposite.ok_or(Error::DegenerateQuad("corners not in convex position"))?;
    let third = rest[k];
    let (a, b) = (rest[(k + 1) % 3], rest[(k + 2) % 3]);
    // y points down, so a negative cross product puts `a` clockwise of the
    // diagonal as seen on screen.
    let (second, fourth) = if (third - first).cross(a - first) < 0.0 {
        (a, b)
    } else {
        (b, a)
    };

    let corners = [first, second, third, fourth];
    for i in 0..4 {
        let e1 = corners[(i + 1) % 4] - corners[i];
        let e2 = corners[(i + 2) % 4] - corners[(i + 1) % 4];
        let turn = e1.cross(e2);
        if turn.abs() < eps {
            return Err(Error::DegenerateQuad("three collinear corners"));
        }
        if turn < 0.0 {
            return Err(Error::DegenerateQuad("corners not in convex position"));
        }
    }
    Ok(QuadBox { corners })
}

fn zero_threshold(points: &[Point; 4]) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in points {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let extent = (xmax - xmin).max(ymax - ymin);
    COLLINEAR_EPS * extent * extent
}
