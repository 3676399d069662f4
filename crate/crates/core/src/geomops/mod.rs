//! Exact rotated IoU and rotated non-maximum suppression.

mod clip;
mod nms;

use std::str::FromStr;

use crate::boxcore::{
    five_to_quad, parse_numbers, points_from_flat, shoelace, FiveParamBox, Point, QuadBox,
};
use crate::error::{Error, Result};

pub use clip::{polygon_area, polygon_clip, ConvexPolygon};
pub use nms::{batch_nms, rotated_nms, rotated_nms_indices, Detection};

/// Either box parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotatedBox {
    Five(FiveParamBox),
    Quad(QuadBox),
}

impl RotatedBox {
    pub fn to_quad(&self) -> Result<QuadBox> {
        match self {
            RotatedBox::Five(b) => five_to_quad(b),
            RotatedBox::Quad(q) => Ok(*q),
        }
    }

    pub fn to_polygon(&self) -> Result<ConvexPolygon> {
        Ok(ConvexPolygon::from_quad(&self.to_quad()?))
    }
}

impl From<FiveParamBox> for RotatedBox {
    fn from(b: FiveParamBox) -> Self {
        RotatedBox::Five(b)
    }
}

impl From<QuadBox> for RotatedBox {
    fn from(q: QuadBox) -> Self {
        RotatedBox::Quad(q)
    }
}

impl FromStr for RotatedBox {
    type Err = Error;

    /// Accepts either text form: five numbers or eight.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .count();
        match n {
            5 => Ok(RotatedBox::Five(s.parse()?)),
            8 => {
                let v = parse_numbers(s, 8)?;
                Ok(RotatedBox::Quad(QuadBox::from_points(points_from_flat(
                    &v,
                ))?))
            }
            _ => Err(Error::ParseBox {
                input: s.to_string(),
                reason: format!("expected 5 or 8 numbers, got {n}"),
            }),
        }
    }
}

/// Intersection over union of two rotated boxes.
///
/// Exactly symmetric in its arguments: the pair is put into a canonical
/// order before clipping.
pub fn rotated_iou(a: &RotatedBox, b: &RotatedBox) -> Result<f64> {
    let pa = a.to_polygon()?;
    let pb = b.to_polygon()?;
    Ok(polygon_iou(&pa, &pb))
}

pub(crate) fn polygon_iou(pa: &ConvexPolygon, pb: &ConvexPolygon) -> f64 {
    let (first, second) = if lexicographic_le(pa.vertices(), pb.vertices()) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    let inter = match polygon_clip(first, second) {
        Some(p) => polygon_area(&p),
        None => return 0.0,
    };
    if inter <= 0.0 {
        return 0.0;
    }
    let union = polygon_area(pa) + polygon_area(pb) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn lexicographic_le(a: &[Point], b: &[Point]) -> bool {
    for (p, q) in a.iter().zip(b) {
        let o = p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y));
        if o.is_ne() {
            return o.is_lt();
        }
    }
    a.len() <= b.len()
}

/// Positive-orientation signed area helper shared with the clipper.
pub(crate) fn signed_area(points: &[Point]) -> f64 {
    0.5 * shoelace(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five(s: &str) -> RotatedBox {
        s.parse().unwrap()
    }

    #[test]
    fn identical_boxes() {
        let a = five("0 0 2 2 -90");
        assert_eq!(rotated_iou(&a, &a).unwrap(), 1.0);
        let b = five("3 -1 7 2 -33");
        assert!((rotated_iou(&b, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_boxes() {
        let a = five("0 0 2 2 -90");
        let b = five("10 0 2 2 -45");
        assert_eq!(rotated_iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_offset_unit_squares() {
        let a = five("0 0 1 1 -90");
        let b = five("0.5 0 1 1 -90");
        let iou = rotated_iou(&a, &b).unwrap();
        assert!((iou - 1.0 / 3.0).abs() < 1e-12, "{iou}");
    }

    #[test]
    fn touching_edges_give_zero() {
        let a = five("0 0 1 1 -90");
        let b = five("1 0 1 1 -90");
        assert_eq!(rotated_iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn mixed_parameterizations() {
        let a = five("0 0 4 2 -30");
        let q = match a {
            RotatedBox::Five(b) => RotatedBox::Quad(five_to_quad(&b).unwrap()),
            _ => unreachable!(),
        };
        assert!((rotated_iou(&a, &q).unwrap() - 1.0).abs() < 1e-12);
        let eight: RotatedBox = "0 0 1 0 1 1 0 1".parse().unwrap();
        assert!(matches!(eight, RotatedBox::Quad(_)));
        assert!("1 2 3".parse::<RotatedBox>().is_err());
    }

    #[test]
    fn symmetric_exactly() {
        let a = five("0.3 0.1 4 2 -30");
        let b = five("1 -0.4 3 5 -71");
        assert_eq!(rotated_iou(&a, &b).unwrap(), rotated_iou(&b, &a).unwrap());
    }
}
