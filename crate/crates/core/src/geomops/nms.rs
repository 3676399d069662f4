use std::str::FromStr;

use super::{polygon_iou, ConvexPolygon, RotatedBox};
use crate::boxcore::{points_from_flat, QuadBox};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::par::{self, Exec};

/// A scored, labelled box.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub geometry: RotatedBox,
    pub score: f64,
    pub category: String,
}

impl Detection {
    pub fn new(
        geometry: impl Into<RotatedBox>,
        score: f64,
        category: impl Into<String>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        Ok(Self {
            geometry: geometry.into(),
            score,
            category: category.into(),
        })
    }

    /// `"category score x1 y1 x2 y2 x3 y3 x4 y4"`.
    pub fn to_line(&self) -> Result<String> {
        let q = self.geometry.to_quad()?;
        let coords: Vec<String> = q.to_array().iter().map(|v| sig6(*v)).collect();
        Ok(format!(
            "{} {} {}",
            self.category,
            sig6(self.score),
            coords.join(" ")
        ))
    }
}

impl FromStr for Detection {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |reason: String| Error::ParseBox {
            input: line.to_string(),
            reason,
        };
        if toks.len() != 10 {
            return Err(bad(format!("expected 10 fields, got {}", toks.len())));
        }
        let nums = toks[1..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let quad = QuadBox::from_points(points_from_flat(&nums[1..]))?;
        Detection::new(quad, nums[0], toks[0])
    }
}

/// Greedy rotated NMS; returns indices of the kept detections in
/// descending-score order. Suppression only happens within a category.
pub fn rotated_nms_indices(dets: &[Detection], iou_threshold: f64) -> Result<Vec<usize>> {
    let polys = dets
        .iter()
        .map(|d| d.geometry.to_polygon())
        .collect::<Result<Vec<ConvexPolygon>>>()?;
    let mut order: Vec<usize> = (0..dets.len()).collect();
    // stable: equal scores keep input order
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let suppressed = kept.iter().any(|&k| {
            dets[k].category == dets[i].category
                && polygon_iou(&polys[k], &polys[i]) > iou_threshold
        });
        if !suppressed {
            kept.push(i);
        }
    }
    Ok(kept)
}

pub fn rotated_nms(dets: &[Detection], iou_threshold: f64) -> Result<Vec<Detection>> {
    Ok(rotated_nms_indices(dets, iou_threshold)?
        .into_iter()
        .map(|i| dets[i].clone())
        .collect())
}

/// Runs NMS independently on each image's detections.
pub fn batch_nms(
    images: &[Vec<Detection>],
    iou_threshold: f64,
    exec: Exec,
) -> Result<Vec<Vec<Detection>>> {
    par::map(exec, images, |dets| rotated_nms(dets, iou_threshold))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxcore::FiveParamBox;

    fn det(s: &str, score: f64, cat: &str) -> Detection {
        Detection::new(s.parse::<FiveParamBox>().unwrap(), score, cat).unwrap()
    }

    #[test]
    fn single_kept() {
        let d = vec![det("0 0 2 2 -90", 0.5, "ship")];
        assert_eq!(rotated_nms_indices(&d, 0.5).unwrap(), vec![0]);
    }

    #[test]
    fn duplicate_suppressed() {
        let d = vec![
            det("0 0 2 2 -90", 0.8, "ship"),
            det("0 0 2 2 -90", 0.9, "ship"),
        ];
        let kept = rotated_nms(&d, 0.5).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn chain_keeps_ends() {
        // Unit squares stepped by 3/7 along y: neighbours overlap with
        // IoU (4/7) / (10/7) = 0.4, the two ends with IoU 1/13.
        let step = 3.0 / 7.0;
        let a = det("0 0 1 1 -90", 0.9, "car");
        let b = det(&format!("0 {step} 1 1 -90"), 0.8, "car");
        let c = det(&format!("0 {} 1 1 -90", 2.0 * step), 0.7, "car");
        let iou = |x: &Detection, y: &Detection| {
            crate::geomops::rotated_iou(&x.geometry, &y.geometry).unwrap()
        };
        assert!((iou(&a, &b) - 0.4).abs() < 1e-12);
        assert!((iou(&b, &c) - 0.4).abs() < 1e-12);
        assert!((iou(&a, &c) - 1.0 / 13.0).abs() < 1e-12);
        let d = vec![c, a, b];
        assert_eq!(rotated_nms_indices(&d, 0.3).unwrap(), vec![1, 0]);
    }

    #[test]
    fn categories_independent() {
        let d = vec![
            det("0 0 2 2 -90", 0.9, "ship"),
            det("0 0 2 2 -90", 0.8, "plane"),
        ];
        assert_eq!(rotated_nms_indices(&d, 0.5).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ties_follow_input_order() {
        let d = vec![det("0 0 2 2 -90", 0.5, "x"), det("0 0 2 2 -90", 0.5, "x")];
        assert_eq!(rotated_nms_indices(&d, 0.3).unwrap(), vec![0]);
    }

    #[test]
    fn score_validation_and_parsing() {
        assert!(matches!(
            Detection::new("0 0 1 1 -90".parse::<FiveParamBox>().unwrap(), 1.5, "x"),
            Err(Error::InvalidScore(_))
        ));
        let d: Detection = "plane 0.75 0 0 4 0 4 2 0 2".parse().unwrap();
        assert_eq!(d.category, "plane");
        assert_eq!(
            d.to_line().unwrap(),
            "plane 0.75 0.0 0.0 4.0 0.0 4.0 2.0 0.0 2.0"
        );
        assert!("plane 0.75 0 0 4 0".parse::<Detection>().is_err());
    }

    #[test]
    fn batch_matches_per_image() {
        let images = vec![
            vec![det("0 0 2 2 -90", 0.9, "a"), det("0.1 0 2 2 -90", 0.8, "a")],
            vec![det("5 5 3 1 -10", 0.4, "b")],
        ];
        let out = batch_nms(&images, 0.5, Exec::Parallel).unwrap();
        assert_eq!(out[0].len(), 1);
        assert_eq!(out[1].len(), 1);
        assert_eq!(out, batch_nms(&images, 0.5, Exec::Sequential).unwrap());
    }
}
