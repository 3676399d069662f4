//! Rotated-detection evaluation: DOTA annotation ingestion, greedy IoU
//! matching, all-point interpolated AP and mAP.

use std::collections::BTreeMap;

use crate::boxcore::{points_from_flat, QuadBox};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::geomops::{polygon_iou, ConvexPolygon, Detection};
use crate::par::{self, Exec};

/// Default IoU needed for a detection to count as a hit.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRecord {
    pub quad: QuadBox,
    pub category: String,
    pub difficult: bool,
}

/// Parses a DOTA v1.0 label file.
///
/// Each object line is `x1 y1 x2 y2 x3 y3 x4 y4 category difficult`. Lines
/// whose first token is not a number (`imagesource:…`, `gsd:…`) are skipped.
pub fn parse_dota_annotations(text: &str) -> Result<Vec<GroundTruthRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let Some(first) = toks.first() else { continue };
        if first.parse::<f64>().is_err() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine { line, reason };
        if toks.len() != 10 {
            return Err(malformed(format!("expected 10 fields, got {}", toks.len())));
        }
        let coords = toks[..8]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| malformed(format!("bad coordinate {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let quad = QuadBox::from_points(points_from_flat(&coords))
            .map_err(|e| malformed(e.to_string()))?;
        let difficult = match toks[9] {
            "0" => false,
            "1" => true,
            other => {
                return Err(malformed(format!(
                    "difficult flag must be 0 or 1, got {other:?}"
                )))
            }
        };
        out.push(GroundTruthRecord {
            quad,
            category: toks[8].to_string(),
            difficult,
        });
    }
    Ok(out)
}

/// Parses a per-category detection file: `image_id score x1 y1 … x4 y4`.
pub fn parse_category_detections(text: &str, category: &str) -> Result<Vec<(String, Detection)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine {
            line: idx + 1,
            reason,
        };
        if toks.len() != 10 {
            return Err(malformed(format!("expected 10 fields, got {}", toks.len())));
        }
        let nums = toks[1..]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| malformed(format!("bad number {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let quad = QuadBox::from_points(points_from_flat(&nums[1..]))
            .map_err(|e| malformed(e.to_string()))?;
        let det = Detection::new(quad, nums[0], category).map_err(|e| malformed(e.to_string()))?;
        out.push((toks[0].to_string(), det));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchFlag {
    TruePositive,
    FalsePositive,
    /// Hit a difficult object; counts as neither.
    Ignored,
}

struct ImageTargets {
    polys: Vec<ConvexPolygon>,
    difficult: Vec<bool>,
    matched: Vec<bool>,
}

impl ImageTargets {
    fn new(gts: &[&GroundTruthRecord]) -> Self {
        Self {
            polys: gts
                .iter()
                .map(|g| ConvexPolygon::from_quad(&g.quad))
                .collect(),
            difficult: gts.iter().map(|g| g.difficult).collect(),
            matched: vec![false; gts.len()],
        }
    }

    fn assign(&mut self, det: &ConvexPolygon, iou_threshold: f64) -> MatchFlag {
        let mut best: Option<(usize, f64)> = None;
        let mut best_difficult = 0.0f64;
        for (k, poly) in self.polys.iter().enumerate() {
            let iou = polygon_iou(det, poly);
            if self.difficult[k] {
                best_difficult = best_difficult.max(iou);
            } else if !self.matched[k] && best.is_none_or(|(_, b)| iou > b) {
                best = Some((k, iou));
            }
        }
        match best {
            Some((k, iou)) if iou >= iou_threshold => {
                self.matched[k] = true;
                MatchFlag::TruePositive
            }
            _ if best_difficult >= iou_threshold => MatchFlag::Ignored,
            _ => MatchFlag::FalsePositive,
        }
    }
}

fn score_order(dets: &[&Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Greedy matching of one image's detections (one category) against its
/// ground truth. Flags are returned in descending-score order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthRecord],
    iou_threshold: f64,
) -> Result<Vec<MatchFlag>> {
    let refs: Vec<&Detection> = dets.iter().collect();
    let polys = dets
        .iter()
        .map(|d| d.geometry.to_polygon())
        .collect::<Result<Vec<_>>>()?;
    let gt_refs: Vec<&GroundTruthRecord> = gts.iter().collect();
    let mut targets = ImageTargets::new(&gt_refs);
    Ok(score_order(&refs)
        .into_iter()
        .map(|i| targets.assign(&polys[i], iou_threshold))
        .collect())
}

/// Precision/recall points and the area under the precision envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PRCurve {
    pub recalls: Vec<f64>,
    pub precisions: Vec<f64>,
    pub ap: f64,
}

/// All-point interpolated AP over a ranked list of match flags. Ignored
/// entries are dropped before counting.
pub fn average_precision(flags: &[MatchFlag], num_gt: usize) -> Result<PRCurve> {
    if num_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recalls = Vec::new();
    let mut precisions = Vec::new();
    for f in flags {
        match f {
            MatchFlag::TruePositive => tp += 1,
            MatchFlag::FalsePositive => fp += 1,
            MatchFlag::Ignored => continue,
        }
        recalls.push(tp as f64 / num_gt as f64);
        precisions.push(tp as f64 / (tp + fp) as f64);
    }

    // envelope: running max of precision from the right
    let mut envelope = precisions.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recalls.iter().zip(&envelope) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    Ok(PRCurve {
        recalls,
        precisions,
        ap,
    })
}

/// Unweighted mean of per-category AP.
pub fn mean_ap(per_category: &BTreeMap<String, PRCurve>) -> Result<f64> {
    if per_category.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(per_category.values().map(|c| c.ap).sum::<f64>() / per_category.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_category: BTreeMap<String, PRCurve>,
    pub map: f64,
}

impl EvalReport {
    /// `category,ap` rows followed by a final `mAP,value` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("category,ap\n");
        for (cat, curve) in &self.per_category {
            s.push_str(&format!("{cat},{}\n", sig6(curve.ap)));
        }
        s.push_str(&format!("mAP,{}\n", sig6(self.map)));
        s
    }
}

/// Reads a report written by [`EvalReport::to_csv`] back into
/// `(per-category AP, mAP)`.
pub fn parse_report_csv(text: &str) -> Result<(BTreeMap<String, f64>, f64)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "category,ap")) => {}
        _ => {
            return Err(Error::MalformedLine {
                line: 1,
                reason: "expected header \"category,ap\"".into(),
            })
        }
    }
    let mut per = BTreeMap::new();
    let mut map = None;
    for (idx, l) in lines {
        let bad = |reason: &str| Error::MalformedLine {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let (cat, v) = l.rsplit_once(',').ok_or_else(|| bad("missing comma"))?;
        let v: f64 = v.parse().map_err(|_| bad("bad number"))?;
        if cat == "mAP" {
            map = Some(v);
        } else {
            per.insert(cat.to_string(), v);
        }
    }
    Ok((per, map.ok_or(Error::EmptyInput)?))
}

/// Evaluates every category that has at least one non-difficult object.
///
/// `gts` maps image id to its objects; `dets` maps category to
/// `(image_id, detection)` pairs. Categories are evaluated independently
/// (concurrently under [`Exec::Parallel`]) and merged in name order.
pub fn evaluate(
    gts: &BTreeMap<String, Vec<GroundTruthRecord>>,
    dets: &BTreeMap<String, Vec<(String, Detection)>>,
    iou_threshold: f64,
    exec: Exec,
) -> Result<EvalReport> {
    let mut categories: Vec<String> = gts
        .values()
        .flatten()
        .filter(|g| !g.difficult)
        .map(|g| g.category.clone())
        .collect();
    categories.sort();
    categories.dedup();
    if categories.is_empty() {
        return Err(Error::EmptyInput);
    }

    let empty = Vec::new();
    let curves = par::map(exec, &categories, |cat| {
        evaluate_category(cat, gts, dets.get(cat).unwrap_or(&empty), iou_threshold)
    });
    let mut per_category = BTreeMap::new();
    for (cat, curve) in categories.into_iter().zip(curves) {
        per_category.insert(cat, curve?);
    }
    let map = mean_ap(&per_category)?;
    Ok(EvalReport { per_category, map })
}

fn evaluate_category(
    category: &str,
    gts: &BTreeMap<String, Vec<GroundTruthRecord>>,
    dets: &[(String, Detection)],
    iou_threshold: f64,
) -> Result<PRCurve> {
    let mut targets: BTreeMap<&str, ImageTargets> = BTreeMap::new();
    let mut num_gt = 0;
    for (image, records) in gts {
        let own: Vec<&GroundTruthRecord> =
            records.iter().filter(|g| g.category == category).collect();
        num_gt += own.iter().filter(|g| !g.difficult).count();
        targets.insert(image.as_str(), ImageTargets::new(&own));
    }
    let refs: Vec<&Detection> = dets.iter().map(|(_, d)| d).collect();
    let mut flags = Vec::with_capacity(dets.len());
    for i in score_order(&refs) {
        let (image, det) = &dets[i];
        let poly = det.geometry.to_polygon()?;
        let flag = match targets.get_mut(image.as_str()) {
            Some(t) => t.assign(&poly, iou_threshold),
            None => MatchFlag::FalsePositive,
        };
        flags.push(flag);
    }
    average_precision(&flags, num_gt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxcore::FiveParamBox;
    use MatchFlag::*;

    fn quad(s: &str) -> QuadBox {
        s.parse().unwrap()
    }

    fn det(s: &str, score: f64) -> Detection {
        Detection::new(s.parse::<FiveParamBox>().unwrap(), score, "ship").unwrap()
    }

    fn gt(s: &str, difficult: bool) -> GroundTruthRecord {
        let b: FiveParamBox = s.parse().unwrap();
        GroundTruthRecord {
            quad: crate::boxcore::five_to_quad(&b).unwrap(),
            category: "ship".into(),
            difficult,
        }
    }

    #[test]
    fn parse_lines() {
        let text = "imagesource:GoogleEarth\ngsd:0.146\n0 0 10 0 10 5 0 5 ship 0\n\n10 5 0 5 0 0 10 0 plane 1\n";
        let recs = parse_dota_annotations(text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].category, "ship");
        assert!(!recs[0].difficult);
        assert_eq!(recs[0].quad, quad("0 0 10 0 10 5 0 5"));
        assert_eq!(recs[1].quad, recs[0].quad);
        assert!(recs[1].difficult);
    }

    #[test]
    fn malformed_lines() {
        match parse_dota_annotations("imagesource:x\n0 0 10 0 ship 0") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_dota_annotations("0 0 1 0 2 0 3 0 ship 0"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(parse_dota_annotations("0 0 10 0 10 5 0 5 ship x").is_err());
    }

    #[test]
    fn detection_file() {
        let d = parse_category_detections("P0001 0.9 0 0 4 0 4 2 0 2\n", "plane").unwrap();
        assert_eq!(d[0].0, "P0001");
        assert_eq!(d[0].1.category, "plane");
        assert!(parse_category_detections("P0001 0.9 0 0", "plane").is_err());
    }

    #[test]
    fn matching_cases() {
        let gts = vec![gt("0 0 10 10 -90", false)];
        // IoU 0.9: shifted by a fraction of the side
        let shift = 10.0 * (1.0 - 0.9) / (1.0 + 0.9);
        let hit = det(&format!("{shift} 0 10 10 -90"), 0.8);
        assert_eq!(
            match_detections(std::slice::from_ref(&hit), &gts, 0.5).unwrap(),
            vec![TruePositive]
        );

        let dup = det("0 0 10 10 -90", 0.9);
        assert_eq!(
            match_detections(&[hit, dup], &gts, 0.5).unwrap(),
            vec![TruePositive, FalsePositive]
        );

        // IoU 0.4
        let shift = 10.0 * (1.0 - 0.4) / (1.0 + 0.4);
        let miss = det(&format!("{shift} 0 10 10 -90"), 0.8);
        assert_eq!(
            match_detections(&[miss], &gts, 0.5).unwrap(),
            vec![FalsePositive]
        );
    }

    #[test]
    fn difficult_ignored() {
        let gts = vec![gt("0 0 10 10 -90", true)];
        let flags = match_detections(&[det("0 0 10 10 -90", 0.9)], &gts, 0.5).unwrap();
        assert_eq!(flags, vec![Ignored]);
    }

    #[test]
    fn ap_cases() {
        assert_eq!(average_precision(&[TruePositive], 1).unwrap().ap, 1.0);
        let c = average_precision(&[TruePositive, FalsePositive, TruePositive], 2).unwrap();
        assert!((c.ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(c.recalls, vec![0.5, 0.5, 1.0]);
        assert_eq!(
            average_precision(&[FalsePositive, FalsePositive], 1)
                .unwrap()
                .ap,
            0.0
        );
        assert_eq!(average_precision(&[], 3).unwrap().ap, 0.0);
        assert_eq!(
            average_precision(&[TruePositive], 0),
            Err(Error::NoGroundTruth)
        );
        let with_ignored = average_precision(&[TruePositive, Ignored, TruePositive], 2).unwrap();
        assert_eq!(with_ignored.ap, 1.0);
    }

    #[test]
    fn map_cases() {
        let curve = |ap| PRCurve {
            recalls: vec![],
            precisions: vec![],
            ap,
        };
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), curve(1.0));
        assert_eq!(mean_ap(&m).unwrap(), 1.0);
        m.insert("b".to_string(), curve(0.5));
        assert_eq!(mean_ap(&m).unwrap(), 0.75);
        let fifteen: BTreeMap<String, PRCurve> = (0..15)
            .map(|i| (format!("c{i:02}"), curve(i as f64 / 14.0)))
            .collect();
        let expected = (0..15).map(|i| i as f64 / 14.0).sum::<f64>() / 15.0;
        assert!((mean_ap(&fifteen).unwrap() - expected).abs() < 1e-15);
        assert_eq!(mean_ap(&BTreeMap::new()), Err(Error::EmptyInput));
    }

    #[test]
    fn end_to_end_report() {
        let mut gts = BTreeMap::new();
        gts.insert(
            "img1".to_string(),
            parse_dota_annotations("0 0 10 0 10 5 0 5 ship 0\n20 20 30 20 30 30 20 30 plane 0\n")
                .unwrap(),
        );
        gts.insert(
            "img2".to_string(),
            parse_dota_annotations("0 0 10 0 10 5 0 5 ship 0\n").unwrap(),
        );
        let mut dets = BTreeMap::new();
        dets.insert(
            "ship".to_string(),
            parse_category_detections(
                "img1 0.9 0 0 10 0 10 5 0 5\nimg2 0.8 50 50 60 50 60 60 50 60\nimg2 0.7 0 0 10 0 10 5 0 5\n",
                "ship",
            )
            .unwrap(),
        );
        let report = evaluate(&gts, &dets, 0.5, Exec::Parallel).unwrap();
        assert!((report.per_category["ship"].ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(report.per_category["plane"].ap, 0.0);
        let seq = evaluate(&gts, &dets, 0.5, Exec::Sequential).unwrap();
        assert_eq!(report, seq);

        let csv = report.to_csv();
        assert!(csv.starts_with("category,ap\n"));
        assert!(csv
            .trim_end()
            .ends_with(&format!("mAP,{}", sig6(report.map))));
        let (per, map) = parse_report_csv(&csv).unwrap();
        assert_eq!(per.len(), 2);
        assert!((map - report.map).abs() < 1e-5);
    }
}
