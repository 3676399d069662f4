//! Parameter sweeps: IoU as a function of one box parameter, and paired
//! baseline/modulated loss curves around the angle boundary.
//!
//! A sweep is described by a JSON manifest:
//!
//! ```json
//! {
//!   "varied_parameter": "angle",
//!   "range": [-5.0, 5.0],
//!   "step": 0.001,
//!   "base_box": [0, 0, 10, 25, -90],
//!   "loss_kind": "lmr_5p",
//!   "target": [0, 0, 25, 10, -1]
//! }
//! ```
//!
//! `aspect_ratios` (IoU sweeps: one curve per `h / w` ratio), `anchor`
//! (defaults to `base_box`), `target` (defaults to `base_box`), `penalty`
//! (`"absolute"` or `"smooth_l1"`) and `beta` are optional.

use serde::{Deserialize, Serialize};

use crate::boxcore::{encode_five, encode_quad, five_to_quad, FiveParamBox};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::geomops::{polygon_iou, ConvexPolygon};
use crate::losses::{l1_5p, l1_8p, lmr_5p, lmr_8p, PenaltyConfig, DEFAULT_BETA};
use crate::par::{self, Exec};

const MAX_SAMPLES: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariedParameter {
    Angle,
    Width,
    Height,
    Cx,
    Cy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepLoss {
    #[serde(rename = "l1_5p")]
    L1FiveParam,
    #[serde(rename = "lmr_5p")]
    ModulatedFiveParam,
    #[serde(rename = "l1_8p")]
    L1EightParam,
    #[serde(rename = "lmr_8p")]
    ModulatedEightParam,
    Iou,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyName {
    #[default]
    Absolute,
    SmoothL1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub varied_parameter: VariedParameter,
    pub range: [f64; 2],
    pub step: f64,
    pub base_box: [f64; 5],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratios: Option<Vec<f64>>,
    pub loss_kind: SweepLoss,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<[f64; 5]>,
    #[serde(default)]
    pub penalty: PenaltyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    /// Sample positions `lo, lo + step, …` up to and including `hi` when it
    /// falls on the grid.
    pub fn sample_points(&self) -> Result<Vec<f64>> {
        let [lo, hi] = self.range;
        if !(lo.is_finite() && hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidRange("non-finite range or step".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidRange(format!(
                "step must be > 0, got {}",
                self.step
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidRange(format!(
                "need lo < hi, got [{lo}, {hi}]"
            )));
        }
        let n = ((hi - lo) / self.step + 1e-9).floor();
        if n >= MAX_SAMPLES as f64 {
            return Err(Error::InvalidRange(format!(
                "{n} samples exceeds the limit"
            )));
        }
        Ok((0..=n as usize)
            .map(|k| lo + k as f64 * self.step)
            .collect())
    }

    pub fn base(&self) -> Result<FiveParamBox> {
        to_box(self.base_box)
    }

    fn penalty_config(&self) -> Result<PenaltyConfig> {
        match self.penalty {
            PenaltyName::Absolute => Ok(PenaltyConfig::absolute()),
            PenaltyName::SmoothL1 => PenaltyConfig::smooth_l1(self.beta.unwrap_or(DEFAULT_BETA)),
        }
    }
}

fn to_box(v: [f64; 5]) -> Result<FiveParamBox> {
    FiveParamBox::new(v[0], v[1], v[2], v[3], v[4])
}

/// Copy of `base` with one parameter offset by `x` (degrees for the angle,
/// px otherwise), canonicalized.
pub fn vary(base: &FiveParamBox, param: VariedParameter, x: f64) -> Result<FiveParamBox> {
    let [cx, cy, w, h, t] = base.to_array();
    let raw = match param {
        VariedParameter::Angle => [cx, cy, w, h, t + x],
        VariedParameter::Width => [cx, cy, w + x, h, t],
        VariedParameter::Height => [cx, cy, w, h + x, t],
        VariedParameter::Cx => [cx + x, cy, w, h, t],
        VariedParameter::Cy => [cx, cy + x, w, h, t],
    };
    to_box(raw).map_err(|e| match e {
        Error::NonPositiveSize { .. } => {
            Error::InvalidRange(format!("offset {x} makes the box size non-positive"))
        }
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub x: f64,
    pub y: f64,
}

/// IoU between the base box and its varied copy at every sample.
pub fn sweep_iou(spec: &SweepSpec) -> Result<Vec<CurveSample>> {
    sweep_iou_with(spec, Exec::default())
}

pub fn sweep_iou_with(spec: &SweepSpec, exec: Exec) -> Result<Vec<CurveSample>> {
    iou_curve(&spec.base()?, spec, exec)
}

/// One IoU curve per aspect ratio `h / w`; the base box keeps its width.
/// Without `aspect_ratios` the base box's own ratio is used.
pub fn sweep_iou_by_aspect(spec: &SweepSpec, exec: Exec) -> Result<Vec<(f64, Vec<CurveSample>)>> {
    let base = spec.base()?;
    let ratios = spec
        .aspect_ratios
        .clone()
        .unwrap_or_else(|| vec![base.h() / base.w()]);
    ratios
        .into_iter()
        .map(|r| {
            let b = FiveParamBox::new(
                base.cx(),
                base.cy(),
                base.w(),
                base.w() * r,
                base.theta_deg(),
            )?;
            Ok((r, iou_curve(&b, spec, exec)?))
        })
        .collect()
}

fn iou_curve(base: &FiveParamBox, spec: &SweepSpec, exec: Exec) -> Result<Vec<CurveSample>> {
    let xs = spec.sample_points()?;
    let base_poly = ConvexPolygon::from_quad(&five_to_quad(base)?);
    par::map(exec, &xs, |&x| {
        let b = vary(base, spec.varied_parameter, x)?;
        let p = ConvexPolygon::from_quad(&five_to_quad(&b)?);
        Ok(CurveSample {
            x,
            y: polygon_iou(&base_poly, &p),
        })
    })
    .into_iter()
    .collect()
}

/// Paired loss curves: the unmodulated baseline and the modulated loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurves {
    pub baseline: Vec<CurveSample>,
    pub modulated: Vec<CurveSample>,
}

/// Loss of the varied box against a fixed target, through both the
/// baseline and modulated losses of the system picked by `loss_kind`.
pub fn sweep_boundary_loss(spec: &SweepSpec) -> Result<BoundaryCurves> {
    sweep_boundary_loss_with(spec, Exec::default())
}

/// `(baseline, modulated)` loss of one varied box.
type PairEval = dyn Fn(&FiveParamBox) -> Result<(f64, f64)> + Sync + Send;

pub fn sweep_boundary_loss_with(spec: &SweepSpec, exec: Exec) -> Result<BoundaryCurves> {
    let base = spec.base()?;
    let target = spec.target.map(to_box).transpose()?.unwrap_or(base);
    let anchor = spec.anchor.map(to_box).transpose()?.unwrap_or(base);
    let cfg = spec.penalty_config()?;
    let xs = spec.sample_points()?;

    let eval: Box<PairEval> = match spec.loss_kind {
        SweepLoss::L1FiveParam | SweepLoss::ModulatedFiveParam => {
            let gt = encode_five(&target, &anchor);
            Box::new(move |b| {
                let p = encode_five(b, &anchor);
                Ok((l1_5p(&p, &gt, cfg)?, lmr_5p(&p, &gt, cfg)?.value))
            })
        }
        SweepLoss::L1EightParam | SweepLoss::ModulatedEightParam => {
            let gt = encode_quad(&five_to_quad(&target)?, &anchor)?;
            Box::new(move |b| {
                let p = encode_quad(&five_to_quad(b)?, &anchor)?;
                Ok((l1_8p(&p, &gt, cfg)?, lmr_8p(&p, &gt, cfg)?.value))
            })
        }
        SweepLoss::Iou => {
            return Err(Error::InvalidSpec(
                "loss_kind \"iou\" has no baseline/modulated pair; use an IoU sweep".into(),
            ))
        }
    };

    let pairs = par::map(exec, &xs, |&x| {
        let b = vary(&base, spec.varied_parameter, x)?;
        eval(&b).map(|(l1, lmr)| (x, l1, lmr))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryCurves {
        baseline: pairs
            .iter()
            .map(|&(x, y, _)| CurveSample { x, y })
            .collect(),
        modulated: pairs
            .iter()
            .map(|&(x, _, y)| CurveSample { x, y })
            .collect(),
    })
}

/// Largest `|y[k+1] − y[k]|` along a curve.
pub fn max_adjacent_gap(samples: &[CurveSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| (w[1].y - w[0].y).abs())
        .fold(0.0, f64::max)
}

/// Runs the sweep described by `spec` and renders it as CSV.
pub fn run_sweep(spec: &SweepSpec, exec: Exec) -> Result<String> {
    match spec.loss_kind {
        SweepLoss::Iou if spec.aspect_ratios.is_some() => {
            let curves = sweep_iou_by_aspect(spec, exec)?;
            Ok(iou_by_aspect_csv(&curves))
        }
        SweepLoss::Iou => Ok(iou_csv(&sweep_iou_with(spec, exec)?)),
        _ => Ok(boundary_csv(&sweep_boundary_loss_with(spec, exec)?)),
    }
}

pub fn boundary_csv(c: &BoundaryCurves) -> String {
    let mut s = String::from("x,y_baseline,y_modulated\n");
    for (b, m) in c.baseline.iter().zip(&c.modulated) {
        s.push_str(&format!("{},{},{}\n", sig6(b.x), sig6(b.y), sig6(m.y)));
    }
    s
}

pub fn iou_csv(samples: &[CurveSample]) -> String {
    let mut s = String::from("x,iou\n");
    for p in samples {
        s.push_str(&format!("{},{}\n", sig6(p.x), sig6(p.y)));
    }
    s
}

pub fn iou_by_aspect_csv(curves: &[(f64, Vec<CurveSample>)]) -> String {
    let mut s = String::from("x");
    for (r, _) in curves {
        s.push_str(&format!(",iou_ar{}", sig6(*r)));
    }
    s.push('\n');
    let n = curves.first().map_or(0, |c| c.1.len());
    for k in 0..n {
        s.push_str(&sig6(curves[0].1[k].x));
        for (_, c) in curves {
            s.push(',');
            s.push_str(&sig6(c[k].y));
        }
        s.push('\n');
    }
    s
}

/// Parses any CSV written by this module into its header and numeric rows.
pub fn parse_curve_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or(Error::EmptyInput)?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (idx, l) in lines.enumerate() {
        if l.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedLine {
            line: idx + 2,
            reason,
        };
        let row = l
            .split(',')
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| bad(format!("bad number {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(bad(format!(
                "expected {} columns, got {}",
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> SweepSpec {
        SweepSpec::from_json(json).unwrap()
    }

    #[test]
    fn square_angle_symmetry() {
        let s = spec(
            r#"{"varied_parameter":"angle","range":[0,90],"step":1,"base_box":[0,0,4,4,-45],"loss_kind":"iou"}"#,
        );
        let c = sweep_iou(&s).unwrap();
        assert_eq!(c.len(), 91);
        assert!((c[0].y - 1.0).abs() < 1e-12);
        assert!((c[90].y - 1.0).abs() < 1e-12);
        assert!(c[45].y < 0.9);
    }

    #[test]
    fn center_sweep_matches_rectangle_overlap() {
        let s = spec(
            r#"{"varied_parameter":"cx","range":[-1,1],"step":0.125,"base_box":[0,0,1,1,-90],"loss_kind":"iou"}"#,
        );
        let c = sweep_iou(&s).unwrap();
        assert_eq!(c.len(), 17);
        for p in &c {
            let o = (1.0 - p.x.abs()).max(0.0);
            let expected = o / (2.0 - o);
            assert!((p.y - expected).abs() < 1e-12, "{p:?}");
        }
        assert_eq!(c[8].x, 0.0);
        assert!((c[8].y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_reflection_symmetry() {
        let s = spec(
            r#"{"varied_parameter":"angle","range":[-40,40],"step":0.5,"base_box":[3,1,10,25,-30],"loss_kind":"iou"}"#,
        );
        let c = sweep_iou(&s).unwrap();
        let n = c.len();
        for k in 0..n {
            assert!((c[k].y - c[n - 1 - k].y).abs() < 1e-9);
        }
    }

    #[test]
    fn aspect_ratio_curves() {
        let s = spec(
            r#"{"varied_parameter":"angle","range":[0,90],"step":5,"base_box":[0,0,10,10,-90],"aspect_ratios":[1,2.5,5],"loss_kind":"iou"}"#,
        );
        let curves = sweep_iou_by_aspect(&s, Exec::Parallel).unwrap();
        assert_eq!(curves.len(), 3);
        // at 45° the thinner box loses more overlap
        assert!(curves[0].1[9].y > curves[1].1[9].y && curves[1].1[9].y > curves[2].1[9].y);
        let csv = run_sweep(&s, Exec::Sequential).unwrap();
        let (header, rows) = parse_curve_csv(&csv).unwrap();
        assert_eq!(header, vec!["x", "iou_ar1.0", "iou_ar2.5", "iou_ar5.0"]);
        assert_eq!(rows.len(), 19);
    }

    const BOUNDARY: &str = r#"{"varied_parameter":"angle","range":[-5,5],"step":0.5,"base_box":[0,0,10,25,-90],"loss_kind":"lmr_5p","target":[0,0,25,10,-1]}"#;

    #[test]
    fn boundary_crossing_values() {
        let c = sweep_boundary_loss(&spec(BOUNDARY)).unwrap();
        // x = +1 reproduces the (10, 25, -89) prediction
        let k = c.baseline.iter().position(|p| p.x == 1.0).unwrap();
        let straight = 2.0 * 2.5f64.ln() + 88f64.to_radians();
        assert!((c.baseline[k].y - straight).abs() < 1e-12);
        assert!((c.modulated[k].y - 2f64.to_radians()).abs() < 1e-12);
        assert!(max_adjacent_gap(&c.baseline) > 1.0);
        assert!(max_adjacent_gap(&c.modulated) <= 0.5f64.to_radians() + 1e-12);
    }

    #[test]
    fn curves_coincide_away_from_boundary() {
        let s = spec(
            r#"{"varied_parameter":"angle","range":[-30,-20],"step":0.5,"base_box":[0,0,10,25,-45],"loss_kind":"lmr_5p"}"#,
        );
        let c = sweep_boundary_loss(&s).unwrap();
        for (b, m) in c.baseline.iter().zip(&c.modulated) {
            assert_eq!(b.y, m.y);
        }
    }

    #[test]
    fn eight_param_boundary() {
        let s = spec(&BOUNDARY.replace("lmr_5p", "lmr_8p"));
        let c = sweep_boundary_loss(&s).unwrap();
        assert!(max_adjacent_gap(&c.baseline) > 1.0);
        // per-vertex offsets: the modulated curve never exceeds the baseline,
        // but the re-indexing jump is not removed
        for (m, b) in c.modulated.iter().zip(&c.baseline) {
            assert!(m.y <= b.y);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(BOUNDARY);
        s.step = 0.0;
        assert!(matches!(
            sweep_boundary_loss(&s),
            Err(Error::InvalidRange(_))
        ));
        let mut s = spec(BOUNDARY);
        s.range = [1.0, -1.0];
        assert!(matches!(s.sample_points(), Err(Error::InvalidRange(_))));
        let mut s = spec(BOUNDARY);
        s.loss_kind = SweepLoss::Iou;
        assert!(matches!(
            sweep_boundary_loss(&s),
            Err(Error::InvalidSpec(_))
        ));
        let s = spec(
            r#"{"varied_parameter":"width","range":[-20,0],"step":1,"base_box":[0,0,10,25,-90],"loss_kind":"iou"}"#,
        );
        assert!(matches!(sweep_iou(&s), Err(Error::InvalidRange(_))));
        assert!(SweepSpec::from_json(r#"{"varied_parameter":"spin"}"#).is_err());
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let s = spec(BOUNDARY);
        let a = run_sweep(&s, Exec::Parallel).unwrap();
        let b = run_sweep(&s, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        let (header, rows) = parse_curve_csv(&a).unwrap();
        assert_eq!(header, vec!["x", "y_baseline", "y_modulated"]);
        assert_eq!(rows.len(), 21);
        assert_eq!(rows[0][0], -5.0);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(SweepSpec::from_json(&json).unwrap(), s);
    }
}
