//! Row-major batch entry points over flat `f64` buffers, for callers that
//! hold boxes as arrays (training loops, foreign bindings).

use crate::boxcore::{points_from_flat, EncodedFiveParam, EncodedQuad, FiveParamBox, QuadBox};
use crate::error::{Error, Result};
use crate::geomops::{polygon_iou, RotatedBox};
use crate::losses::{
    grad_l1_5p, grad_l1_8p, grad_lmr_5p, grad_lmr_8p, l1_5p, l1_8p, lmr_5p, lmr_8p, LossKind,
    PenaltyConfig,
};
use crate::par::{self, Exec};

/// Borrowed `rows × cols` matrix, `cols` being 5 (five-parameter) or 8
/// (quad corners / corner offsets).
#[derive(Debug, Clone, Copy)]
pub struct ArrayBatch<'a> {
    data: &'a [f64],
    cols: usize,
}

impl<'a> ArrayBatch<'a> {
    pub fn new(data: &'a [f64], cols: usize) -> Result<Self> {
        if cols != 5 && cols != 8 {
            return Err(Error::ShapeMismatch(format!(
                "rows must have 5 or 8 values, got {cols}"
            )));
        }
        if !data.len().is_multiple_of(cols) {
            return Err(Error::ShapeMismatch(format!(
                "buffer of {} values is not a multiple of {cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("batch entry"));
        }
        Ok(Self { data, cols })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn box_at(&self, i: usize) -> Result<RotatedBox> {
        let r = self.row(i);
        Ok(match self.cols {
            5 => RotatedBox::Five(FiveParamBox::new(r[0], r[1], r[2], r[3], r[4])?),
            _ => RotatedBox::Quad(QuadBox::from_points(points_from_flat(r))?),
        })
    }
}

fn same_rows(a: &ArrayBatch, b: &ArrayBatch, what: &str) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{what}: {} rows vs {} rows",
            a.rows(),
            b.rows()
        )));
    }
    Ok(())
}

/// Row-wise rotated IoU.
pub fn batch_iou(a: &ArrayBatch, b: &ArrayBatch, exec: Exec) -> Result<Vec<f64>> {
    same_rows(a, b, "iou")?;
    par::map_range(exec, a.rows(), |i| {
        Ok(polygon_iou(
            &a.box_at(i)?.to_polygon()?,
            &b.box_at(i)?.to_polygon()?,
        ))
    })
    .into_iter()
    .collect()
}

/// Row-wise loss values and gradients with respect to `pred`.
///
/// `pred` and `gt` hold anchor-relative encodings (`n × 5` as
/// `[t_x, t_y, t_w, t_h, t_theta]`, or `n × 8` corner offsets); `anchors`
/// holds the matching `n × 5` anchor boxes. Gradients come back flattened
/// as `n × k`.
pub fn batch_loss_and_grad(
    pred: &ArrayBatch,
    gt: &ArrayBatch,
    anchors: &ArrayBatch,
    kind: LossKind,
    cfg: PenaltyConfig,
    exec: Exec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = kind.width();
    if pred.cols() != k || gt.cols() != k {
        return Err(Error::ShapeMismatch(format!(
            "loss needs {k} columns, got pred {} / gt {}",
            pred.cols(),
            gt.cols()
        )));
    }
    if anchors.cols() != 5 {
        return Err(Error::ShapeMismatch("anchors must be n × 5".into()));
    }
    same_rows(pred, gt, "pred/gt")?;
    same_rows(pred, anchors, "pred/anchors")?;

    let rows = par::map_range(exec, pred.rows(), |i| -> Result<(f64, Vec<f64>)> {
        let a = anchors.row(i);
        let anchor = FiveParamBox::new(a[0], a[1], a[2], a[3], a[4])?;
        let r = anchor.h() / anchor.w();
        match kind {
            LossKind::L1FiveParam | LossKind::ModulatedFiveParam => {
                let p = EncodedFiveParam::from_array(pred.row(i).try_into().expect("5 cols"), r);
                let g = EncodedFiveParam::from_array(gt.row(i).try_into().expect("5 cols"), r);
                if kind == LossKind::L1FiveParam {
                    Ok((l1_5p(&p, &g, cfg)?, grad_l1_5p(&p, &g, cfg)?.to_vec()))
                } else {
                    Ok((
                        lmr_5p(&p, &g, cfg)?.value,
                        grad_lmr_5p(&p, &g, cfg)?.to_vec(),
                    ))
                }
            }
            LossKind::L1EightParam | LossKind::ModulatedEightParam => {
                let p = EncodedQuad::from_array(pred.row(i).try_into().expect("8 cols"), r);
                let g = EncodedQuad::from_array(gt.row(i).try_into().expect("8 cols"), r);
                if kind == LossKind::L1EightParam {
                    Ok((l1_8p(&p, &g, cfg)?, grad_l1_8p(&p, &g, cfg)?.to_vec()))
                } else {
                    Ok((
                        lmr_8p(&p, &g, cfg)?.value,
                        grad_lmr_8p(&p, &g, cfg)?.to_vec(),
                    ))
                }
            }
        }
    });

    let mut losses = Vec::with_capacity(rows.len());
    let mut grads = Vec::with_capacity(rows.len() * k);
    for row in rows {
        let (l, g) = row?;
        losses.push(l);
        grads.extend(g);
    }
    Ok((losses, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxcore::encode_five;

    #[test]
    fn identical_batches() {
        let data = [0.0, 0.0, 2.0, 2.0, -90.0, 5.0, 5.0, 3.0, 1.0, -20.0];
        let a = ArrayBatch::new(&data, 5).unwrap();
        assert_eq!(batch_iou(&a, &a, Exec::Parallel).unwrap(), vec![1.0, 1.0]);
        let empty = ArrayBatch::new(&[], 5).unwrap();
        assert!(batch_iou(&empty, &empty, Exec::Parallel)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            ArrayBatch::new(&[0.0; 7], 5),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            ArrayBatch::new(&[0.0; 6], 6),
            Err(Error::ShapeMismatch(_))
        ));
        let a = ArrayBatch::new(&[0.0, 0.0, 1.0, 1.0, -90.0], 5).unwrap();
        let b = ArrayBatch::new(&[0.0; 0], 5).unwrap();
        assert!(matches!(
            batch_iou(&a, &b, Exec::Sequential),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn boundary_row() {
        let anchor = FiveParamBox::new(0.0, 0.0, 10.0, 25.0, -90.0).unwrap();
        let p = encode_five(
            &FiveParamBox::new(0.0, 0.0, 10.0, 25.0, -89.0).unwrap(),
            &anchor,
        );
        let g = encode_five(
            &FiveParamBox::new(0.0, 0.0, 25.0, 10.0, -1.0).unwrap(),
            &anchor,
        );
        let (pd, gd, ad) = (p.to_array(), g.to_array(), anchor.to_array());
        let (losses, grads) = batch_loss_and_grad(
            &ArrayBatch::new(&pd, 5).unwrap(),
            &ArrayBatch::new(&gd, 5).unwrap(),
            &ArrayBatch::new(&ad, 5).unwrap(),
            LossKind::ModulatedFiveParam,
            PenaltyConfig::absolute(),
            Exec::Parallel,
        )
        .unwrap();
        assert!((losses[0] - 2f64.to_radians()).abs() < 1e-12);
        assert_eq!(grads.len(), 5);
        let core = grad_lmr_5p(&p, &g, PenaltyConfig::absolute()).unwrap();
        assert_eq!(grads, core.to_vec());
    }

    #[test]
    fn perfect_fit_rows() {
        let anchors = [0.0, 0.0, 10.0, 25.0, -90.0, 1.0, 1.0, 4.0, 4.0, -45.0];
        let enc = [
            0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
        ];
        let e = ArrayBatch::new(&enc, 8).unwrap();
        let a = ArrayBatch::new(&anchors, 5).unwrap();
        let (l, g) = batch_loss_and_grad(
            &e,
            &e,
            &a,
            LossKind::ModulatedEightParam,
            PenaltyConfig::absolute(),
            Exec::Parallel,
        )
        .unwrap();
        assert_eq!(l, vec![0.0, 0.0]);
        assert_eq!(g, vec![0.0; 16]);
        assert!(batch_loss_and_grad(
            &e,
            &e,
            &a,
            LossKind::ModulatedFiveParam,
            PenaltyConfig::absolute(),
            Exec::Parallel
        )
        .is_err());
    }
}
