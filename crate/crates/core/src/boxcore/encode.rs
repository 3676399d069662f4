//! Anchor-relative regression targets for both box systems.

use super::{canonicalize_five_param, five_to_quad, order_vertices, FiveParamBox, Point, QuadBox};
use crate::error::{Error, Result};

/// Five-parameter offsets of a box relative to an anchor.
///
/// `t_theta` is in radians. `anchor_ratio_r` is the anchor's `h / w` and is
/// carried along so losses can undo the width/height exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedFiveParam {
    pub t_x: f64,
    pub t_y: f64,
    pub t_w: f64,
    pub t_h: f64,
    pub t_theta: f64,
    pub anchor_ratio_r: f64,
}

impl EncodedFiveParam {
    /// The regressed components `[t_x, t_y, t_w, t_h, t_theta]`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.t_x, self.t_y, self.t_w, self.t_h, self.t_theta]
    }

    pub fn from_array(t: [f64; 5], anchor_ratio_r: f64) -> Self {
        Self {
            t_x: t[0],
            t_y: t[1],
            t_w: t[2],
            t_h: t[3],
            t_theta: t[4],
            anchor_ratio_r,
        }
    }
}

/// Per-corner offsets of a quad relative to the anchor's corners, scaled by
/// the anchor's `w` (x offsets) and `h` (y offsets).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedQuad {
    pub offsets: [[f64; 2]; 4],
    pub anchor_ratio_r: f64,
}

impl EncodedQuad {
    /// Offsets flattened to `[dx0, dy0, dx1, dy1, dx2, dy2, dx3, dy3]`.
    pub fn to_array(&self) -> [f64; 8] {
        let o = &self.offsets;
        [
            o[0][0], o[0][1], o[1][0], o[1][1], o[2][0], o[2][1], o[3][0], o[3][1],
        ]
    }

    pub fn from_array(t: [f64; 8], anchor_ratio_r: f64) -> Self {
        Self {
            offsets: [[t[0], t[1]], [t[2], t[3]], [t[4], t[5]], [t[6], t[7]]],
            anchor_ratio_r,
        }
    }
}

pub fn encode_five(b: &FiveParamBox, anchor: &FiveParamBox) -> EncodedFiveParam {
    EncodedFiveParam {
        t_x: (b.cx() - anchor.cx()) / anchor.w(),
        t_y: (b.cy() - anchor.cy()) / anchor.h(),
        t_w: (b.w() / anchor.w()).ln(),
        t_h: (b.h() / anchor.h()).ln(),
        t_theta: b.theta_deg().to_radians(),
        anchor_ratio_r: anchor.h() / anchor.w(),
    }
}

pub fn decode_five(enc: &EncodedFiveParam, anchor: &FiveParamBox) -> Result<FiveParamBox> {
    let w = anchor.w() * enc.t_w.exp();
    let h = anchor.h() * enc.t_h.exp();
    if !w.is_finite() || !h.is_finite() {
        return Err(Error::NonFinite("decoded box size"));
    }
    canonicalize_five_param(
        enc.t_x * anchor.w() + anchor.cx(),
        enc.t_y * anchor.h() + anchor.cy(),
        w,
        h,
        enc.t_theta.to_degrees(),
    )
}

pub fn encode_quad(quad: &QuadBox, anchor: &FiveParamBox) -> Result<EncodedQuad> {
    let reference = five_to_quad(anchor)?;
    let mut offsets = [[0.0; 2]; 4];
    for (o, (p, a)) in offsets
        .iter_mut()
        .zip(quad.corners().iter().zip(reference.corners()))
    {
        *o = [(p.x - a.x) / anchor.w(), (p.y - a.y) / anchor.h()];
    }
    Ok(EncodedQuad {
        offsets,
        anchor_ratio_r: anchor.h() / anchor.w(),
    })
}

pub fn decode_quad(enc: &EncodedQuad, anchor: &FiveParamBox) -> Result<QuadBox> {
    let reference = five_to_quad(anchor)?;
    let mut pts = [Point::default(); 4];
    for (p, (o, a)) in pts
        .iter_mut()
        .zip(enc.offsets.iter().zip(reference.corners()))
    {
        *p = Point::new(o[0] * anchor.w() + a.x, o[1] * anchor.h() + a.y);
    }
    order_vertices(pts)
}
