//! Rotated bounding-box toolkit.
//!
//! Five-parameter (OpenCV-style) and eight-parameter (clockwise quadrilateral)
//! box representations, the modulated rotation losses for both systems,
//! exact rotated IoU, rotated NMS, DOTA-style mAP evaluation and the numeric
//! sweeps used to study loss behaviour at the angle boundary.

pub mod batch;
pub mod boxcore;
pub mod error;
pub mod evalkit;
pub mod fmt;
pub mod geomops;
pub mod landscape;
pub mod losses;
pub mod par;

pub use boxcore::{
    canonicalize_five_param, decode_five, decode_quad, encode_five, encode_quad, five_to_quad,
    order_vertices, quad_to_five, to_long_side_convention, EncodedFiveParam, EncodedQuad,
    FiveParamBox, LongSideBox, Point, QuadBox,
};
pub use error::{Error, Result};
pub use geomops::{
    polygon_area, polygon_clip, rotated_iou, rotated_nms, ConvexPolygon, Detection, RotatedBox,
};
pub use losses::{
    grad_lmr_5p, grad_lmr_8p, l1_5p, l1_8p, lmr_5p, lmr_5p_unnormalized, lmr_8p, penalty, Branch,
    LossValue, PenaltyConfig, PenaltyKind,
};
pub use par::Exec;
