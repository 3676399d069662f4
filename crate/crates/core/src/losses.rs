//! Regression losses for rotated boxes.
//!
//! Both modulated losses evaluate a small set of candidate correspondences
//! between prediction and target (a width/height exchange for five
//! parameters, cyclic corner shifts for eight) and return the cheapest one.
//! Each branch sum is built from the same elementwise penalty, so the plain
//! absolute form and the smooth-ℓ1 variant share one code path.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::boxcore::{EncodedFiveParam, EncodedQuad, FiveParamBox};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Smooth-ℓ1 transition point used when none is given.
pub const DEFAULT_BETA: f64 = 1.0 / 9.0;

const ANCHOR_RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    Absolute,
    SmoothL1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    kind: PenaltyKind,
    beta: f64,
}

impl PenaltyConfig {
    pub const fn absolute() -> Self {
        Self {
            kind: PenaltyKind::Absolute,
            beta: DEFAULT_BETA,
        }
    }

    pub fn smooth_l1(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidRange(format!(
                "smooth-l1 beta must be > 0, got {beta}"
            )));
        }
        Ok(Self {
            kind: PenaltyKind::SmoothL1,
            beta,
        })
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self::absolute()
    }
}

/// Elementwise penalty: `|d|`, or smooth-ℓ1 (`0.5 d²/β` inside `|d| < β`,
/// `|d| − 0.5β` outside).
#[inline]
pub fn penalty(d: f64, cfg: PenaltyConfig) -> f64 {
    match cfg.kind {
        PenaltyKind::Absolute => d.abs(),
        PenaltyKind::SmoothL1 => {
            let a = d.abs();
            if a < cfg.beta {
                0.5 * d * d / cfg.beta
            } else {
                a - 0.5 * cfg.beta
            }
        }
    }
}

/// Derivative of [`penalty`]; 0 at the kink of `|d|`.
#[inline]
pub fn penalty_grad(d: f64, cfg: PenaltyConfig) -> f64 {
    match cfg.kind {
        PenaltyKind::Absolute => sign(d),
        PenaltyKind::SmoothL1 => {
            if d.abs() < cfg.beta {
                d / cfg.beta
            } else {
                sign(d)
            }
        }
    }
}

#[inline]
fn sign(d: f64) -> f64 {
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Which candidate correspondence produced the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Straight,
    Swapped,
    ShiftBack,
    NoShift,
    ShiftForward,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Straight => "straight",
            Branch::Swapped => "swapped",
            Branch::ShiftBack => "shift-back",
            Branch::NoShift => "no-shift",
            Branch::ShiftForward => "shift-forward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub branch: Branch,
}

fn check_anchor(r1: f64, r2: f64) -> Result<()> {
    if (r1 - r2).abs() > ANCHOR_RATIO_TOL * r1.abs().max(r2.abs()).max(1.0) {
        return Err(Error::AnchorMismatch {
            left: r1,
            right: r2,
        });
    }
    Ok(())
}

// Summation order is fixed so that exchanging pred and gt, which exchanges
// the two size terms of the swapped branch, gives bit-identical sums.
#[inline]
fn sum5(p: [f64; 5]) -> f64 {
    ((p[0] + p[1]) + (p[2] + p[3])) + p[4]
}

fn straight_diffs(pred: &EncodedFiveParam, gt: &EncodedFiveParam) -> [f64; 5] {
    [
        pred.t_x - gt.t_x,
        pred.t_y - gt.t_y,
        pred.t_w - gt.t_w,
        pred.t_h - gt.t_h,
        pred.t_theta - gt.t_theta,
    ]
}

fn swapped_diffs(pred: &EncodedFiveParam, gt: &EncodedFiveParam) -> [f64; 5] {
    let log_r = pred.anchor_ratio_r.ln();
    [
        pred.t_x - gt.t_x,
        pred.t_y - gt.t_y,
        (pred.t_w - gt.t_h) - log_r,
        (pred.t_h - gt.t_w) + log_r,
        (pred.t_theta - gt.t_theta).abs() - FRAC_PI_2,
    ]
}

/// Straight and swapped branch sums of the five-parameter modulated loss.
pub fn branches_5p(
    pred: &EncodedFiveParam,
    gt: &EncodedFiveParam,
    cfg: PenaltyConfig,
) -> Result<[f64; 2]> {
    check_anchor(pred.anchor_ratio_r, gt.anchor_ratio_r)?;
    let s = straight_diffs(pred, gt).map(|d| penalty(d, cfg));
    let w = swapped_diffs(pred, gt).map(|d| penalty(d, cfg));
    Ok([sum5(s), sum5(w)])
}

/// Five-parameter modulated rotation loss on anchor-relative encodings.
///
/// Ties go to the straight branch.
pub fn lmr_5p(
    pred: &EncodedFiveParam,
    gt: &EncodedFiveParam,
    cfg: PenaltyConfig,
) -> Result<LossValue> {
    let [straight, swapped] = branches_5p(pred, gt, cfg)?;
    Ok(if swapped < straight {
        LossValue {
            value: swapped,
            branch: Branch::Swapped,
        }
    } else {
        LossValue {
            value: straight,
            branch: Branch::Straight,
        }
    })
}

/// Unmodulated baseline: the straight branch alone.
pub fn l1_5p(pred: &EncodedFiveParam, gt: &EncodedFiveParam, cfg: PenaltyConfig) -> Result<f64> {
    Ok(branches_5p(pred, gt, cfg)?[0])
}

/// Modulated loss on raw box parameters, angles in degrees, absolute
/// differences throughout.
pub fn lmr_5p_unnormalized(pred: &FiveParamBox, gt: &FiveParamBox) -> LossValue {
    let center = (pred.cx() - gt.cx()).abs() + (pred.cy() - gt.cy()).abs();
    let dtheta = (pred.theta_deg() - gt.theta_deg()).abs();
    let straight = center + ((pred.w() - gt.w()).abs() + (pred.h() - gt.h()).abs()) + dtheta;
    let swapped =
        center + ((pred.w() - gt.h()).abs() + (pred.h() - gt.w()).abs()) + (90.0 - dtheta).abs();
    if swapped < straight {
        LossValue {
            value: swapped,
            branch: Branch::Swapped,
        }
    } else {
        LossValue {
            value: straight,
            branch: Branch::Straight,
        }
    }
}

/// Subgradient of [`lmr_5p`] with respect to `[t_x, t_y, t_w, t_h, t_theta]`
/// of the prediction, taken on the selected branch.
pub fn grad_lmr_5p(
    pred: &EncodedFiveParam,
    gt: &EncodedFiveParam,
    cfg: PenaltyConfig,
) -> Result<[f64; 5]> {
    let loss = lmr_5p(pred, gt, cfg)?;
    Ok(match loss.branch {
        Branch::Swapped => {
            let d = swapped_diffs(pred, gt);
            let mut g = d.map(|v| penalty_grad(v, cfg));
            g[4] *= sign(pred.t_theta - gt.t_theta);
            g
        }
        _ => straight_diffs(pred, gt).map(|v| penalty_grad(v, cfg)),
    })
}

/// Gradient of [`l1_5p`].
pub fn grad_l1_5p(
    pred: &EncodedFiveParam,
    gt: &EncodedFiveParam,
    cfg: PenaltyConfig,
) -> Result<[f64; 5]> {
    check_anchor(pred.anchor_ratio_r, gt.anchor_ratio_r)?;
    Ok(straight_diffs(pred, gt).map(|v| penalty_grad(v, cfg)))
}

const SHIFTS: [(Branch, usize); 3] = [
    (Branch::ShiftBack, 3),
    (Branch::NoShift, 0),
    (Branch::ShiftForward, 1),
];

fn shift_sum(pred: &EncodedQuad, gt: &EncodedQuad, shift: usize, cfg: PenaltyConfig) -> f64 {
    let mut terms = [0.0; 4];
    for (i, t) in terms.iter_mut().enumerate() {
        let p = pred.offsets[(i + shift) % 4];
        let g = gt.offsets[i];
        *t = penalty(p[0] - g[0], cfg) + penalty(p[1] - g[1], cfg);
    }
    // order-independent so relabelled corners give identical sums
    terms.sort_by(f64::total_cmp);
    ((terms[0] + terms[1]) + terms[2]) + terms[3]
}

/// Sums of the three corner correspondences, in the order
/// shift-back, no-shift, shift-forward.
pub fn branches_8p(pred: &EncodedQuad, gt: &EncodedQuad, cfg: PenaltyConfig) -> Result<[f64; 3]> {
    check_anchor(pred.anchor_ratio_r, gt.anchor_ratio_r)?;
    Ok(SHIFTS.map(|(_, s)| shift_sum(pred, gt, s, cfg)))
}

fn select_8p(sums: [f64; 3]) -> (Branch, usize, f64) {
    // no-shift first, then shift-back, then shift-forward
    let mut best = (Branch::NoShift, 0, sums[1]);
    for (k, (branch, shift)) in [(0, SHIFTS[0]), (2, SHIFTS[2])] {
        if sums[k] < best.2 {
            best = (branch, shift, sums[k]);
        }
    }
    best
}

/// Eight-parameter modulated rotation loss on corner offsets.
pub fn lmr_8p(pred: &EncodedQuad, gt: &EncodedQuad, cfg: PenaltyConfig) -> Result<LossValue> {
    let (branch, _, value) = select_8p(branches_8p(pred, gt, cfg)?);
    Ok(LossValue { value, branch })
}

/// Unmodulated baseline: corners matched index to index.
pub fn l1_8p(pred: &EncodedQuad, gt: &EncodedQuad, cfg: PenaltyConfig) -> Result<f64> {
    check_anchor(pred.anchor_ratio_r, gt.anchor_ratio_r)?;
    Ok(shift_sum(pred, gt, 0, cfg))
}

fn grad_shift(pred: &EncodedQuad, gt: &EncodedQuad, shift: usize, cfg: PenaltyConfig) -> [f64; 8] {
    let mut g = [0.0; 8];
    for i in 0..4 {
        let j = (i + shift) % 4;
        let (p, t) = (pred.offsets[j], gt.offsets[i]);
        g[2 * j] = penalty_grad(p[0] - t[0], cfg);
        g[2 * j + 1] = penalty_grad(p[1] - t[1], cfg);
    }
    g
}

/// Subgradient of [`lmr_8p`] with respect to the prediction's flattened
/// offsets `[dx0, dy0, …, dx3, dy3]`.
pub fn grad_lmr_8p(pred: &EncodedQuad, gt: &EncodedQuad, cfg: PenaltyConfig) -> Result<[f64; 8]> {
    let (_, shift, _) = select_8p(branches_8p(pred, gt, cfg)?);
    Ok(grad_shift(pred, gt, shift, cfg))
}

/// Gradient of [`l1_8p`].
pub fn grad_l1_8p(pred: &EncodedQuad, gt: &EncodedQuad, cfg: PenaltyConfig) -> Result<[f64; 8]> {
    check_anchor(pred.anchor_ratio_r, gt.anchor_ratio_r)?;
    Ok(grad_shift(pred, gt, 0, cfg))
}

/// Loss selector used by the CLI, sweeps and batch bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L1FiveParam,
    ModulatedFiveParam,
    L1EightParam,
    ModulatedEightParam,
}

impl LossKind {
    /// Number of regressed values per box.
    pub fn width(self) -> usize {
        match self {
            LossKind::L1FiveParam | LossKind::ModulatedFiveParam => 5,
            LossKind::L1EightParam | LossKind::ModulatedEightParam => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

/// Reduces per-pair losses. The result is identical whichever [`Exec`] is
/// used: values are collected in input order and summed sequentially.
pub fn batch_loss<T, F>(pairs: &[(T, T)], reduction: Reduction, exec: Exec, loss: F) -> Result<f64>
where
    T: Sync,
    F: Fn(&T, &T) -> Result<f64> + Sync + Send,
{
    if pairs.is_empty() {
        return match reduction {
            Reduction::Sum => Ok(0.0),
            Reduction::Mean => Err(Error::EmptyBatch),
        };
    }
    let values = par::map(exec, pairs, |(p, g)| loss(p, g))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = values.iter().sum();
    Ok(match reduction {
        Reduction::Sum => total,
        Reduction::Mean => total / values.len() as f64,
    })
}
