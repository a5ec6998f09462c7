//! Disparity error metrics.
//!
//! Thresholds are strict: Bad-n counts errors *above* `n`, and a D1 pixel is
//! correct when its error is *below* 3 px or below 5% of the true disparity.

use crate::error::{check_dims, Error, Result};
use crate::grid::{DisparityField, Mask};

fn masked_errors<'a>(
    est: &'a DisparityField,
    gt: &'a DisparityField,
    mask: Option<&'a Mask>,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    check_dims("metric estimate", gt.dims(), est.dims())?;
    if let Some(m) = mask {
        check_dims("metric mask", gt.dims(), m.dims())?;
        if m.is_empty() {
            return Err(Error::invalid("metric mask selects no pixels"));
        }
    }
    Ok(est
        .data()
        .iter()
        .zip(gt.data())
        .enumerate()
        .filter(move |(i, _)| mask.is_none_or(|m| m.data()[*i]))
        .map(|(_, (&e, &g))| ((e - g).abs(), g)))
}

fn mean_of(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Mean absolute disparity error.
pub fn epe(est: &DisparityField, gt: &DisparityField, mask: Option<&Mask>) -> Result<f64> {
    Ok(mean_of(masked_errors(est, gt, mask)?.map(|(e, _)| e)))
}

/// Percentage of pixels whose error exceeds `n` pixels.
pub fn bad_n(est: &DisparityField, gt: &DisparityField, n: f64, mask: Option<&Mask>) -> Result<f64> {
    Ok(100.0 * mean_of(masked_errors(est, gt, mask)?.map(|(e, _)| f64::from(u8::from(e > n)))))
}

/// Whether a pixel with absolute error `err` and true disparity `gt` is a D1
/// outlier.
#[inline]
pub fn is_d1_outlier(err: f64, gt: f64) -> bool {
    !(err < 3.0 || err < 0.05 * gt)
}

/// Percentage of D1 outliers.
pub fn d1(est: &DisparityField, gt: &DisparityField, mask: Option<&Mask>) -> Result<f64> {
    Ok(100.0
        * mean_of(masked_errors(est, gt, mask)?.map(|(e, g)| f64::from(u8::from(is_d1_outlier(e, g))))))
}

/// D1 restricted to occluded pixels.
pub fn d1_occ(est: &DisparityField, gt: &DisparityField, occlusion: &Mask) -> Result<f64> {
    if occlusion.is_empty() {
        return Err(Error::invalid("occlusion mask is empty"));
    }
    d1(est, gt, Some(occlusion))
}

/// The standard metric set for one estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// EPE over non-occluded pixels.
    pub epe: f64,
    /// Bad-0.5/1/2 over non-occluded pixels.
    pub bad05: f64,
    pub bad1: f64,
    pub bad2: f64,
    /// D1 over all pixels.
    pub d1_all: f64,
    /// D1 over occluded pixels; `None` when nothing is occluded.
    pub d1_occ: Option<f64>,
}

/// Evaluates `est` with the given occlusion mask (pixels invisible in at least
/// one side view).
pub fn evaluate(est: &DisparityField, gt: &DisparityField, occluded: &Mask) -> Result<Evaluation> {
    let visible = occluded.not();
    let noc = if visible.is_empty() { None } else { Some(&visible) };
    Ok(Evaluation {
        epe: epe(est, gt, noc)?,
        bad05: bad_n(est, gt, 0.5, noc)?,
        bad1: bad_n(est, gt, 1.0, noc)?,
        bad2: bad_n(est, gt, 2.0, noc)?,
        d1_all: d1(est, gt, None)?,
        d1_occ: if occluded.is_empty() {
            None
        } else {
            Some(d1_occ(est, gt, occluded)?)
        },
    })
}
