use crate::error::{check_dims, Error, Result};
use crate::grid::{DisparityField, Image, Mask};

/// Left, center and right views captured at equal baselines, plus optional
/// ground truth for the center view.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscopicFrame {
    pub left: Image,
    pub center: Image,
    pub right: Image,
    /// Distance between adjacent cameras, in meters.
    pub baseline: f64,
    /// Focal length in pixels.
    pub focal: f64,
    /// Center-view disparity, shared by both adjacent pairs.
    pub gt_disparity: Option<DisparityField>,
    /// Center pixels not visible in the left view.
    pub occlusion_left: Option<Mask>,
    /// Center pixels not visible in the right view.
    pub occlusion_right: Option<Mask>,
}

impl MultiscopicFrame {
    pub fn new(left: Image, center: Image, right: Image, baseline: f64, focal: f64) -> Result<Self> {
        for (ctx, img) in [("left view", &left), ("right view", &right)] {
            check_dims(ctx, center.dims(), img.dims())?;
            if img.channels() != center.channels() {
                return Err(Error::invalid(alloc::format!(
                    "{ctx} has {} channels, center has {}",
                    img.channels(),
                    center.channels()
                )));
            }
        }
        if !(baseline > 0.0 && focal > 0.0) {
            return Err(Error::invalid("baseline and focal length must be positive"));
        }
        Ok(Self {
            left,
            center,
            right,
            baseline,
            focal,
            gt_disparity: None,
            occlusion_left: None,
            occlusion_right: None,
        })
    }

    pub fn with_ground_truth(
        mut self,
        gt: DisparityField,
        occlusion_left: Mask,
        occlusion_right: Mask,
    ) -> Result<Self> {
        let dims = self.dims();
        check_dims("ground-truth disparity", dims, gt.dims())?;
        check_dims("left occlusion mask", dims, occlusion_left.dims())?;
        check_dims("right occlusion mask", dims, occlusion_right.dims())?;
        self.gt_disparity = Some(gt);
        self.occlusion_left = Some(occlusion_left);
        self.occlusion_right = Some(occlusion_right);
        Ok(self)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.center.dims()
    }

    /// Pixels occluded in at least one side view.
    pub fn occluded(&self) -> Option<Mask> {
        match (&self.occlusion_left, &self.occlusion_right) {
            (Some(l), Some(r)) => l.or(r).ok(),
            _ => None,
        }
    }

    /// Pixels visible in both side views.
    pub fn non_occluded(&self) -> Option<Mask> {
        self.occluded().map(|m| m.not())
    }

    /// Mirrors the frame horizontally. Mirroring swaps the roles of the left
    /// and right cameras, so the side views trade places.
    pub fn mirrored(&self) -> Self {
        Self {
            left: self.right.flip_horizontal(),
            center: self.center.flip_horizontal(),
            right: self.left.flip_horizontal(),
            baseline: self.baseline,
            focal: self.focal,
            gt_disparity: self.gt_disparity.as_ref().map(|d| d.flip_horizontal()),
            occlusion_left: self.occlusion_right.as_ref().map(|m| m.flip_horizontal()),
            occlusion_right: self.occlusion_left.as_ref().map(|m| m.flip_horizontal()),
        }
    }
}
