//! Weak-perspective camera: orthographic projection, uniform scale, 2D
//! shift.

use nalgebra::{Point3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakPerspectiveCamera {
    /// Pixels per meter.
    pub scale: f64,
    /// Image-space shift, pixels.
    pub translation_2d: Vector2<f64>,
}

impl WeakPerspectiveCamera {
    pub fn new(scale: f64, translation_2d: Vector2<f64>) -> Result<Self> {
        let c = Self { scale, translation_2d };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig("camera scale must be positive".into()));
        }
        if !self.translation_2d.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("camera translation".into()));
        }
        Ok(())
    }

    /// Project a single point: drop depth, scale, shift.
    #[inline]
    pub fn project(&self, p: &Point3<f64>) -> Vector2<f64> {
        Vector2::new(p.x, p.y) * self.scale + self.translation_2d
    }
}

/// Project a batch of joints.
pub fn project_weak_perspective(
    joints: &[Point3<f64>],
    camera: &WeakPerspectiveCamera,
) -> Vec<Vector2<f64>> {
    joints.iter().map(|j| camera.project(j)).collect()
}
