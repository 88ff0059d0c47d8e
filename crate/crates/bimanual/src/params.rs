//! Parameter containers for the two-hand model.
//!
//! The full parameter set stacks, for each hand, 10 shape coefficients,
//! a global orientation (axis-angle), and 15 finger joint rotations
//! (axis-angle each), plus one shared right-to-left translation in
//! meters. The right hand lives in the canonical frame (its rest wrist
//! is the origin); the left hand is posed identically and then shifted
//! by the translation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Number of shape coefficients per hand.
pub const SHAPE_COEFFS: usize = 10;
/// Number of articulated finger joints per hand.
pub const FINGER_JOINTS: usize = 15;
/// Flattened dimension of the full parameter vector.
pub const PARAM_DIM: usize = 3 + 6 + 2 * FINGER_JOINTS * 3 + 2 * SHAPE_COEFFS;

/// Per-hand shape coefficients (dimensionless, nominally in [-1, 1]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandShape {
    pub coefficients: [f64; SHAPE_COEFFS],
}

impl HandShape {
    pub fn zeros() -> Self {
        Self {
            coefficients: [0.0; SHAPE_COEFFS],
        }
    }

    pub fn new(coefficients: [f64; SHAPE_COEFFS]) -> Result<Self> {
        let s = Self { coefficients };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("hand shape coefficients".into()));
        }
        Ok(())
    }
}

/// Global hand orientation as an axis-angle vector (radians · unit axis).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandOrientation {
    pub axis_angle: Vector3<f64>,
}

impl HandOrientation {
    pub fn identity() -> Self {
        Self {
            axis_angle: Vector3::zeros(),
        }
    }

    pub fn new(axis_angle: Vector3<f64>) -> Result<Self> {
        let o = Self { axis_angle };
        o.validate()?;
        Ok(o)
    }

    /// Rotation angle in radians (the vector norm).
    pub fn angle(&self) -> f64 {
        self.axis_angle.norm()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.axis_angle.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("hand orientation".into()));
        }
        Ok(())
    }
}

/// Axis-angle rotations for the 15 articulated finger joints of one hand.
///
/// Joint order is finger-major (thumb, index, middle, ring, pinky), and
/// within a finger base → middle → distal knuckle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FingerPose {
    pub joint_rotations: [Vector3<f64>; FINGER_JOINTS],
}

impl FingerPose {
    pub fn identity() -> Self {
        Self {
            joint_rotations: [Vector3::zeros(); FINGER_JOINTS],
        }
    }

    pub fn new(joint_rotations: [Vector3<f64>; FINGER_JOINTS]) -> Result<Self> {
        let p = Self { joint_rotations };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self
            .joint_rotations
            .iter()
            .all(|r| r.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite("finger pose".into()));
        }
        Ok(())
    }
}

/// Full parameter set for a pair of hands.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoHandParams {
    pub left_shape: HandShape,
    pub right_shape: HandShape,
    pub left_orient: HandOrientation,
    pub right_orient: HandOrientation,
    pub left_fingers: FingerPose,
    pub right_fingers: FingerPose,
    /// Right-to-left wrist translation, meters.
    pub translation: Vector3<f64>,
}

impl TwoHandParams {
    /// Rest configuration: zero shapes and rotations, coincident wrists.
    pub fn rest() -> Self {
        Self {
            left_shape: HandShape::zeros(),
            right_shape: HandShape::zeros(),
            left_orient: HandOrientation::identity(),
            right_orient: HandOrientation::identity(),
            left_fingers: FingerPose::identity(),
            right_fingers: FingerPose::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.left_shape.validate()?;
        self.right_shape.validate()?;
        self.left_orient.validate()?;
        self.right_orient.validate()?;
        self.left_fingers.validate()?;
        self.right_fingers.validate()?;
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("translation".into()));
        }
        Ok(())
    }

    /// Copy of the coordinates belonging to `factor`, in canonical order
    /// (left block before right block where applicable).
    pub fn factor_coords(&self, factor: Factor) -> Vec<f64> {
        let mut out = Vec::with_capacity(factor.dim());
        match factor {
            Factor::Translation => out.extend(self.translation.iter()),
            Factor::Orientation => {
                out.extend(self.left_orient.axis_angle.iter());
                out.extend(self.right_orient.axis_angle.iter());
            }
            Factor::Fingers => {
                for r in &self.left_fingers.joint_rotations {
                    out.extend(r.iter());
                }
                for r in &self.right_fingers.joint_rotations {
                    out.extend(r.iter());
                }
            }
            Factor::Shape => {
                out.extend(self.left_shape.coefficients.iter());
                out.extend(self.right_shape.coefficients.iter());
            }
        }
        out
    }

    /// Overwrite the coordinates of `factor` from a flat slice.
    pub fn set_factor_coords(&mut self, factor: Factor, coords: &[f64]) -> Result<()> {
        if coords.len() != factor.dim() {
            return Err(Error::DimensionMismatch {
                field: factor.name(),
                expected: factor.dim(),
                found: coords.len(),
            });
        }
        match factor {
            Factor::Translation => {
                self.translation = Vector3::new(coords[0], coords[1], coords[2]);
            }
            Factor::Orientation => {
                self.left_orient.axis_angle = Vector3::new(coords[0], coords[1], coords[2]);
                self.right_orient.axis_angle = Vector3::new(coords[3], coords[4], coords[5]);
            }
            Factor::Fingers => {
                for (i, r) in self.left_fingers.joint_rotations.iter_mut().enumerate() {
                    *r = Vector3::new(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);
                }
                let off = 3 * FINGER_JOINTS;
                for (i, r) in self.right_fingers.joint_rotations.iter_mut().enumerate() {
                    *r = Vector3::new(
                        coords[off + 3 * i],
                        coords[off + 3 * i + 1],
                        coords[off + 3 * i + 2],
                    );
                }
            }
            Factor::Shape => {
                self.left_shape.coefficients.copy_from_slice(&coords[..SHAPE_COEFFS]);
                self.right_shape.coefficients.copy_from_slice(&coords[SHAPE_COEFFS..]);
            }
        }
        Ok(())
    }
}

/// Hand selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// One of the four refinable parameter factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Translation,
    Orientation,
    Fingers,
    Shape,
}

impl Factor {
    pub const ALL: [Factor; 4] = [
        Factor::Translation,
        Factor::Orientation,
        Factor::Fingers,
        Factor::Shape,
    ];

    /// Number of scalar coordinates in this factor (both hands).
    pub fn dim(self) -> usize {
        match self {
            Factor::Translation => 3,
            Factor::Orientation => 6,
            Factor::Fingers => 2 * FINGER_JOINTS * 3,
            Factor::Shape => 2 * SHAPE_COEFFS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Factor::Translation => "translation",
            Factor::Orientation => "orientation",
            Factor::Fingers => "fingers",
            Factor::Shape => "shape",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Factor::Translation => 0,
            Factor::Orientation => 1,
            Factor::Fingers => 2,
            Factor::Shape => 3,
        }
    }
}

impl std::str::FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "translation" | "tau" => Ok(Factor::Translation),
            "orientation" | "phi" => Ok(Factor::Orientation),
            "fingers" | "theta" => Ok(Factor::Fingers),
            "shape" | "beta" => Ok(Factor::Shape),
            other => Err(Error::InvalidConfig(format!(
                "unknown factor '{other}' (expected translation|orientation|fingers|shape)"
            ))),
        }
    }
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A tangent / gradient container with the same block layout as
/// [`TwoHandParams`]. Used for Jacobian-vector products and objective
/// gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamDelta {
    pub translation: Vector3<f64>,
    pub left_orient: Vector3<f64>,
    pub right_orient: Vector3<f64>,
    pub left_fingers: [Vector3<f64>; FINGER_JOINTS],
    pub right_fingers: [Vector3<f64>; FINGER_JOINTS],
    pub left_shape: [f64; SHAPE_COEFFS],
    pub right_shape: [f64; SHAPE_COEFFS],
}

impl ParamDelta {
    pub fn zeros() -> Self {
        Self {
            translation: Vector3::zeros(),
            left_orient: Vector3::zeros(),
            right_orient: Vector3::zeros(),
            left_fingers: [Vector3::zeros(); FINGER_JOINTS],
            right_fingers: [Vector3::zeros(); FINGER_JOINTS],
            left_shape: [0.0; SHAPE_COEFFS],
            right_shape: [0.0; SHAPE_COEFFS],
        }
    }

    /// Coordinates of `factor`, flat, canonical order.
    pub fn factor_coords(&self, factor: Factor) -> Vec<f64> {
        let mut out = Vec::with_capacity(factor.dim());
        match factor {
            Factor::Translation => out.extend(self.translation.iter()),
            Factor::Orientation => {
                out.extend(self.left_orient.iter());
                out.extend(self.right_orient.iter());
            }
            Factor::Fingers => {
                for r in &self.left_fingers {
                    out.extend(r.iter());
                }
                for r in &self.right_fingers {
                    out.extend(r.iter());
                }
            }
            Factor::Shape => {
                out.extend(self.left_shape.iter());
                out.extend(self.right_shape.iter());
            }
        }
        out
    }

    pub fn set_factor_coords(&mut self, factor: Factor, coords: &[f64]) {
        assert_eq!(coords.len(), factor.dim());
        match factor {
            Factor::Translation => {
                self.translation = Vector3::new(coords[0], coords[1], coords[2]);
            }
            Factor::Orientation => {
                self.left_orient = Vector3::new(coords[0], coords[1], coords[2]);
                self.right_orient = Vector3::new(coords[3], coords[4], coords[5]);
            }
            Factor::Fingers => {
                for (i, r) in self.left_fingers.iter_mut().enumerate() {
                    *r = Vector3::new(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]);
                }
                let off = 3 * FINGER_JOINTS;
                for (i, r) in self.right_fingers.iter_mut().enumerate() {
                    *r = Vector3::new(
                        coords[off + 3 * i],
                        coords[off + 3 * i + 1],
                        coords[off + 3 * i + 2],
                    );
                }
            }
            Factor::Shape => {
                self.left_shape.copy_from_slice(&coords[..SHAPE_COEFFS]);
                self.right_shape.copy_from_slice(&coords[SHAPE_COEFFS..]);
            }
        }
    }

    /// Zero every block except `factor`.
    pub fn restrict_to(&mut self, factor: Factor) {
        let keep = self.factor_coords(factor);
        *self = ParamDelta::zeros();
        self.set_factor_coords(factor, &keep);
    }

    /// Euclidean norm over all coordinates.
    pub fn norm(&self) -> f64 {
        Factor::ALL
            .iter()
            .map(|&f| self.factor_coords(f).iter().map(|c| c * c).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        Factor::ALL
            .iter()
            .all(|&f| self.factor_coords(f).iter().all(|c| c.is_finite()))
    }
}
