//! Joint-based initialization: recover a hand's global orientation and
//! swing-only finger pose from 21 observed keypoints.
//!
//! The orientation comes from Kabsch alignment of the rest palm points
//! (wrist plus the five finger-base knuckles) to the observed ones. The
//! finger pose is then solved chain by chain: each joint takes the
//! minimal (twist-free) rotation that maps its rest bone direction onto
//! the observed child direction in the parent's accumulated frame. Bone
//! directions are matched exactly; bone lengths are whatever the
//! template provides.
//!
//! Both solvers assume the default shape; shape coefficients are
//! estimated elsewhere.

use nalgebra::Point3;

use crate::error::Error;
use crate::params::{FingerPose, HandOrientation};
use crate::rotation::{axis_angle_from_rotation, kabsch_rotation, rotation_between};
use crate::template::{HandTemplate, FINGER_COUNT, KEYPOINT_COUNT};
use crate::Result;

/// Global orientation best aligning the template's rest palm points to
/// the observed ones (least squares, rotation only).
pub fn orientation_from_joints(
    joints: &[Point3<f64>; KEYPOINT_COUNT],
    template: &HandTemplate,
) -> Result<HandOrientation> {
    let ids = HandTemplate::palm_keypoints();
    let rest: Vec<Point3<f64>> = ids.iter().map(|&i| template.rest_keypoints[i]).collect();
    let obs: Vec<Point3<f64>> = ids.iter().map(|&i| joints[i]).collect();
    let r = kabsch_rotation(&rest, &obs)?;
    Ok(HandOrientation {
        axis_angle: axis_angle_from_rotation(&r),
    })
}

/// Swing-only finger pose reproducing the observed bone directions.
pub fn swing_from_joints(
    joints: &[Point3<f64>; KEYPOINT_COUNT],
    orientation: &HandOrientation,
    template: &HandTemplate,
) -> Result<FingerPose> {
    let mut pose = FingerPose::identity();
    let root = crate::rotation::rodrigues(&orientation.axis_angle);
    for finger in 0..FINGER_COUNT {
        let knuckles = HandTemplate::finger_joint_keypoints(finger);
        let tip = HandTemplate::fingertip_keypoint(finger);
        let chain = [
            (knuckles[0], knuckles[1]),
            (knuckles[1], knuckles[2]),
            (knuckles[2], tip),
        ];
        let mut accumulated = root;
        for (joint_kp, child_kp) in chain {
            let rest_dir = template.rest_keypoints[child_kp] - template.rest_keypoints[joint_kp];
            let obs_dir = joints[child_kp] - joints[joint_kp];
            let obs_norm = obs_dir.norm();
            if obs_norm < 1e-9 {
                return Err(Error::DegenerateGeometry(format!(
                    "zero-length observed bone at keypoint {joint_kp}"
                )));
            }
            let target_local = accumulated.transpose() * (obs_dir / obs_norm);
            let local = rotation_between(&rest_dir.normalize(), &target_local);
            // keypoints 1..=15 are the articulated joints, pose index off by one
            pose.joint_rotations[joint_kp - 1] = axis_angle_from_rotation(&local);
            accumulated *= local;
        }
    }
    Ok(pose)
}
