use nalgebra::{Matrix3, Vector3};

use crate::error::{KcmError, Result};

/// Largest accepted deviation of a rotation axis from unit length.
pub const AXIS_UNIT_TOLERANCE: f64 = 1e-9;

/// Rotation matrix for a right-handed turn of `angle` radians about `axis`
/// (Rodrigues' formula). The axis must already be normalized.
pub fn rotation_about_axis(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    let norm = axis.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > AXIS_UNIT_TOLERANCE {
        return Err(KcmError::invalid(
            "axis",
            format!("rotation axis must be a unit vector, got |axis| = {norm}"),
        ));
    }
    if !angle.is_finite() {
        return Err(KcmError::invalid("angle", "rotation angle must be finite"));
    }
    Ok(rodrigues(axis, angle))
}

/// Unchecked Rodrigues construction, used in the kinematics hot loop after
/// the topology has validated its axes.
pub(crate) fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let k = axis.cross_matrix();
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}
