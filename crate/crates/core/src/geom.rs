//! Rigid transforms on SE(3), the Euler pose parametrization used as the search
//! variable, and the error metrics used for evaluation.
//!
//! Euler convention: intrinsic Z-Y-X, i.e. `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::{Matrix3, Matrix4, Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-entry tolerance for `RᵀR = I` and `det R = 1`.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// `|R[2][0]|` at or above this value is treated as gimbal lock.
pub const GIMBAL_LIMIT: f64 = 1.0 - 1e-9;

/// An element of SE(3): `p ↦ rotation · p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform, rejecting rotations that are not orthonormal with
    /// determinant +1 to within [`ORTHONORMAL_TOL`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation has non-finite entries"));
        }
        check_rotation(&rotation, ORTHONORMAL_TOL)?;
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Accepts a rotation that is orthonormal to within `tol` and projects it
    /// onto SO(3). Used for rotations read from text files with few digits.
    pub fn from_approx(rotation: Matrix3<f64>, translation: Vector3<f64>, tol: f64) -> Result<Self> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("translation has non-finite entries"));
        }
        check_rotation(&rotation, tol)?;
        if check_rotation(&rotation, ORTHONORMAL_TOL).is_ok() {
            return Ok(Self {
                rotation,
                translation,
            });
        }
        let svd = rotation.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut projected = u * v_t;
        if projected.determinant() < 0.0 {
            let mut d = Matrix3::identity();
            d[(2, 2)] = -1.0;
            projected = u * d * v_t;
        }
        Ok(Self {
            rotation: projected,
            translation,
        })
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Internal constructor for products of already-valid rotations.
    pub(crate) fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn with_translation(&self, t: Vector3<f64>) -> Self {
        Self {
            rotation: self.rotation,
            translation: t,
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Row-major 4×4 homogeneous matrix.
    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let m = self.to_homogeneous();
        let mut rows = [[0.0; 4]; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        rows
    }

    /// Largest per-entry deviation of `RᵀR` from `I`, and `|det R − 1|`.
    pub fn orthonormality_defect(&self) -> (f64, f64) {
        rotation_defect(&self.rotation)
    }
}

fn rotation_defect(r: &Matrix3<f64>) -> (f64, f64) {
    let gram = r.transpose() * r - Matrix3::identity();
    let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (ortho, (r.determinant() - 1.0).abs())
}

fn check_rotation(r: &Matrix3<f64>, tol: f64) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("rotation has non-finite entries"));
    }
    let (ortho, det) = rotation_defect(r);
    if ortho > tol || det > tol {
        return Err(Error::invalid(format!(
            "rotation is not orthonormal (RᵀR defect {ortho:.3e}, det defect {det:.3e})"
        )));
    }
    Ok(())
}

/// The six BO decision variables. Angles in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl PoseVector {
    pub const DIM: usize = 6;

    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            roll,
            pitch,
            yaw,
        }
    }

    /// Order: `[x, y, z, roll, pitch, yaw]`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.roll, self.pitch, self.yaw]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for PoseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.4}, {:.4}, {:.4}, {:.4}, {:.4}, {:.4}]",
            self.x, self.y, self.z, self.roll, self.pitch, self.yaw
        )
    }
}

/// Which pose components a search stage varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axes {
    Full,
    Rotation,
    Translation,
}

impl Axes {
    /// Indices into [`PoseVector::to_array`].
    pub fn indices(self) -> &'static [usize] {
        match self {
            Axes::Full => &[0, 1, 2, 3, 4, 5],
            Axes::Rotation => &[3, 4, 5],
            Axes::Translation => &[0, 1, 2],
        }
    }

    pub fn dim(self) -> usize {
        self.indices().len()
    }
}

/// Axis-aligned box over `[x, y, z, roll, pitch, yaw]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lo: [f64; 6],
    hi: [f64; 6],
}

impl SearchBounds {
    pub fn new(lo: [f64; 6], hi: [f64; 6]) -> Result<Self> {
        for i in 0..6 {
            if !(lo[i].is_finite() && hi[i].is_finite()) {
                return Err(Error::invalid(format!("bound {i} is not finite")));
            }
            if lo[i] >= hi[i] {
                return Err(Error::invalid(format!(
                    "bound {i}: lo {} must be < hi {}",
                    lo[i], hi[i]
                )));
            }
        }
        for i in 3..6 {
            if lo[i] < -PI || hi[i] > PI {
                return Err(Error::invalid(format!(
                    "rotation bound {i} [{}, {}] exceeds [-π, π]",
                    lo[i], hi[i]
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `x ∈ [-4, 4]`, `y ∈ [-2, 2]`, `z ∈ [-1, 1]` with the full rotation space.
    ///
    /// Pitch spans `[-π/2, π/2]`; together with roll and yaw over `[-π, π]`
    /// that covers SO(3) once.
    pub fn default_experiment() -> Self {
        Self {
            lo: [-4.0, -2.0, -1.0, -PI, -FRAC_PI_2, -PI],
            hi: [4.0, 2.0, 1.0, PI, FRAC_PI_2, PI],
        }
    }

    /// Symmetric box `±t` on every translation axis and `±r` on every angle.
    pub fn symmetric(t: f64, r: f64) -> Result<Self> {
        Self::new([-t, -t, -t, -r, -r, -r], [t, t, t, r, r, r])
    }

    pub fn lo(&self) -> &[f64; 6] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64; 6] {
        &self.hi
    }

    pub fn contains(&self, p: &PoseVector) -> bool {
        self.contains_axes(p, Axes::Full)
    }

    pub fn contains_axes(&self, p: &PoseVector, axes: Axes) -> bool {
        let a = p.to_array();
        axes.indices()
            .iter()
            .all(|&i| a[i] >= self.lo[i] && a[i] <= self.hi[i])
    }

    /// Bounds expressed in degrees for the angular axes are converted to radians.
    pub fn from_degrees(lo: [f64; 6], hi: [f64; 6]) -> Result<Self> {
        let mut lo = lo;
        let mut hi = hi;
        for i in 3..6 {
            lo[i] = lo[i].to_radians();
            hi[i] = hi[i].to_radians();
        }
        Self::new(lo, hi)
    }
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn pose_to_transform(p: &PoseVector) -> Result<RigidTransform> {
    if !p.is_finite() {
        return Err(Error::invalid(format!("pose {p} has non-finite entries")));
    }
    Ok(RigidTransform::from_parts(
        rot_z(p.yaw) * rot_y(p.pitch) * rot_x(p.roll),
        Vector3::new(p.x, p.y, p.z),
    ))
}

/// Inverse of [`pose_to_transform`], valid away from pitch = ±π/2.
pub fn transform_to_pose(t: &RigidTransform) -> Result<PoseVector> {
    let r = t.rotation();
    let r20 = r[(2, 0)];
    if r20.abs() >= GIMBAL_LIMIT {
        return Err(Error::DegeneratePose(r20.abs()));
    }
    let pitch = (-r20).atan2(r[(0, 0)].hypot(r[(1, 0)]));
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let tr = t.translation();
    Ok(PoseVector::new(tr.x, tr.y, tr.z, roll, pitch, yaw))
}

/// Interprets `p` as an increment in the frame of `base`: `base ∘ T(p)`.
pub fn recenter_pose(p: &PoseVector, base: &RigidTransform) -> Result<RigidTransform> {
    Ok(base.compose(&pose_to_transform(p)?))
}

/// Geodesic angle between the two rotations, in `[0, π]`.
pub fn rotation_error(a: &RigidTransform, b: &RigidTransform) -> f64 {
    let d = a.rotation() * b.rotation().transpose();
    // atan2 of the skew and symmetric parts stays accurate near 0 and π,
    // where acos((tr − 1)/2) loses half the digits.
    let cos = (d.trace() - 1.0) / 2.0;
    let sin = 0.5
        * Vector3::new(
            d[(2, 1)] - d[(1, 2)],
            d[(0, 2)] - d[(2, 0)],
            d[(1, 0)] - d[(0, 1)],
        )
        .norm();
    sin.atan2(cos).clamp(0.0, PI)
}

pub fn translation_error(a: &RigidTransform, b: &RigidTransform) -> f64 {
    (a.translation() - b.translation()).norm()
}

/// Quaternion `(qx, qy, qz, qw)`, normalized before conversion.
pub fn quaternion_to_rotation(qx: f64, qy: f64, qz: f64, qw: f64) -> Result<Matrix3<f64>> {
    let n = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::invalid("quaternion has zero or non-finite norm"));
    }
    let (x, y, z, w) = (qx / n, qy / n, qz / n, qw / n);
    Ok(Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    ))
}

/// Rotation by `angle` about a unit `axis`.
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn yaw(a: f64) -> RigidTransform {
        pose_to_transform(&PoseVector::new(0.0, 0.0, 0.0, 0.0, 0.0, a)).unwrap()
    }

    fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn zero_pose_is_identity() {
        let t = pose_to_transform(&PoseVector::default()).unwrap();
        assert_eq!(t, RigidTransform::identity());
    }

    #[test]
    fn pure_translation_pose() {
        let t = pose_to_transform(&PoseVector::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(*t.rotation(), Matrix3::identity());
        assert_eq!(*t.translation(), Vector3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn quarter_yaw_maps_x_to_y() {
        let t = yaw(FRAC_PI_2);
        let p = t.apply(&Point3::new(1.0, 0.0, 0.0));
        assert!((p - Point3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert_eq!(*t.translation(), Vector3::zeros());
    }

    #[test]
    fn euler_composition_order_is_zyx() {
        // Hand-multiplied Rz(φ)·Ry(ψ)·Rx(θ) for θ=0.1, ψ=0.2, φ=0.3.
        let (t, p, f) = (0.1f64, 0.2f64, 0.3f64);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let (sf, cf) = f.sin_cos();
        let expected = Matrix3::new(
            cf * cp,
            cf * sp * st - sf * ct,
            cf * sp * ct + sf * st,
            sf * cp,
            sf * sp * st + cf * ct,
            sf * sp * ct - cf * st,
            -sp,
            cp * st,
            cp * ct,
        );
        let got = pose_to_transform(&PoseVector::new(0.0, 0.0, 0.0, t, p, f)).unwrap();
        assert!(max_abs_diff(got.rotation(), &expected) < 1e-15);
    }

    #[test]
    fn non_finite_pose_rejected() {
        let p = PoseVector::new(f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(pose_to_transform(&p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn identity_to_zero_pose() {
        let p = transform_to_pose(&RigidTransform::identity()).unwrap();
        assert_eq!(p.to_array(), [0.0; 6]);
    }

    #[test]
    fn pose_round_trip_example() {
        let p = PoseVector::new(0.5, -1.0, 0.2, 0.1, 0.2, 0.3);
        let q = transform_to_pose(&pose_to_transform(&p).unwrap()).unwrap();
        for (a, b) in p.to_array().iter().zip(q.to_array()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gimbal_lock_rejected() {
        let t = pose_to_transform(&PoseVector::new(0.0, 0.0, 0.0, 0.0, FRAC_PI_2, 0.0)).unwrap();
        assert!(matches!(transform_to_pose(&t), Err(Error::DegeneratePose(_))));
    }

    #[test]
    fn recenter_examples() {
        let base = pose_to_transform(&PoseVector::new(1.0, -2.0, 0.5, 0.3, -0.2, 1.1)).unwrap();
        assert_eq!(recenter_pose(&PoseVector::default(), &base).unwrap(), base);

        let p = PoseVector::new(0.3, 0.4, -0.5, 0.0, 0.0, 0.0);
        let t = recenter_pose(&p, &RigidTransform::identity()).unwrap();
        assert_eq!(*t.translation(), Vector3::new(0.3, 0.4, -0.5));

        let t = recenter_pose(
            &PoseVector::new(0.0, 0.0, 0.0, 0.0, 0.0, PI / 4.0),
            &yaw(PI / 4.0),
        )
        .unwrap();
        // Rz(π/4)·Rz(π/4) = Rz(π/2) = [[0,-1,0],[1,0,0],[0,0,1]].
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(max_abs_diff(t.rotation(), &expected) < 1e-9);
    }

    #[test]
    fn error_metric_examples() {
        let t = pose_to_transform(&PoseVector::new(1.0, 2.0, 3.0, 0.4, 0.1, -0.7)).unwrap();
        assert_eq!(rotation_error(&t, &t), 0.0);
        assert_eq!(translation_error(&t, &t), 0.0);
        assert!((rotation_error(&RigidTransform::identity(), &yaw(0.5)) - 0.5).abs() < 1e-15);

        let a = RigidTransform::from_translation(Vector3::new(3.0, 4.0, 0.0));
        assert_eq!(translation_error(&a, &RigidTransform::identity()), 5.0);
        let a = RigidTransform::from_translation(Vector3::new(1.0, 1.0, 1.0));
        let b = RigidTransform::from_translation(Vector3::new(2.0, 2.0, 2.0));
        assert!((translation_error(&a, &b) - 3f64.sqrt()).abs() < 1e-15);
    }

    /// Log-map oracle: recover the angle from the quaternion of the relative
    /// rotation, computed independently with nalgebra's `UnitQuaternion`.
    #[test]
    fn rotation_error_matches_log_map() {
        let a = RigidTransform::from_parts(rot_z(0.1) * rot_y(0.2), Vector3::zeros());
        let q = nalgebra::UnitQuaternion::from_matrix(&(rot_z(0.1) * rot_y(0.2)));
        let oracle = 2.0 * q.vector().norm().atan2(q.scalar().abs());
        let got = rotation_error(&a, &RigidTransform::identity());
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn bounds_validation() {
        assert!(SearchBounds::new([0.0; 6], [1.0; 6]).is_ok());
        assert!(SearchBounds::new([1.0; 6], [1.0; 6]).is_err());
        let mut hi = [1.0; 6];
        hi[5] = 4.0;
        assert!(SearchBounds::new([0.0; 6], hi).is_err());
        let b = SearchBounds::default_experiment();
        assert_eq!(&b.lo()[..3], &[-4.0, -2.0, -1.0]);
        assert_eq!(&b.hi()[..3], &[4.0, 2.0, 1.0]);
    }

    #[test]
    fn quaternion_quarter_yaw_matches_euler() {
        let h = 0.5f64.sqrt();
        let r = quaternion_to_rotation(0.0, 0.0, h, h).unwrap();
        assert!(max_abs_diff(&r, yaw(FRAC_PI_2).rotation()) < 1e-15);
    }

    #[test]
    fn from_approx_projects_onto_so3() {
        let mut r = *yaw(0.3).rotation();
        r[(0, 1)] += 5e-5;
        let t = RigidTransform::from_approx(r, Vector3::zeros(), 1e-4).unwrap();
        let (o, d) = t.orthonormality_defect();
        assert!(o < 1e-12 && d < 1e-12);
        r[(0, 1)] += 1e-2;
        assert!(RigidTransform::from_approx(r, Vector3::zeros(), 1e-4).is_err());
    }

    fn pose_strategy(max_pitch: f64) -> impl Strategy<Value = PoseVector> {
        (
            -10.0..10.0f64,
            -10.0..10.0f64,
            -10.0..10.0f64,
            -PI..PI,
            -max_pitch..max_pitch,
            -PI..PI,
        )
            .prop_map(|(x, y, z, r, p, w)| PoseVector::new(x, y, z, r, p, w))
    }

    proptest! {
        #[test]
        fn pose_to_transform_is_rigid(p in pose_strategy(2.0 * PI)) {
            let t = pose_to_transform(&p).unwrap();
            let (o, d) = t.orthonormality_defect();
            prop_assert!(o <= ORTHONORMAL_TOL && d <= ORTHONORMAL_TOL);
            prop_assert!(RigidTransform::new(*t.rotation(), *t.translation()).is_ok());
        }

        #[test]
        fn euler_round_trip(p in pose_strategy(FRAC_PI_2 - 0.01)) {
            let t = pose_to_transform(&p).unwrap();
            let back = pose_to_transform(&transform_to_pose(&t).unwrap()).unwrap();
            prop_assert!(max_abs_diff(t.rotation(), back.rotation()) < 1e-9);
            prop_assert!((t.translation() - back.translation()).norm() < 1e-9);
            let q = transform_to_pose(&t).unwrap();
            for (a, b) in p.to_array().iter().zip(q.to_array()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn recenter_about_identity_is_plain(p in pose_strategy(PI)) {
            prop_assert_eq!(
                recenter_pose(&p, &RigidTransform::identity()).unwrap(),
                pose_to_transform(&p).unwrap()
            );
        }

        #[test]
        fn rotation_error_is_a_metric(
            a in pose_strategy(PI), b in pose_strategy(PI), c in pose_strategy(PI)
        ) {
            let (ta, tb, tc) = (
                pose_to_transform(&a).unwrap(),
                pose_to_transform(&b).unwrap(),
                pose_to_transform(&c).unwrap(),
            );
            let ab = rotation_error(&ta, &tb);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - rotation_error(&tb, &ta)).abs() < 1e-12);
            prop_assert!(rotation_error(&ta, &ta) < 1e-9);
            prop_assert!(ab <= rotation_error(&ta, &tc) + rotation_error(&tc, &tb) + 1e-9);
        }
    }
}
