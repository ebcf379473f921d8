// Homogeneous-coordinate camera geometry.
//
// Conventions (fixed project-wide):
//   - right-handed world frame, z up
//   - camera frame: x right, y down, z forward (camera looks down +z)
//   - image coordinates: u right, v down, pixels
// All transforms are 4x4 with last row (0,0,0,1). Dehomogenization always
// divides by the 4th component so non-normalized user input stays safe.

#pragma once

#include <optional>

#include "roistereo/errors.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

class RigidTransform {
  public:
    RigidTransform() : m_(Mat4::Identity()) {}

    // Validates rigidity: orthonormal rotation block with determinant +1
    // (within 1e-9) and last row (0,0,0,1).
    explicit RigidTransform(const Mat4& m);

    static RigidTransform identity() { return RigidTransform(); }
    static RigidTransform from_rotation_translation(const Mat3& r, const Vec3& t);
    static RigidTransform translation(const Vec3& t);
    // Rotation about world z by `yaw` radians (counterclockwise looking down -z).
    static RigidTransform rotation_z(Scalar yaw);
    static RigidTransform rotation_y(Scalar pitch);
    static RigidTransform rotation_x(Scalar roll);

    const Mat4& matrix() const { return m_; }
    Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }
    Vec3 translation_part() const { return m_.topRightCorner<3, 1>(); }

    RigidTransform inverse() const;
    RigidTransform operator*(const RigidTransform& rhs) const;

    // Applies the transform to the homogeneous extension [p|1].
    Point3 apply(const Point3& p) const;

  private:
    struct unchecked_tag {};
    RigidTransform(const Mat4& m, unchecked_tag) : m_(m) {}
    Mat4 m_;
};

// Pinhole intrinsics stored as the 4x4 matrix
//   [fx 0 ox 0; 0 fy oy 0; 0 0 1 0; 0 0 0 1].
class Intrinsics4 {
  public:
    Intrinsics4(Scalar fx, Scalar fy, Scalar ox, Scalar oy);

    Scalar fx() const { return fx_; }
    Scalar fy() const { return fy_; }
    Scalar ox() const { return ox_; }
    Scalar oy() const { return oy_; }

    Mat4 matrix() const;
    // Closed-form inverse; throws SingularIntrinsics if fx or fy underflows.
    Mat4 inverse_matrix() const;

  private:
    Scalar fx_, fy_, ox_, oy_;
};

struct BBox2D {
    // Degenerate boxes (non-positive extent) are rejected at construction.
    BBox2D(Scalar x_min, Scalar y_min, Scalar x_max, Scalar y_max, int camera_index);

    Scalar x_min, y_min, x_max, y_max;
    int camera_index;

    Scalar width() const { return x_max - x_min; }
    Scalar height() const { return y_max - y_min; }
    Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
    Scalar area() const { return width() * height(); }
};

// Ego-motion from the previous to the current frame: E_cur^-1 * E_prev.
RigidTransform compose_ego_transform(const RigidTransform& e_prev, const RigidTransform& e_cur);

inline Point3 align_point(const RigidTransform& t, const Point3& p) { return t.apply(p); }

// Per-RoI equivalent intrinsics: the camera matrix under which RoI-grid
// coordinates obey the pinhole projection after the RoI rescale.
Intrinsics4 equivalent_intrinsics(const Intrinsics4& k, const BBox2D& box, int roi_w, int roi_h);

// World point -> (u, v, d) in the RoI frame of k_eq. Throws BehindCamera when
// the camera-frame depth is <= kDepthEpsilon.
Point25D project_to_roi(const Intrinsics4& k_eq, const RigidTransform& t_ext, const Point3& p_world);

// Inverse of project_to_roi on the same (k_eq, t_ext).
Point3 lift_to_world(const Intrinsics4& k_eq, const RigidTransform& t_ext, const Point25D& p);

// Warps a 2.5D candidate from the reference RoI into the source RoI:
// K_src * M_ref2src * K_ref^-1 * (u d, v d, d, 1)^T. Returns nullopt when the
// warped depth falls behind the source camera; the caller marks that sample
// invalid.
std::optional<Point25D> warp_candidate(const Intrinsics4& k_src, const RigidTransform& m_ref2src,
                                       const Mat4& k_ref_inv, const Point25D& p);

}  // namespace roistereo
