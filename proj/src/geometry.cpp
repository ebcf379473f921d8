#include "roistereo/geometry.hpp"

#include <cmath>

namespace roistereo {

namespace {
constexpr Scalar kRigidTol = 1e-9;
constexpr Scalar kBoxEpsilon = 1e-9;
constexpr Scalar kFocalEpsilon = 1e-12;
}  // namespace

RigidTransform::RigidTransform(const Mat4& m) : m_(m) {
    const Mat3 r = m.topLeftCorner<3, 3>();
    if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > kRigidTol ||
        std::abs(r.determinant() - 1.0) > kRigidTol) {
        throw Error("RigidTransform: rotation block is not a proper rotation");
    }
    if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kRigidTol) {
        throw Error("RigidTransform: last row must be (0,0,0,1)");
    }
}

RigidTransform RigidTransform::from_rotation_translation(const Mat3& r, const Vec3& t) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = t;
    return RigidTransform(m);
}

RigidTransform RigidTransform::translation(const Vec3& t) {
    Mat4 m = Mat4::Identity();
    m.topRightCorner<3, 1>() = t;
    return RigidTransform(m, unchecked_tag{});
}

RigidTransform RigidTransform::rotation_z(Scalar yaw) {
    Mat3 r;
    r << std::cos(yaw), -std::sin(yaw), 0.0, std::sin(yaw), std::cos(yaw), 0.0, 0.0, 0.0, 1.0;
    return from_rotation_translation(r, Vec3::Zero());
}

RigidTransform RigidTransform::rotation_y(Scalar pitch) {
    Mat3 r;
    r << std::cos(pitch), 0.0, std::sin(pitch), 0.0, 1.0, 0.0, -std::sin(pitch), 0.0, std::cos(pitch);
    return from_rotation_translation(r, Vec3::Zero());
}

RigidTransform RigidTransform::rotation_x(Scalar roll) {
    Mat3 r;
    r << 1.0, 0.0, 0.0, 0.0, std::cos(roll), -std::sin(roll), 0.0, std::sin(roll), std::cos(roll);
    return from_rotation_translation(r, Vec3::Zero());
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = rotation().transpose();
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rt;
    m.topRightCorner<3, 1>() = -rt * translation_part();
    return RigidTransform(m, unchecked_tag{});
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    return RigidTransform(Mat4(m_ * rhs.m_), unchecked_tag{});
}

Point3 RigidTransform::apply(const Point3& p) const {
    return dehomogenize(m_ * p.homogeneous());
}

Intrinsics4::Intrinsics4(Scalar fx, Scalar fy, Scalar ox, Scalar oy)
    : fx_(fx), fy_(fy), ox_(ox), oy_(oy) {
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw SingularIntrinsics("Intrinsics4: focal lengths must be positive");
    }
}

Mat4 Intrinsics4::matrix() const {
    Mat4 k = Mat4::Identity();
    k(0, 0) = fx_;
    k(1, 1) = fy_;
    k(0, 2) = ox_;
    k(1, 2) = oy_;
    return k;
}

Mat4 Intrinsics4::inverse_matrix() const {
    if (fx_ < kFocalEpsilon || fy_ < kFocalEpsilon) {
        throw SingularIntrinsics("Intrinsics4: focal length underflow");
    }
    Mat4 k = Mat4::Identity();
    k(0, 0) = 1.0 / fx_;
    k(1, 1) = 1.0 / fy_;
    k(0, 2) = -ox_ / fx_;
    k(1, 2) = -oy_ / fy_;
    return k;
}

BBox2D::BBox2D(Scalar x_min_, Scalar y_min_, Scalar x_max_, Scalar y_max_, int camera_index_)
    : x_min(x_min_), y_min(y_min_), x_max(x_max_), y_max(y_max_), camera_index(camera_index_) {
    if (!(x_max > x_min) || !(y_max > y_min)) {
        throw DegenerateBox("BBox2D: empty extent");
    }
}

RigidTransform compose_ego_transform(const RigidTransform& e_prev, const RigidTransform& e_cur) {
    return e_cur.inverse() * e_prev;
}

Intrinsics4 equivalent_intrinsics(const Intrinsics4& k, const BBox2D& box, int roi_w, int roi_h) {
    if (roi_w < 1 || roi_h < 1) {
        throw InvalidRange("equivalent_intrinsics: roi sizes must be >= 1");
    }
    const Scalar w = box.width();
    const Scalar h = box.height();
    if (w < kBoxEpsilon || h < kBoxEpsilon) {
        throw DegenerateBox("equivalent_intrinsics: box extent underflow");
    }
    const Scalar rx = static_cast<Scalar>(roi_w) / w;
    const Scalar ry = static_cast<Scalar>(roi_h) / h;
    return Intrinsics4(k.fx() * rx, k.fy() * ry, (k.ox() - box.x_min) * rx, (k.oy() - box.y_min) * ry);
}

Point25D project_to_roi(const Intrinsics4& k_eq, const RigidTransform& t_ext, const Point3& p_world) {
    const Vec3 cam = t_ext.apply(p_world);
    if (cam(2) <= kDepthEpsilon) {
        throw BehindCamera("project_to_roi: point maps to non-positive depth");
    }
    const Vec3 h = dehomogenize(k_eq.matrix() * (t_ext.matrix() * p_world.homogeneous()));
    const Scalar d = h(2);
    return Point25D{h(0) / d, h(1) / d, d};
}

Point3 lift_to_world(const Intrinsics4& k_eq, const RigidTransform& t_ext, const Point25D& p) {
    if (!(p.d > 0.0)) {
        throw BehindCamera("lift_to_world: depth must be positive");
    }
    const Vec4 x(p.u * p.d, p.v * p.d, p.d, 1.0);
    return dehomogenize(t_ext.inverse().matrix() * (k_eq.inverse_matrix() * x));
}

std::optional<Point25D> warp_candidate(const Intrinsics4& k_src, const RigidTransform& m_ref2src,
                                       const Mat4& k_ref_inv, const Point25D& p) {
    const Vec4 x(p.u * p.d, p.v * p.d, p.d, 1.0);
    const Vec3 h = dehomogenize(k_src.matrix() * (m_ref2src.matrix() * (k_ref_inv * x)));
    const Scalar d = h(2);
    if (d <= kDepthEpsilon) return std::nullopt;
    return Point25D{h(0) / d, h(1) / d, d};
}

}  // namespace roistereo
