// Common scalar and dense-type aliases. All math runs in double precision;
// uses Eigen as the only math dependency.

#pragma once

#include <Eigen/Dense>

namespace roistereo {

using Scalar = double;

using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
using Vec5 = Eigen::Matrix<Scalar, 5, 1>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ArrXb = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// World points are meters. Point25D couples RoI pixel coordinates with a
// metric depth; depth is always camera-frame and must stay positive.
using Point3 = Vec3;

struct Point25D {
    Scalar u = 0.0;
    Scalar v = 0.0;
    Scalar d = 0.0;
};

// Behind-camera rejection threshold, meters.
inline constexpr Scalar kDepthEpsilon = 1e-6;

// Divides a homogeneous 4-vector by its last component. Works on any
// expression yielding a 4-vector.
template <typename Derived>
Vec3 dehomogenize(const Eigen::MatrixBase<Derived>& h) {
    static_assert(Derived::RowsAtCompileTime == 4 || Derived::RowsAtCompileTime == Eigen::Dynamic);
    const Vec4 v = h;
    return v.template head<3>() / v(3);
}

}  // namespace roistereo
