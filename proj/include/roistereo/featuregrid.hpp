// Feature grids and RoI extraction. A feature map stores one C-vector per
// pixel (rows = y*width + x, cols = channels). Pixel (x, y) is centered at
// continuous image coordinate (x + 0.5, y + 0.5); bilinear sampling
// interpolates between those centers.

#pragma once

#include <cstdint>
#include <optional>

#include "roistereo/geometry.hpp"
#include "roistereo/params.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

using Embedding = VecX;

struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    int camera_index = 0;
    std::int64_t timestamp = 0;
    MatX data;  // (height*width) x channels

    FeatureMap() = default;
    FeatureMap(int w, int h, int c) : width(w), height(h), channels(c), data(MatX::Zero(w * h, c)) {}

    Scalar value(int x, int y, int ch) const { return data(y * width + x, ch); }
    Scalar& value(int x, int y, int ch) { return data(y * width + x, ch); }
    auto feature(int x, int y) const { return data.row(y * width + x); }
};

struct RoIFeature {
    int roi_w = 0;
    int roi_h = 0;
    int channels = 0;
    std::int64_t timestamp = 0;
    BBox2D source_box{0, 0, 1, 1, 0};
    MatX data;  // (roi_h*roi_w) x channels

    auto feature(int u, int v) const { return data.row(v * roi_w + u); }

    // Bilinear sample at continuous cell-index coordinates (cell c is at
    // coordinate c). No border clamping: callers must keep su, sv inside
    // [0, roi_w-1] x [0, roi_h-1].
    VecX sample(Scalar su, Scalar sv) const;
};

// Bilinear RoI-Align with one sample per output cell, taken at the cell
// center of a uniform grid over the box.
RoIFeature roi_align(const FeatureMap& fm, const BBox2D& box, int roi_w, int roi_h);

// One 3x3 same-padded convolution, ReLU, then global average pooling.
Embedding appearance_embedding(const RoIFeature& roi, const ParamBlock& params);

enum class ProjectionSpace { current, history };

// Affine map into the shared matching space C'.
Embedding project_embedding(const Embedding& e, const ParamBlock& params, ProjectionSpace which);

// Oracle override for the monocular branch: ground truth plus seeded
// Gaussian noise, used to study fusion behavior.
struct MonoOracle {
    Point3 ground_truth = Point3::Zero();
    Scalar noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Monocular 3D prior for one RoI. Default mode runs the deterministic
// stand-in regressor on the pooled RoI embedding plus flattened equivalent
// intrinsics and lifts the result to world coordinates; the camera-frame
// depth of the output is positive by construction.
Point3 mono_reference_point(const RoIFeature& roi, const Intrinsics4& k_eq,
                            const RigidTransform& t_ext, const ParamBlock& params,
                            const std::optional<MonoOracle>& oracle_override = std::nullopt);

}  // namespace roistereo
