#include "roistereo/featuregrid.hpp"

#include <cmath>

#include "roistereo/nn.hpp"
#include "roistereo/rng.hpp"

namespace roistereo {

VecX RoIFeature::sample(Scalar su, Scalar sv) const {
    const Scalar fu = std::floor(su);
    const Scalar fv = std::floor(sv);
    int u0 = static_cast<int>(fu);
    int v0 = static_cast<int>(fv);
    Scalar tu = su - fu;
    Scalar tv = sv - fv;
    // Exactly-on-the-last-cell coordinates still have a valid 1x1 support.
    if (u0 == roi_w - 1 && tu == 0.0 && roi_w > 1) {
        u0 -= 1;
        tu = 1.0;
    }
    if (v0 == roi_h - 1 && tv == 0.0 && roi_h > 1) {
        v0 -= 1;
        tv = 1.0;
    }
    const int u1 = (roi_w > 1) ? u0 + 1 : u0;
    const int v1 = (roi_h > 1) ? v0 + 1 : v0;
    const auto r00 = data.row(v0 * roi_w + u0);
    const auto r10 = data.row(v0 * roi_w + u1);
    const auto r01 = data.row(v1 * roi_w + u0);
    const auto r11 = data.row(v1 * roi_w + u1);
    return ((1.0 - tv) * ((1.0 - tu) * r00 + tu * r10) + tv * ((1.0 - tu) * r01 + tu * r11))
        .transpose();
}

namespace {

// Bilinear sample of a feature map at continuous image coordinates, pixel
// centers at (x+0.5, y+0.5). Border pixels extend outward (samples may fall
// inside the half-pixel margin of a clipped box).
VecX sample_feature_map(const FeatureMap& fm, Scalar x, Scalar y) {
    const Scalar sx = x - 0.5;
    const Scalar sy = y - 0.5;
    const Scalar fx = std::floor(sx);
    const Scalar fy = std::floor(sy);
    int x0 = static_cast<int>(fx);
    int y0 = static_cast<int>(fy);
    Scalar tx = sx - fx;
    Scalar ty = sy - fy;
    if (x0 < 0) {
        x0 = 0;
        tx = 0.0;
    }
    if (y0 < 0) {
        y0 = 0;
        ty = 0.0;
    }
    if (x0 >= fm.width - 1) {
        x0 = fm.width - 1;
        tx = 0.0;
    }
    if (y0 >= fm.height - 1) {
        y0 = fm.height - 1;
        ty = 0.0;
    }
    const int x1 = (x0 + 1 < fm.width) ? x0 + 1 : x0;
    const int y1 = (y0 + 1 < fm.height) ? y0 + 1 : y0;
    const auto r00 = fm.data.row(y0 * fm.width + x0);
    const auto r10 = fm.data.row(y0 * fm.width + x1);
    const auto r01 = fm.data.row(y1 * fm.width + x0);
    const auto r11 = fm.data.row(y1 * fm.width + x1);
    return ((1.0 - ty) * ((1.0 - tx) * r00 + tx * r10) + ty * ((1.0 - tx) * r01 + tx * r11))
        .transpose();
}

}  // namespace

RoIFeature roi_align(const FeatureMap& fm, const BBox2D& box, int roi_w, int roi_h) {
    if (roi_w < 1 || roi_h < 1) throw InvalidRange("roi_align: roi sizes must be >= 1");
    if (box.x_max <= 0.0 || box.y_max <= 0.0 || box.x_min >= fm.width || box.y_min >= fm.height) {
        throw DegenerateBox("roi_align: box does not intersect the image");
    }
    const Scalar bw = box.width();
    const Scalar bh = box.height();
    if (bw < 1e-9 || bh < 1e-9) throw DegenerateBox("roi_align: box extent underflow");

    RoIFeature roi;
    roi.roi_w = roi_w;
    roi.roi_h = roi_h;
    roi.channels = fm.channels;
    roi.timestamp = fm.timestamp;
    roi.source_box = box;
    roi.data.resize(roi_w * roi_h, fm.channels);

    const Scalar cell_w = bw / roi_w;
    const Scalar cell_h = bh / roi_h;
    for (int j = 0; j < roi_h; ++j) {
        const Scalar y = box.y_min + (j + 0.5) * cell_h;
        for (int i = 0; i < roi_w; ++i) {
            const Scalar x = box.x_min + (i + 0.5) * cell_w;
            roi.data.row(j * roi_w + i) = sample_feature_map(fm, x, y).transpose();
        }
    }
    return roi;
}

Embedding appearance_embedding(const RoIFeature& roi, const ParamBlock& params) {
    const MatX& w = params.tensor("embed_conv_w");
    const VecX b = params.vector("embed_conv_b");
    const int c_in = roi.channels;
    const auto c_out = static_cast<int>(w.rows());
    if (w.cols() != 9 * c_in || b.size() != c_out) {
        throw ShapeMismatch("appearance_embedding: conv weights do not match channel count");
    }

    const int h = roi.roi_h;
    const int wd = roi.roi_w;
    VecX pooled = VecX::Zero(c_out);
    VecX patch(9 * c_in);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < wd; ++u) {
            patch.setZero();
            for (int ky = 0; ky < 3; ++ky) {
                const int vv = v + ky - 1;
                if (vv < 0 || vv >= h) continue;  // zero padding
                for (int kx = 0; kx < 3; ++kx) {
                    const int uu = u + kx - 1;
                    if (uu < 0 || uu >= wd) continue;
                    patch.segment((ky * 3 + kx) * c_in, c_in) = roi.feature(uu, vv).transpose();
                }
            }
            pooled += (w * patch + b).cwiseMax(0.0);
        }
    }
    return pooled / static_cast<Scalar>(h * wd);
}

Embedding project_embedding(const Embedding& e, const ParamBlock& params, ProjectionSpace which) {
    const bool cur = which == ProjectionSpace::current;
    const MatX& w = params.tensor(cur ? "proj_current_w" : "proj_history_w");
    const VecX b = params.vector(cur ? "proj_current_b" : "proj_history_b");
    return linear(w, b, e);
}

Point3 mono_reference_point(const RoIFeature& roi, const Intrinsics4& k_eq,
                            const RigidTransform& t_ext, const ParamBlock& params,
                            const std::optional<MonoOracle>& oracle_override) {
    if (oracle_override) {
        const MonoOracle& o = *oracle_override;
        Rng rng(mix_seed(o.seed, 0x6d6f6e6f));
        Point3 p = o.ground_truth;
        if (o.noise_sigma > 0.0) {
            p += Vec3(rng.gaussian(0.0, o.noise_sigma), rng.gaussian(0.0, o.noise_sigma),
                      rng.gaussian(0.0, o.noise_sigma));
        }
        return p;
    }

    // Deterministic stand-in: pooled embedding + flattened equivalent
    // intrinsics -> 2.5D center, then lifted to world.
    const Embedding pooled = appearance_embedding(roi, params);
    const Mat4 k = k_eq.matrix();
    VecX input(pooled.size() + 16);
    input.head(pooled.size()) = pooled;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) input(pooled.size() + r * 4 + c) = 0.01 * k(r, c);

    const VecX hidden = relu(linear(params.tensor("mono_w1"), params.vector("mono_b1"), input));
    const VecX out = linear(params.tensor("mono_w2"), params.vector("mono_b2"), hidden);

    Point25D center;
    center.u = 0.5 * roi.roi_w + out(0);
    center.v = 0.5 * roi.roi_h + out(1);
    center.d = 1.0 + stable_softplus(out(2) + 2.0);  // strictly positive depth
    return lift_to_world(k_eq, t_ext, center);
}

}  // namespace roistereo
