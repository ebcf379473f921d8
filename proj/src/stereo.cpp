#include "roistereo/stereo.hpp"

#include <cmath>

namespace roistereo {

DepthSweep sid_samples(Scalar center_d, Scalar alpha, int depth_bins) {
    if (!(center_d > 0.0) || !(alpha > 1.0) || depth_bins < 2) {
        throw InvalidRange("sid_samples: need center_d > 0, alpha > 1, D >= 2");
    }
    const Scalar d_min = center_d / alpha;
    const Scalar d_max = alpha * center_d;
    const Scalar ratio = d_max / d_min;

    DepthSweep sweep;
    sweep.center_d = center_d;
    sweep.alpha = alpha;
    sweep.candidates.resize(depth_bins);
    for (int k = 0; k < depth_bins; ++k) {
        sweep.candidates(k) =
            d_min * std::pow(ratio, static_cast<Scalar>(k) / static_cast<Scalar>(depth_bins - 1));
    }
    return sweep;
}

std::optional<Point3> prior_center(const VecX& a_row, const std::vector<Point3>& aligned_points,
                                   Scalar eps) {
    const auto mh = static_cast<Eigen::Index>(aligned_points.size());
    if (a_row.size() != mh + 1) {
        throw ShapeMismatch("prior_center: row length must be history count + 1");
    }
    const Scalar real_mass = mh > 0 ? a_row.head(mh).sum() : 0.0;
    if (real_mass < eps) return std::nullopt;

    Point3 p = Point3::Zero();
    for (Eigen::Index n = 0; n < mh; ++n) p += a_row(n) * aligned_points[static_cast<size_t>(n)];
    return p;
}

CostVolume build_cost_volume(const RoIPair& pair, const DepthSweep& sweep) {
    const int d = sweep.size();
    const int w = pair.ref_roi.roi_w;
    const int h = pair.ref_roi.roi_h;
    const int c = pair.ref_roi.channels;
    if (pair.src_roi.channels != c) {
        throw ShapeMismatch("build_cost_volume: channel mismatch between RoIs");
    }

    CostVolume cv;
    cv.depth_bins = d;
    cv.roi_w = w;
    cv.roi_h = h;
    cv.scores = MatX::Zero(d, w * h);
    cv.valid = ArrXb::Constant(d, w * h, false);

    const Mat4 k_ref_inv = pair.k_ref.inverse_matrix();
    const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(c));
    const Scalar src_w_max = static_cast<Scalar>(pair.src_roi.roi_w - 1);
    const Scalar src_h_max = static_cast<Scalar>(pair.src_roi.roi_h - 1);

    for (int k = 0; k < d; ++k) {
        const Scalar depth = sweep.candidates(k);
        for (int v = 0; v < h; ++v) {
            for (int u = 0; u < w; ++u) {
                // Cell (u, v) sits at RoI coordinate (u+0.5, v+0.5).
                const Point25D ref{u + 0.5, v + 0.5, depth};
                const auto warped = warp_candidate(pair.k_src, pair.ref2src, k_ref_inv, ref);
                if (!warped) continue;
                const Scalar su = warped->u - 0.5;
                const Scalar sv = warped->v - 0.5;
                if (su < 0.0 || su > src_w_max || sv < 0.0 || sv > src_h_max) continue;
                const VecX sampled = pair.src_roi.sample(su, sv);
                cv.scores(k, v * w + u) = pair.ref_roi.feature(u, v).dot(sampled) * scale;
                cv.valid(k, v * w + u) = true;
            }
        }
    }
    return cv;
}

CostVolume regularize_cost_volume(const CostVolume& cv, Scalar kernel_sigma_d) {
    if (kernel_sigma_d < 0.0) throw InvalidRange("regularize_cost_volume: sigma must be >= 0");
    if (kernel_sigma_d == 0.0) return cv;

    const int radius = static_cast<int>(std::ceil(3.0 * kernel_sigma_d));
    VecX weights(2 * radius + 1);
    for (int j = -radius; j <= radius; ++j) {
        weights(j + radius) = std::exp(-0.5 * (j * j) / (kernel_sigma_d * kernel_sigma_d));
    }

    CostVolume out = cv;
    const int d = cv.depth_bins;
    const auto pixels = cv.scores.cols();
    for (Eigen::Index p = 0; p < pixels; ++p) {
        for (int k = 0; k < d; ++k) {
            if (!cv.valid(k, p)) continue;
            Scalar num = 0.0;
            Scalar den = 0.0;
            const int lo = std::max(0, k - radius);
            const int hi = std::min(d - 1, k + radius);
            for (int j = lo; j <= hi; ++j) {
                if (!cv.valid(j, p)) continue;
                const Scalar wgt = weights(j - k + radius);
                num += wgt * cv.scores(j, p);
                den += wgt;
            }
            out.scores(k, p) = num / den;  // den >= weight at j == k > 0
        }
    }
    return out;
}

namespace {

// Argmax over valid bins of one pixel; ties toward the smaller depth index.
int argmax_valid(const CostVolume& cv, Eigen::Index pixel) {
    int best = -1;
    Scalar best_score = 0.0;
    for (int k = 0; k < cv.depth_bins; ++k) {
        if (!cv.valid(k, pixel)) continue;
        if (best < 0 || cv.scores(k, pixel) > best_score) {
            best = k;
            best_score = cv.scores(k, pixel);
        }
    }
    return best;
}

}  // namespace

Scalar select_depth(const CostVolume& cv, const DepthSweep& sweep, DepthRegion region) {
    if (sweep.size() != cv.depth_bins) {
        throw ShapeMismatch("select_depth: sweep size does not match volume");
    }
    if (region == DepthRegion::center_only) {
        const Eigen::Index pixel = (cv.roi_h / 2) * cv.roi_w + (cv.roi_w / 2);
        const int k = argmax_valid(cv, pixel);
        if (k < 0) throw EmptyVolume("select_depth: center pixel has no valid entry");
        return sweep.candidates(k);
    }

    Scalar sum = 0.0;
    int count = 0;
    for (Eigen::Index p = 0; p < cv.scores.cols(); ++p) {
        const int k = argmax_valid(cv, p);
        if (k < 0) continue;
        sum += sweep.candidates(k);
        ++count;
    }
    if (count == 0) throw EmptyVolume("select_depth: no valid entries");
    return sum / static_cast<Scalar>(count);
}

Point3 stereo_reference_point(const Vec2& box_center_uv, Scalar depth, const Intrinsics4& k_eq,
                              const RigidTransform& t_ext) {
    return lift_to_world(k_eq, t_ext, Point25D{box_center_uv(0), box_center_uv(1), depth});
}

namespace {

Scalar local_bin_width(const DepthSweep& sweep, Scalar depth) {
    const int d = sweep.size();
    int k = 0;
    Scalar best = std::abs(sweep.candidates(0) - depth);
    for (int i = 1; i < d; ++i) {
        const Scalar err = std::abs(sweep.candidates(i) - depth);
        if (err < best) {
            best = err;
            k = i;
        }
    }
    if (k + 1 < d) return sweep.candidates(k + 1) - sweep.candidates(k);
    return sweep.candidates(k) - sweep.candidates(k - 1);
}

}  // namespace

std::vector<RtsmOutput> run_rtsm(const std::vector<std::optional<RoIPair>>& pairs,
                                 const AssignmentMatrix& assignment,
                                 const std::vector<Point3>& aligned_points,
                                 const RtsmConfig& config) {
    if (static_cast<int>(pairs.size()) != assignment.rows()) {
        throw ShapeMismatch("run_rtsm: one pair slot per assignment row required");
    }

    std::vector<RtsmOutput> out(pairs.size());
    for (int m = 0; m < assignment.rows(); ++m) {
        if (!pairs[static_cast<size_t>(m)]) continue;
        const RoIPair& pair = *pairs[static_cast<size_t>(m)];

        const auto prior = prior_center(assignment.row(m), aligned_points, config.eps);
        if (!prior) continue;

        Scalar prior_depth = 0.0;
        try {
            prior_depth = project_to_roi(pair.k_ref, pair.t_ref, *prior).d;
        } catch (const BehindCamera&) {
            continue;  // aggregated prior is unusable for this view
        }

        const DepthSweep sweep = sid_samples(prior_depth, config.alpha, config.depth_bins);
        const CostVolume cv =
            regularize_cost_volume(build_cost_volume(pair, sweep), config.kernel_sigma_d);

        Scalar depth = 0.0;
        try {
            depth = select_depth(cv, sweep, config.region);
        } catch (const EmptyVolume&) {
            continue;
        }

        RtsmOutput& o = out[static_cast<size_t>(m)];
        o.depth = depth;
        o.bin_width = local_bin_width(sweep, depth);
        const Vec2 center(0.5 * pair.ref_roi.roi_w, 0.5 * pair.ref_roi.roi_h);
        o.point = stereo_reference_point(center, depth, pair.k_ref, pair.t_ref);
    }
    return out;
}

}  // namespace roistereo
