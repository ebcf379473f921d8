// RoI-level temporal stereo: depth prior aggregation, log-space depth
// sampling, plane-sweep cost volumes between matched RoIs, depth selection
// and stereo reference-point lifting.

#pragma once

#include <optional>
#include <vector>

#include "roistereo/featuregrid.hpp"
#include "roistereo/geometry.hpp"
#include "roistereo/matching.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

// Log-uniform depth candidates over [center/alpha, alpha*center].
struct DepthSweep {
    Scalar center_d = 0.0;
    Scalar alpha = 0.0;
    VecX candidates;  // ascending, constant ratio

    int size() const { return static_cast<int>(candidates.size()); }
};

DepthSweep sid_samples(Scalar center_d, Scalar alpha, int depth_bins);

// Per-RoI matching scores over depth candidates. Entry (k, v*roi_w + u)
// scores candidate k at RoI cell (u, v); invalid samples (warp outside the
// source RoI or behind the camera) are masked rather than clamped.
struct CostVolume {
    int depth_bins = 0;
    int roi_w = 0;
    int roi_h = 0;
    MatX scores;   // depth_bins x (roi_h*roi_w)
    ArrXb valid;   // same layout

    Scalar score(int k, int u, int v) const { return scores(k, v * roi_w + u); }
    bool is_valid(int k, int u, int v) const { return valid(k, v * roi_w + u); }
};

// A matched reference/source RoI pair with the calibration needed to sweep.
// Equivalent intrinsics are derived from each RoI's own box; t_ref maps world
// coordinates into the reference camera.
struct RoIPair {
    RoIFeature ref_roi;
    RoIFeature src_roi;
    Intrinsics4 k_ref{1, 1, 0, 0};
    Intrinsics4 k_src{1, 1, 0, 0};
    RigidTransform ref2src;
    RigidTransform t_ref;
};

// Weighted aggregation of aligned history points by one assignment row (real
// columns only). Returns nullopt when the row carries no real mass.
std::optional<Point3> prior_center(const VecX& a_row, const std::vector<Point3>& aligned_points,
                                   Scalar eps = 1e-6);

CostVolume build_cost_volume(const RoIPair& pair, const DepthSweep& sweep);

// 1-D Gaussian smoothing along the depth axis, renormalized over valid
// entries; sigma is in bin units and 0 is the identity.
CostVolume regularize_cost_volume(const CostVolume& cv, Scalar kernel_sigma_d);

enum class DepthRegion { entire_roi, center_only };

// entire_roi: mean over pixels of the per-pixel argmax depth (ties toward the
// smaller index). center_only: argmax at cell (roi_w/2, roi_h/2).
Scalar select_depth(const CostVolume& cv, const DepthSweep& sweep, DepthRegion region);

Point3 stereo_reference_point(const Vec2& box_center_uv, Scalar depth, const Intrinsics4& k_eq,
                              const RigidTransform& t_ext);

struct RtsmConfig {
    int depth_bins = 64;
    Scalar alpha = 1.5;
    Scalar kernel_sigma_d = 1.0;  // bins
    DepthRegion region = DepthRegion::entire_roi;
    Scalar eps = 1e-6;
};

struct RtsmOutput {
    std::optional<Point3> point;   // nullopt == no real mass / no usable pair
    Scalar depth = 0.0;            // selected depth when point is set
    Scalar bin_width = 0.0;        // local candidate gap at the selection
};

// Per current RoI: prior aggregation -> SID sweep -> cost volume ->
// regularization -> depth selection -> lift. pairs[m] must correspond to row
// m of the assignment (nullopt when no source RoI was available).
std::vector<RtsmOutput> run_rtsm(const std::vector<std::optional<RoIPair>>& pairs,
                                 const AssignmentMatrix& assignment,
                                 const std::vector<Point3>& aligned_points,
                                 const RtsmConfig& config = {});

}  // namespace roistereo
