// Dynamic confidence gating: association statistics, appearance affinity,
// gate MLP with hard monocular fallback, convex fusion and a calibration
// routine with analytic gradients.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "roistereo/featuregrid.hpp"
#include "roistereo/matching.hpp"
#include "roistereo/params.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

// Five statistics driving the gate, in fixed order
// [1 - rho_dum, rho_max, rho_gap, -H, phi]; rho_real rides along for the
// hard-fallback test.
struct GateDescriptor {
    Scalar one_minus_dum = 0.0;
    Scalar rho_max = 0.0;
    Scalar rho_gap = 0.0;
    Scalar neg_entropy = 0.0;
    Scalar phi = 0.0;
    Scalar rho_real = 0.0;

    Vec5 vec() const {
        Vec5 z;
        z << one_minus_dum, rho_max, rho_gap, neg_entropy, phi;
        return z;
    }
};

// Two-layer gate MLP (Linear -> tanh -> Linear -> sigmoid) plus the psi
// embedding (global average pool -> linear -> layer norm) for Eq-style
// appearance affinity. Serializes in the ParamBlock JSON weight format.
struct GateParams {
    MatX mlp_w1;  // hidden x 5
    VecX mlp_b1;  // hidden
    VecX mlp_w2;  // hidden
    Scalar mlp_b2 = 0.0;
    MatX psi_w;  // psi_dim x C
    VecX psi_b;  // psi_dim

    int hidden() const { return static_cast<int>(mlp_b1.size()); }

    ParamBlock to_param_block() const;
    static GateParams from_param_block(const ParamBlock& block);
    void save(const std::string& path) const;
    static GateParams load(const std::string& path);
};

GateParams make_default_gate_params(std::uint64_t seed, int hidden = 16, int channels = 16,
                                    int psi_dim = 8);

// Association-shape statistics of one assignment row. phi is left at 0 for
// the caller to fill in.
GateDescriptor match_statistics(const VecX& a_row, Scalar eps = 1e-6);

// Cosine of psi(cur) and psi(best); 0 when either embedding degenerates.
Scalar cosine_affinity(const RoIFeature& roi_cur, const RoIFeature& roi_best,
                       const GateParams& params);

// sigma(f_theta(z)) in (0,1), or exactly 0 when rho_real <= eps.
Scalar gate_confidence(const GateDescriptor& z, const GateParams& params, Scalar eps = 1e-6);

// c * p_stereo + (1 - c) * p_mono, componentwise.
Point3 fuse_reference(Scalar c, const Point3& p_stereo, const Point3& p_mono);

// Analytic gradient of sigma(f_theta(z)) w.r.t. all MLP weights and z.
// Identically zero on the fallback branch.
struct GateGradient {
    MatX d_w1;
    VecX d_b1;
    VecX d_w2;
    Scalar d_b2 = 0.0;
    Vec5 d_z = Vec5::Zero();
};

GateGradient gate_gradient(const GateDescriptor& z, const GateParams& params);

struct GateSample {
    GateDescriptor descriptor;
    int label = 0;  // 1: trust the stereo prior
};

struct CalibrationResult {
    GateParams params;
    std::vector<Scalar> loss_curve;  // binary cross-entropy per step
};

// Full-batch gradient descent on binary cross-entropy. Deterministic given
// the seed; lr = 0 leaves the initialization untouched.
CalibrationResult calibrate_gate(const std::vector<GateSample>& samples, Scalar lr, int steps,
                                 std::uint64_t seed);

enum class FusionMode { statistic_gating, avg_fusion };

struct FusedResult {
    Point3 point = Point3::Zero();
    Scalar confidence = 0.0;  // gate output (0.5 fixed for avg fusion)
};

// Per-RoI fusion of the stereo and mono priors. Rows whose stereo branch
// produced no point fall back to the mono prior exactly.
std::vector<FusedResult> fuse_pipeline(const std::vector<std::optional<Point3>>& stereo_results,
                                       const std::vector<Point3>& mono_results,
                                       const AssignmentMatrix& assignment,
                                       const std::vector<RoIFeature>& rois_cur,
                                       const std::vector<RoIFeature>& rois_prev,
                                       const GateParams& params, FusionMode mode,
                                       Scalar eps = 1e-6);

}  // namespace roistereo
