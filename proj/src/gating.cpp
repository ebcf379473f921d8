#include "roistereo/gating.hpp"

#include <algorithm>
#include <cmath>

#include "roistereo/nn.hpp"
#include "roistereo/rng.hpp"

namespace roistereo {

ParamBlock GateParams::to_param_block() const {
    ParamBlock block;
    block.set("gate_w1", mlp_w1);
    block.set("gate_b1", mlp_b1);
    block.set("gate_w2", mlp_w2);
    MatX b2(1, 1);
    b2(0, 0) = mlp_b2;
    block.set("gate_b2", b2);
    block.set("psi_w", psi_w);
    block.set("psi_b", psi_b);
    return block;
}

GateParams GateParams::from_param_block(const ParamBlock& block) {
    GateParams p;
    p.mlp_w1 = block.tensor("gate_w1");
    p.mlp_b1 = block.vector("gate_b1");
    p.mlp_w2 = block.vector("gate_w2");
    p.mlp_b2 = block.tensor("gate_b2")(0, 0);
    p.psi_w = block.tensor("psi_w");
    p.psi_b = block.vector("psi_b");
    if (p.mlp_w1.rows() != p.mlp_b1.size() || p.mlp_w1.cols() != 5 ||
        p.mlp_w2.size() != p.mlp_b1.size() || p.psi_w.rows() != p.psi_b.size()) {
        throw ShapeMismatch("GateParams: inconsistent tensor shapes");
    }
    return p;
}

void GateParams::save(const std::string& path) const { to_param_block().save(path); }

GateParams GateParams::load(const std::string& path) {
    return from_param_block(ParamBlock::load(path));
}

GateParams make_default_gate_params(std::uint64_t seed, int hidden, int channels, int psi_dim) {
    Rng rng(mix_seed(seed, 0x67617465));
    GateParams p;
    p.mlp_w1.resize(hidden, 5);
    for (Eigen::Index r = 0; r < p.mlp_w1.rows(); ++r)
        for (Eigen::Index c = 0; c < 5; ++c) p.mlp_w1(r, c) = rng.gaussian(0.0, 0.5);
    p.mlp_b1 = VecX::Zero(hidden);
    p.mlp_w2.resize(hidden);
    for (Eigen::Index r = 0; r < hidden; ++r) p.mlp_w2(r) = rng.gaussian(0.0, 0.5);
    p.mlp_b2 = 0.0;
    p.psi_w.resize(psi_dim, channels);
    const Scalar sigma = 1.0 / std::sqrt(static_cast<Scalar>(channels));
    for (Eigen::Index r = 0; r < psi_dim; ++r)
        for (Eigen::Index c = 0; c < channels; ++c) p.psi_w(r, c) = rng.gaussian(0.0, sigma);
    p.psi_b = VecX::Zero(psi_dim);
    return p;
}

GateDescriptor match_statistics(const VecX& a_row, Scalar eps) {
    if (a_row.size() < 1) throw ShapeMismatch("match_statistics: empty row");
    const Eigen::Index mh = a_row.size() - 1;

    GateDescriptor z;
    const Scalar rho_dum = a_row(mh);
    z.one_minus_dum = 1.0 - rho_dum;
    z.rho_real = mh > 0 ? a_row.head(mh).sum() : 0.0;

    Scalar top1 = 0.0;
    Scalar top2 = 0.0;
    Scalar entropy = 0.0;
    for (Eigen::Index n = 0; n < mh; ++n) {
        const Scalar a = a_row(n);
        if (a > top1) {
            top2 = top1;
            top1 = a;
        } else if (a > top2) {
            top2 = a;
        }
        entropy -= a * std::log(a + eps);
    }
    z.rho_max = top1;
    z.rho_gap = top1 - top2;
    z.neg_entropy = -entropy;
    return z;
}

namespace {

VecX psi_embedding(const RoIFeature& roi, const GateParams& params) {
    if (params.psi_w.cols() != roi.channels) {
        throw ShapeMismatch("psi: projection width does not match RoI channels");
    }
    const VecX pooled = roi.data.colwise().mean().transpose();
    return layer_norm(linear(params.psi_w, params.psi_b, pooled));
}

}  // namespace

Scalar cosine_affinity(const RoIFeature& roi_cur, const RoIFeature& roi_best,
                       const GateParams& params) {
    if (roi_cur.roi_w != roi_best.roi_w || roi_cur.roi_h != roi_best.roi_h ||
        roi_cur.channels != roi_best.channels) {
        throw ShapeMismatch("cosine_affinity: RoI shapes differ");
    }
    const VecX a = psi_embedding(roi_cur, params);
    const VecX b = psi_embedding(roi_best, params);
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;  // degenerate embedding
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

Scalar gate_confidence(const GateDescriptor& z, const GateParams& params, Scalar eps) {
    if (z.rho_real <= eps) return 0.0;  // forced monocular fallback
    const VecX hidden = (params.mlp_w1 * z.vec() + params.mlp_b1).array().tanh();
    return sigmoid(params.mlp_w2.dot(hidden) + params.mlp_b2);
}

Point3 fuse_reference(Scalar c, const Point3& p_stereo, const Point3& p_mono) {
    return c * p_stereo + (1.0 - c) * p_mono;
}

GateGradient gate_gradient(const GateDescriptor& z, const GateParams& params) {
    GateGradient g;
    g.d_w1 = MatX::Zero(params.mlp_w1.rows(), params.mlp_w1.cols());
    g.d_b1 = VecX::Zero(params.mlp_b1.size());
    g.d_w2 = VecX::Zero(params.mlp_w2.size());
    if (z.rho_real <= 1e-6) return g;  // fallback branch: c is constant 0

    const Vec5 zv = z.vec();
    const VecX pre = params.mlp_w1 * zv + params.mlp_b1;
    const VecX a = pre.array().tanh();
    const Scalar f = params.mlp_w2.dot(a) + params.mlp_b2;
    const Scalar c = sigmoid(f);
    const Scalar dsig = c * (1.0 - c);

    const VecX da = params.mlp_w2;                               // df/da
    const VecX dpre = da.array() * (1.0 - a.array().square());   // df/dpre

    g.d_w2 = dsig * a;
    g.d_b2 = dsig;
    g.d_b1 = dsig * dpre;
    g.d_w1 = dsig * dpre * zv.transpose();
    g.d_z = (dsig * (params.mlp_w1.transpose() * dpre)).head<5>();
    return g;
}

CalibrationResult calibrate_gate(const std::vector<GateSample>& samples, Scalar lr, int steps,
                                 std::uint64_t seed) {
    if (samples.empty()) throw DegenerateLabels("calibrate_gate: no samples");
    bool has_pos = false;
    bool has_neg = false;
    for (const auto& s : samples) (s.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw DegenerateLabels("calibrate_gate: both labels must be present");
    }

    CalibrationResult result;
    result.params = make_default_gate_params(seed);
    GateParams& p = result.params;
    result.loss_curve.reserve(static_cast<size_t>(steps));

    const Scalar n = static_cast<Scalar>(samples.size());
    for (int step = 0; step < steps; ++step) {
        MatX gw1 = MatX::Zero(p.mlp_w1.rows(), p.mlp_w1.cols());
        VecX gb1 = VecX::Zero(p.mlp_b1.size());
        VecX gw2 = VecX::Zero(p.mlp_w2.size());
        Scalar gb2 = 0.0;
        Scalar loss = 0.0;

        for (const auto& s : samples) {
            const Scalar c = gate_confidence(s.descriptor, p);
            const Scalar y = static_cast<Scalar>(s.label);
            const Scalar cc = std::clamp(c, 1e-12, 1.0 - 1e-12);
            loss += -(y * std::log(cc) + (1.0 - y) * std::log(1.0 - cc));

            // dL/dtheta = (c - y) * df/dtheta; recover df/dtheta from the
            // analytic dc/dtheta = sigma' * df/dtheta.
            const GateGradient g = gate_gradient(s.descriptor, p);
            const Scalar dsig = std::max(cc * (1.0 - cc), 1e-12);
            const Scalar factor = (c - y) / dsig;
            gw1 += factor * g.d_w1;
            gb1 += factor * g.d_b1;
            gw2 += factor * g.d_w2;
            gb2 += factor * g.d_b2;
        }

        result.loss_curve.push_back(loss / n);
        p.mlp_w1 -= (lr / n) * gw1;
        p.mlp_b1 -= (lr / n) * gb1;
        p.mlp_w2 -= (lr / n) * gw2;
        p.mlp_b2 -= (lr / n) * gb2;
    }
    return result;
}

std::vector<FusedResult> fuse_pipeline(const std::vector<std::optional<Point3>>& stereo_results,
                                       const std::vector<Point3>& mono_results,
                                       const AssignmentMatrix& assignment,
                                       const std::vector<RoIFeature>& rois_cur,
                                       const std::vector<RoIFeature>& rois_prev,
                                       const GateParams& params, FusionMode mode, Scalar eps) {
    const size_t count = stereo_results.size();
    if (mono_results.size() != count || rois_cur.size() != count ||
        static_cast<size_t>(assignment.rows()) != count) {
        throw ShapeMismatch("fuse_pipeline: result lists must align with assignment rows");
    }

    std::vector<FusedResult> out(count);
    for (size_t m = 0; m < count; ++m) {
        FusedResult& r = out[m];
        if (!stereo_results[m]) {
            r.point = mono_results[m];
            r.confidence = 0.0;
            continue;
        }
        if (mode == FusionMode::avg_fusion) {
            r.confidence = 0.5;
            r.point = fuse_reference(0.5, *stereo_results[m], mono_results[m]);
            continue;
        }

        GateDescriptor z = match_statistics(assignment.row(static_cast<int>(m)), eps);
        const int n_star = assignment.argmax_real(static_cast<int>(m));
        if (n_star >= 0 && static_cast<size_t>(n_star) < rois_prev.size()) {
            z.phi = cosine_affinity(rois_cur[m], rois_prev[static_cast<size_t>(n_star)], params);
        }
        r.confidence = gate_confidence(z, params, eps);
        r.point = fuse_reference(r.confidence, *stereo_results[m], mono_results[m]);
    }
    return out;
}

}  // namespace roistereo
