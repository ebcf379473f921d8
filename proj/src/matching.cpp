#include "roistereo/matching.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "roistereo/nn.hpp"

namespace roistereo {

namespace {
constexpr Scalar kRowSumTol = 1e-6;

Scalar logsumexp(const VecX& x) {
    const Scalar m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
}
}  // namespace

AssignmentMatrix::AssignmentMatrix(MatX values, int history_count)
    : values_(std::move(values)), history_count_(history_count) {
    if (values_.cols() != history_count_ + 1 || values_.rows() < 1) {
        throw ShapeMismatch("AssignmentMatrix: expected Mt x (Mh+1) values");
    }
    if (values_.minCoeff() < -1e-12 || values_.maxCoeff() > 1.0 + kRowSumTol) {
        throw Error("AssignmentMatrix: entries outside [0,1]");
    }
    for (int m = 0; m < rows(); ++m) {
        if (std::abs(values_.row(m).sum() - 1.0) > kRowSumTol) {
            throw Error("AssignmentMatrix: row " + std::to_string(m) + " does not sum to 1");
        }
    }
    for (int n = 0; n < history_count_; ++n) {
        if (values_.col(n).sum() > 1.0 + kRowSumTol) {
            throw Error("AssignmentMatrix: real column " + std::to_string(n) + " exceeds 1");
        }
    }
}

int AssignmentMatrix::argmax_real(int m) const {
    if (history_count_ == 0) return -1;
    int best = 0;
    for (int n = 1; n < history_count_; ++n) {
        if (values_(m, n) > values_(m, best)) best = n;
    }
    return best;
}

int AssignmentMatrix::argmax_row(int m) const {
    int best = 0;
    for (int n = 1; n < values_.cols(); ++n) {
        if (values_(m, n) > values_(m, best)) best = n;
    }
    return best == history_count_ ? -1 : best;
}

void AssignmentMatrix::to_csv(std::ostream& out) const {
    const auto old_precision = out.precision(std::numeric_limits<Scalar>::max_digits10);
    out << rows() << "," << history_count_ << "\n";
    for (int m = 0; m < rows(); ++m) {
        for (int n = 0; n < values_.cols(); ++n) {
            if (n) out << ",";
            out << values_(m, n);
        }
        out << "\n";
    }
    out.precision(old_precision);
}

Embedding positional_encode(const MotionContext& ctx, const Vec2& velocity) {
    VecX x(15);
    x(0) = velocity(0);
    x(1) = velocity(1);
    x(2) = ctx.dt;
    const Mat4& e = ctx.ego.matrix();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) x(3 + r * 4 + c) = e(r, c);

    const auto bands = static_cast<int>(ctx.pe_frequencies.size());
    Embedding pe(2 * bands * x.size());
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (int k = 0; k < bands; ++k) {
            const Scalar arg = ctx.pe_frequencies(k) * x(i);
            pe(idx++) = std::sin(arg);
            pe(idx++) = std::cos(arg);
        }
    }
    return pe;
}

std::pair<Embedding, Embedding> motion_affine_params(const Embedding& pe, const ParamBlock& params) {
    Embedding gamma = linear(params.tensor("affine_gamma_w"), params.vector("affine_gamma_b"), pe);
    Embedding beta = linear(params.tensor("affine_beta_w"), params.vector("affine_beta_b"), pe);
    return {std::move(gamma), std::move(beta)};
}

namespace {

Embedding position_mlp(const Point3& p, const ParamBlock& params) {
    const VecX hidden =
        relu(linear(params.tensor("mlp_pos_w1"), params.vector("mlp_pos_b1"), VecX(p)));
    return linear(params.tensor("mlp_pos_w2"), params.vector("mlp_pos_b2"), hidden);
}

}  // namespace

TemporalAlignment temporal_align(const std::vector<HistoricalQuery>& queries,
                                 const MotionContext& ctx, const ParamBlock& params,
                                 MatchingMode mode) {
    TemporalAlignment out;
    out.aligned_points.reserve(queries.size());
    out.embeddings.reserve(queries.size());

    for (const auto& q : queries) {
        const Point3 aligned =
            (mode == MatchingMode::motion_3d) ? ctx.ego.apply(q.ref_point) : q.ref_point;
        out.aligned_points.push_back(aligned);

        switch (mode) {
            case MatchingMode::appearance_only: {
                out.embeddings.push_back(layer_norm(q.appearance));
                break;
            }
            case MatchingMode::motion_2d: {
                const auto [gamma, beta] = motion_affine_params(positional_encode(ctx, q.velocity), params);
                if (gamma.size() != q.appearance.size()) {
                    throw ShapeMismatch("temporal_align: affine width does not match embedding");
                }
                out.embeddings.push_back(
                    (gamma.array() * layer_norm(q.appearance).array() + beta.array()).matrix());
                break;
            }
            case MatchingMode::motion_3d: {
                const auto [gamma, beta] = motion_affine_params(positional_encode(ctx, q.velocity), params);
                if (gamma.size() != q.appearance.size()) {
                    throw ShapeMismatch("temporal_align: affine width does not match embedding");
                }
                const VecX pos = layer_norm(position_mlp(aligned, params));
                const VecX app = layer_norm(q.appearance);
                const VecX pos_mod = (gamma.array() * pos.array() + beta.array()).matrix();
                const VecX app_mod = (gamma.array() * app.array() + beta.array()).matrix();
                out.embeddings.push_back(pos_mod + app_mod);
                break;
            }
        }
    }
    return out;
}

MatX similarity_matrix(const std::vector<Embedding>& cur, const std::vector<Embedding>& hist) {
    if (cur.empty()) throw InvalidRange("similarity_matrix: no current embeddings");
    const Eigen::Index dim = cur.front().size();
    for (const auto& e : cur)
        if (e.size() != dim) throw ShapeMismatch("similarity_matrix: inconsistent current widths");
    for (const auto& e : hist)
        if (e.size() != dim) throw ShapeMismatch("similarity_matrix: inconsistent history widths");

    const auto m = static_cast<Eigen::Index>(cur.size());
    const auto nh = static_cast<Eigen::Index>(hist.size());
    const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(dim));
    MatX s = MatX::Zero(m, nh + 1);  // dummy column stays exactly zero
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index n = 0; n < nh; ++n) {
            s(i, n) = cur[static_cast<size_t>(i)].dot(hist[static_cast<size_t>(n)]) * scale;
        }
    }
    return s;
}

AssignmentMatrix sinkhorn(const MatX& s, int iterations, Scalar reg_epsilon) {
    if (iterations < 1) throw InvalidRange("sinkhorn: iterations must be >= 1");
    if (!(reg_epsilon > 0.0)) throw InvalidRange("sinkhorn: reg_epsilon must be > 0");

    const Eigen::Index m = s.rows();
    const Eigen::Index n = s.cols();
    const Eigen::Index real_cols = n - 1;

    const MatX logk = s / reg_epsilon;
    VecX log_u = VecX::Zero(m);
    VecX log_v = VecX::Zero(n);  // dummy column scaling is pinned at 0

    for (int it = 0; it < iterations; ++it) {
        // Real-column step: cap column sums at 1, leave the dummy free.
        for (Eigen::Index c = 0; c < real_cols; ++c) {
            const Scalar col = logsumexp(logk.col(c) + log_u) + log_v(c);
            if (col > 0.0) log_v(c) -= col;
        }
        // Row step: every row sums to 1.
        for (Eigen::Index r = 0; r < m; ++r) {
            log_u(r) -= logsumexp(logk.row(r).transpose() + log_v) + log_u(r);
        }
    }

    MatX a = ((logk.colwise() + log_u).rowwise() + log_v.transpose()).array().exp();
    if (!a.allFinite()) {
        throw NumericalOverflow("sinkhorn: non-finite assignment entries");
    }
    return AssignmentMatrix(std::move(a), static_cast<int>(real_cols));
}

SoftMatchResult soft_match(const std::vector<RoIFeature>& cur_rois,
                           const std::vector<HistoricalQuery>& hist, const MotionContext& ctx,
                           const ParamBlock& params, const MatchConfig& config) {
    if (cur_rois.empty()) throw InvalidRange("soft_match: no current RoIs");

    std::vector<Embedding> cur_raw;
    cur_raw.reserve(cur_rois.size());
    for (const auto& roi : cur_rois) cur_raw.push_back(appearance_embedding(roi, params));

    if (hist.empty()) {
        MatX a = MatX::Ones(static_cast<Eigen::Index>(cur_rois.size()), 1);
        return SoftMatchResult{AssignmentMatrix(std::move(a), 0), {}, {}, std::move(cur_raw)};
    }

    TemporalAlignment ta = temporal_align(hist, ctx, params, config.mode);

    std::vector<Embedding> cur_proj;
    cur_proj.reserve(cur_raw.size());
    for (const auto& e : cur_raw) cur_proj.push_back(project_embedding(e, params, ProjectionSpace::current));
    std::vector<Embedding> hist_proj;
    hist_proj.reserve(ta.embeddings.size());
    for (const auto& e : ta.embeddings)
        hist_proj.push_back(project_embedding(e, params, ProjectionSpace::history));

    const MatX s = similarity_matrix(cur_proj, hist_proj);
    AssignmentMatrix a = sinkhorn(s, config.sinkhorn_iterations, config.reg_epsilon);
    return SoftMatchResult{std::move(a), std::move(ta.aligned_points), std::move(ta.embeddings),
                           std::move(cur_raw)};
}

}  // namespace roistereo
