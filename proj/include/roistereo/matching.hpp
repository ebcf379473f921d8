// Motion-aware soft matching: temporal alignment of historical queries,
// motion-conditioned affine modulation, scaled dot-product similarity with a
// dummy slack column, and log-domain Sinkhorn normalization.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "roistereo/featuregrid.hpp"
#include "roistereo/geometry.hpp"
#include "roistereo/params.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

struct HistoricalQuery {
    Point3 ref_point = Point3::Zero();  // world, meters
    Vec2 velocity = Vec2::Zero();       // BEV, m/s
    Embedding appearance;               // length C
    std::int64_t object_id = -1;        // simulator ground truth, test-only
};

// Row-stochastic soft assignment with a trailing dummy column. Rows sum to 1;
// real columns are capped at 1 (slack-column convention, dummy exempt).
class AssignmentMatrix {
  public:
    AssignmentMatrix(MatX values, int history_count);

    const MatX& values() const { return values_; }
    int rows() const { return static_cast<int>(values_.rows()); }
    int history_count() const { return history_count_; }
    int dummy_col() const { return history_count_; }

    VecX row(int m) const { return values_.row(m).transpose(); }
    Scalar dummy_mass(int m) const { return values_(m, history_count_); }

    // Argmax over real columns; -1 when there is no history.
    int argmax_real(int m) const;
    // Argmax over all columns including the dummy (dummy reported as -1).
    int argmax_row(int m) const;

    // Row-major CSV with a `Mt,Mh` header line.
    void to_csv(std::ostream& out) const;

  private:
    MatX values_;
    int history_count_;
};

struct MotionContext {
    Scalar dt = 0.5;                       // seconds, > 0
    RigidTransform ego;                    // previous -> current frame
    VecX pe_frequencies = default_freqs();  // sinusoidal bands

    static VecX default_freqs() {
        VecX f(4);
        f << 1.0, 2.0, 4.0, 8.0;
        return f;
    }
};

enum class MatchingMode {
    appearance_only,  // raw appearance embeddings, no alignment
    motion_2d,        // motion-conditioned modulation, no 3D terms
    motion_3d,        // full alignment + positional embedding
};

struct MatchConfig {
    MatchingMode mode = MatchingMode::motion_3d;
    int sinkhorn_iterations = 100;
    Scalar reg_epsilon = 0.1;
};

// Sinusoidal encoding of [velocity, dt, flattened ego top-3 rows] at the
// context frequencies; length 2 * len(freqs) * 15, layout
// (sin, cos) per (component, frequency) pair.
Embedding positional_encode(const MotionContext& ctx, const Vec2& velocity);

// gamma = Linear1(pe), beta = Linear2(pe), both length C.
std::pair<Embedding, Embedding> motion_affine_params(const Embedding& pe, const ParamBlock& params);

struct TemporalAlignment {
    std::vector<Point3> aligned_points;
    std::vector<Embedding> embeddings;  // length C each
};

// Ego-aligns historical reference points and produces motion-aware history
// embeddings. The matching mode controls which motion terms participate.
TemporalAlignment temporal_align(const std::vector<HistoricalQuery>& queries,
                                 const MotionContext& ctx, const ParamBlock& params,
                                 MatchingMode mode = MatchingMode::motion_3d);

// S[m,n] = <cur_m, hist_n> / sqrt(C'), with one all-zero dummy column
// appended to the history side.
MatX similarity_matrix(const std::vector<Embedding>& cur, const std::vector<Embedding>& hist);

// Log-domain Sinkhorn on exp(S / reg_epsilon). Each round caps real-column
// sums at 1 and then renormalizes rows, finishing on a row step.
AssignmentMatrix sinkhorn(const MatX& s, int iterations, Scalar reg_epsilon);

struct SoftMatchResult {
    AssignmentMatrix assignment;
    std::vector<Point3> aligned_points;
    std::vector<Embedding> history_embeddings;  // pre-projection, length C
    std::vector<Embedding> current_embeddings;  // pre-projection, length C
};

// Full module composition: appearance embedding -> temporal alignment ->
// latent projection -> similarity -> Sinkhorn.
SoftMatchResult soft_match(const std::vector<RoIFeature>& cur_rois,
                           const std::vector<HistoricalQuery>& hist, const MotionContext& ctx,
                           const ParamBlock& params, const MatchConfig& config = {});

}  // namespace roistereo
