#include "roistereo/params.hpp"

#include <fstream>

#include "roistereo/rng.hpp"

namespace roistereo {

const MatX& ParamBlock::tensor(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) {
        throw ShapeMismatch("ParamBlock: missing tensor '" + name + "'");
    }
    return it->second;
}

VecX ParamBlock::vector(const std::string& name) const {
    const MatX& t = tensor(name);
    if (t.cols() != 1) {
        throw ShapeMismatch("ParamBlock: tensor '" + name + "' is not a vector");
    }
    return t.col(0);
}

nlohmann::json ParamBlock::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed_;
    nlohmann::ordered_json entries;
    for (const auto& [name, t] : tensors_) {
        nlohmann::ordered_json e;
        e["shape"] = {t.rows(), t.cols()};
        std::vector<Scalar> values;
        values.reserve(static_cast<size_t>(t.size()));
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) values.push_back(t(r, c));
        e["values"] = values;
        entries[name] = std::move(e);
    }
    j["tensors"] = std::move(entries);
    return j;
}

ParamBlock ParamBlock::from_json(const nlohmann::json& j) {
    ParamBlock block;
    block.seed_ = j.value("seed", std::uint64_t{0});
    const auto& entries = j.at("tensors");
    for (auto it = entries.begin(); it != entries.end(); ++it) {
        const auto& e = it.value();
        const auto shape = e.at("shape");
        const auto rows = shape.at(0).get<Eigen::Index>();
        const auto cols = shape.at(1).get<Eigen::Index>();
        const auto values = e.at("values").get<std::vector<Scalar>>();
        if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
            throw ShapeMismatch("ParamBlock: value count does not match shape for '" + it.key() + "'");
        }
        MatX t(rows, cols);
        size_t idx = 0;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = values[idx++];
        block.tensors_[it.key()] = std::move(t);
    }
    return block;
}

void ParamBlock::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("ParamBlock: cannot open '" + path + "' for writing");
    out << to_json().dump(2) << "\n";
}

ParamBlock ParamBlock::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("ParamBlock: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

namespace {

MatX random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, Scalar sigma) {
    MatX m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.gaussian(0.0, sigma);
    return m;
}

}  // namespace

ParamBlock make_default_params(std::uint64_t seed, const StandinDims& dims) {
    const int c = dims.channels;
    const int cp = dims.matching_dim;
    const int pe = dims.pe_length();

    Rng rng(mix_seed(seed, 0x7061726d));  // independent stream per block
    ParamBlock block;
    block.set_seed(seed);

    // 3x3 same-padded conv, C -> C; column layout (ky*3+kx)*C + c_in.
    block.set("embed_conv_w", random_matrix(rng, c, 9 * c, 1.0 / std::sqrt(9.0 * c)));
    block.set("embed_conv_b", MatX::Zero(c, 1));

    // Shared latent projections. Both start from one matrix so the current
    // and history spaces coincide at initialization.
    const MatX proj = random_matrix(rng, cp, c, 1.0 / std::sqrt(static_cast<Scalar>(c)));
    block.set("proj_current_w", proj);
    block.set("proj_current_b", MatX::Zero(cp, 1));
    block.set("proj_history_w", proj);
    block.set("proj_history_b", MatX::Zero(cp, 1));

    // Point-to-embedding MLP (3 -> C -> C, ReLU hidden).
    block.set("mlp_pos_w1", random_matrix(rng, c, 3, 1.0 / std::sqrt(3.0)));
    block.set("mlp_pos_b1", MatX::Zero(c, 1));
    block.set("mlp_pos_w2", random_matrix(rng, c, c, 1.0 / std::sqrt(static_cast<Scalar>(c))));
    block.set("mlp_pos_b2", MatX::Zero(c, 1));

    // Motion-conditioned affine heads; gamma stays near 1, beta near 0.
    block.set("affine_gamma_w", random_matrix(rng, c, pe, 0.02));
    block.set("affine_gamma_b", MatX::Ones(c, 1));
    block.set("affine_beta_w", random_matrix(rng, c, pe, 0.02));
    block.set("affine_beta_b", MatX::Zero(c, 1));

    // Monocular stand-in regressor: [pooled RoI embedding | scaled K entries]
    // -> (du, dv, raw depth).
    const int mono_in = c + 16;
    block.set("mono_w1", random_matrix(rng, c, mono_in, 1.0 / std::sqrt(static_cast<Scalar>(mono_in))));
    block.set("mono_b1", MatX::Zero(c, 1));
    block.set("mono_w2", random_matrix(rng, 3, c, 1.0 / std::sqrt(static_cast<Scalar>(c))));
    block.set("mono_b2", MatX::Zero(3, 1));

    return block;
}

}  // namespace roistereo
