// Named weight tensors for the deterministic stand-in networks. A ParamBlock
// is reproducible from its seed and serializes to JSON as
// {name: {"shape": [rows, cols], "values": [row-major]}} so runs can be
// replayed across implementations.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"

#include "roistereo/errors.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

class ParamBlock {
  public:
    ParamBlock() = default;

    void set(const std::string& name, MatX value) { tensors_[name] = std::move(value); }
    const MatX& tensor(const std::string& name) const;
    VecX vector(const std::string& name) const;  // single-column tensors
    bool contains(const std::string& name) const { return tensors_.count(name) > 0; }

    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t s) { seed_ = s; }

    nlohmann::json to_json() const;
    static ParamBlock from_json(const nlohmann::json& j);

    void save(const std::string& path) const;
    static ParamBlock load(const std::string& path);

    const std::map<std::string, MatX>& tensors() const { return tensors_; }

  private:
    std::map<std::string, MatX> tensors_;
    std::uint64_t seed_ = 0;
};

struct StandinDims {
    int channels = 16;        // C: feature / embedding width
    int matching_dim = 8;     // C': shared matching space
    int pe_frequencies = 4;   // sinusoidal bands -> PE length 2*4*15 = 120
    int pe_input = 15;        // [velocity(2), dt(1), ego top-3 rows(12)]
    int pe_length() const { return 2 * pe_frequencies * pe_input; }
};

// Builds every tensor the pipeline's stand-in networks need, reproducibly
// from the seed. Weight scales keep embeddings O(1) so dot products stay in
// a numerically comfortable range for Sinkhorn.
ParamBlock make_default_params(std::uint64_t seed, const StandinDims& dims = {});

}  // namespace roistereo
