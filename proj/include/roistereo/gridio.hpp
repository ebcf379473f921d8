// Binary grid files shared by cost-volume dumps and feature-map storage:
// header of three little-endian uint32 dims, row-major float32 values
// (dim0 outermost), then the validity mask as packed bits (LSB first).

#pragma once

#include <array>
#include <string>
#include <vector>

#include "roistereo/featuregrid.hpp"
#include "roistereo/stereo.hpp"

namespace roistereo {

struct GridFile {
    std::array<std::uint32_t, 3> dims{0, 0, 0};
    std::vector<float> values;      // dims[0]*dims[1]*dims[2]
    std::vector<bool> mask;         // same length
};

void write_grid(const std::string& path, const GridFile& grid);
GridFile read_grid(const std::string& path);

// Cost volume layout: dims (D, roi_h, roi_w), value order (k, v, u).
void write_cost_volume(const std::string& path, const CostVolume& cv);
CostVolume read_cost_volume(const std::string& path);

// Feature map layout: dims (C, H, W), mask all-true.
void write_feature_map(const std::string& path, const FeatureMap& fm);
FeatureMap read_feature_map(const std::string& path);

}  // namespace roistereo
