#include "roistereo/gridio.hpp"

#include <cstring>
#include <fstream>

#include "roistereo/errors.hpp"

namespace roistereo {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_grid(const std::string& path, const GridFile& grid) {
    const size_t count =
        static_cast<size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
    if (grid.values.size() != count || grid.mask.size() != count) {
        throw ShapeMismatch("write_grid: payload does not match dims");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_grid: cannot open '" + path + "'");
    put_u32(out, grid.dims[0]);
    put_u32(out, grid.dims[1]);
    put_u32(out, grid.dims[2]);
    for (const float v : grid.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(out, bits);
    }
    std::vector<unsigned char> packed((count + 7) / 8, 0);
    for (size_t i = 0; i < count; ++i) {
        if (grid.mask[i]) packed[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
    }
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    if (!out) throw Error("write_grid: write failed for '" + path + "'");
}

GridFile read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_grid: cannot open '" + path + "'");
    GridFile grid;
    grid.dims[0] = get_u32(in);
    grid.dims[1] = get_u32(in);
    grid.dims[2] = get_u32(in);
    const size_t count =
        static_cast<size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
    grid.values.resize(count);
    for (size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(in);
        float v;
        std::memcpy(&v, &bits, 4);
        grid.values[i] = v;
    }
    std::vector<unsigned char> packed((count + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
    if (!in) throw Error("read_grid: truncated file '" + path + "'");
    grid.mask.resize(count);
    for (size_t i = 0; i < count; ++i) {
        grid.mask[i] = (packed[i / 8] >> (i % 8)) & 1u;
    }
    return grid;
}

void write_cost_volume(const std::string& path, const CostVolume& cv) {
    GridFile grid;
    grid.dims = {static_cast<std::uint32_t>(cv.depth_bins), static_cast<std::uint32_t>(cv.roi_h),
                 static_cast<std::uint32_t>(cv.roi_w)};
    const size_t count = static_cast<size_t>(cv.depth_bins) * cv.roi_h * cv.roi_w;
    grid.values.resize(count);
    grid.mask.resize(count);
    size_t i = 0;
    for (int k = 0; k < cv.depth_bins; ++k) {
        for (int v = 0; v < cv.roi_h; ++v) {
            for (int u = 0; u < cv.roi_w; ++u, ++i) {
                grid.values[i] = static_cast<float>(cv.score(k, u, v));
                grid.mask[i] = cv.is_valid(k, u, v);
            }
        }
    }
    write_grid(path, grid);
}

CostVolume read_cost_volume(const std::string& path) {
    const GridFile grid = read_grid(path);
    CostVolume cv;
    cv.depth_bins = static_cast<int>(grid.dims[0]);
    cv.roi_h = static_cast<int>(grid.dims[1]);
    cv.roi_w = static_cast<int>(grid.dims[2]);
    cv.scores.resize(cv.depth_bins, cv.roi_h * cv.roi_w);
    cv.valid.resize(cv.depth_bins, cv.roi_h * cv.roi_w);
    size_t i = 0;
    for (int k = 0; k < cv.depth_bins; ++k) {
        for (int v = 0; v < cv.roi_h; ++v) {
            for (int u = 0; u < cv.roi_w; ++u, ++i) {
                cv.scores(k, v * cv.roi_w + u) = grid.values[i];
                cv.valid(k, v * cv.roi_w + u) = grid.mask[i];
            }
        }
    }
    return cv;
}

void write_feature_map(const std::string& path, const FeatureMap& fm) {
    GridFile grid;
    grid.dims = {static_cast<std::uint32_t>(fm.channels), static_cast<std::uint32_t>(fm.height),
                 static_cast<std::uint32_t>(fm.width)};
    const size_t count = static_cast<size_t>(fm.channels) * fm.height * fm.width;
    grid.values.resize(count);
    grid.mask.assign(count, true);
    size_t i = 0;
    for (int c = 0; c < fm.channels; ++c) {
        for (int y = 0; y < fm.height; ++y) {
            for (int x = 0; x < fm.width; ++x, ++i) {
                grid.values[i] = static_cast<float>(fm.value(x, y, c));
            }
        }
    }
    write_grid(path, grid);
}

FeatureMap read_feature_map(const std::string& path) {
    const GridFile grid = read_grid(path);
    FeatureMap fm(static_cast<int>(grid.dims[2]), static_cast<int>(grid.dims[1]),
                  static_cast<int>(grid.dims[0]));
    size_t i = 0;
    for (int c = 0; c < fm.channels; ++c) {
        for (int y = 0; y < fm.height; ++y) {
            for (int x = 0; x < fm.width; ++x, ++i) {
                fm.value(x, y, c) = grid.values[i];
            }
        }
    }
    return fm;
}

}  // namespace roistereo
