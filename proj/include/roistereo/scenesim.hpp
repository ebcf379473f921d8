// Synthetic multi-camera scenario generator. Objects are textured
// fronto-parallel billboards whose feature values are a pure function of
// (object id, surface coordinate), so photometric consistency across frames
// and views holds by construction and per-RoI depth is exactly checkable.
//
// Each billboard is anchored at spawn to the camera that will face it most
// directly at closest approach; its normal equals that camera's (world)
// viewing direction reversed. Under a non-rotating ego this keeps every
// emitted view exactly fronto-parallel.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "roistereo/featuregrid.hpp"
#include "roistereo/geometry.hpp"
#include "roistereo/types.hpp"

namespace roistereo {

struct ObjectSpec {
    std::int64_t id = 0;
    Point3 center0 = Point3::Zero();  // world position at spawn_frame
    Vec2 velocity = Vec2::Zero();     // BEV, m/s
    int spawn_frame = 0;
    int despawn_frame = -1;  // -1: alive for the whole timeline
    std::optional<std::uint64_t> texture_key;  // defaults to the object id
    Scalar texture_similarity = 0.0;  // blend toward a scenario-shared field
};

struct ScenarioConfig {
    // cameras (co-located at the ego origin, yaw offsets in radians)
    int num_cameras = 6;
    int image_w = 256;
    int image_h = 96;
    std::vector<Scalar> camera_yaw_offsets;  // empty: evenly spaced
    Scalar fx = 180.0, fy = 180.0, ox = 128.0, oy = 48.0;

    // ego trajectory: constant world velocity + yaw rate, or explicit
    // per-frame waypoints (x, y, yaw) overriding both
    Vec2 ego_velocity = Vec2(1.2, 3.6);
    Scalar ego_yaw_rate = 0.0;
    std::vector<std::array<Scalar, 3>> ego_waypoints;

    // objects
    int object_count = 20;
    std::array<Scalar, 2> spawn_radius{7.0, 22.0};  // meters from track
    std::array<Scalar, 2> object_speed{0.0, 1.0};   // m/s
    Scalar billboard_w = 2.4;
    Scalar billboard_h = 1.8;
    Scalar billboard_z = 1.0;  // center height
    std::vector<ObjectSpec> objects;  // explicit override of random spawning

    // timeline
    int num_frames = 40;
    Scalar frame_dt = 0.5;

    // emission
    Scalar min_box_area = 100.0;   // px^2 after clipping
    Scalar max_view_angle = 0.9;   // radians between camera axis and -normal
    Scalar near_plane = 0.5;       // meters
    Scalar occlusion_rate = 0.0;   // random full-frame dropout per object
    Scalar box_jitter_px = 0.0;    // uniform detector-noise jitter
    int feature_channels = 16;
    Scalar texture_cells = 1.6;    // noise periods across the billboard width

    std::uint64_t seed = 1;

    nlohmann::ordered_json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
};

struct ObjectState {
    std::int64_t id = 0;
    Point3 center = Point3::Zero();
    Vec2 velocity = Vec2::Zero();
    std::vector<bool> visible;  // per camera
};

struct SceneFrame {
    int index = 0;
    Scalar timestamp = 0.0;
    RigidTransform ego_pose;  // ego -> world
    std::vector<ObjectState> objects;
    std::vector<FeatureMap> features;      // per camera
    std::vector<BBox2D> boxes;             // all cameras, emission order
    std::vector<std::int64_t> box_object_ids;
};

struct Scenario {
    ScenarioConfig config;
    std::vector<SceneFrame> frames;

    Intrinsics4 intrinsics() const {
        return Intrinsics4(config.fx, config.fy, config.ox, config.oy);
    }
    // World -> camera extrinsic for one camera of one frame.
    RigidTransform camera_extrinsic(int frame_index, int camera) const;
    // Camera -> ego rotation/translation for one rig slot.
    RigidTransform camera_from_ego(int camera) const;

    const ObjectState* find_object(int frame_index, std::int64_t id) const;
};

Scenario generate_scenario(const ScenarioConfig& cfg);

// Identity-based box correspondences: for each current box, the index of the
// previous-frame box with the same object id (same camera preferred, then
// largest area), or -1 for newly appeared objects.
std::vector<int> oracle_correspondences(const SceneFrame& prev, const SceneFrame& cur);

struct BoxEval {
    std::int64_t object_id = -1;
    Scalar translation_error = 0.0;  // meters, 3D
    Scalar depth_error = 0.0;        // meters, camera-frame
    bool has_assignment_truth = false;
    bool assignment_correct = false;
};

struct Metrics {
    std::vector<BoxEval> per_box;
    Scalar association_accuracy = 0.0;
    Scalar mean_translation = 0.0, median_translation = 0.0, p90_translation = 0.0;
    Scalar mean_depth = 0.0, median_depth = 0.0, p90_depth = 0.0;
};

// Scores predicted 3D reference points (aligned with cur-frame boxes) and
// predicted previous-box assignments (-1 == new) against ground truth.
Metrics evaluate(const Scenario& scenario, int frame_index, const std::vector<Point3>& predicted,
                 const std::vector<int>& predicted_prev_box);

// Scenario files: JSON document plus per-(frame, camera) binary feature
// grids referenced by relative path.
void save_scenario(const Scenario& scenario, const std::string& dir,
                   const std::string& json_name = "scenario.json");
Scenario load_scenario(const std::string& json_path);

}  // namespace roistereo
