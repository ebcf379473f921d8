#include "roistereo/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "roistereo/gridio.hpp"
#include "roistereo/rng.hpp"

namespace roistereo {

namespace {

// Camera viewing direction for a yaw offset, in the ego frame (0 == +y).
Vec3 viewing_dir_ego(Scalar yaw) { return {std::sin(yaw), std::cos(yaw), 0.0}; }

RigidTransform cam_from_ego_transform(Scalar yaw) {
    const Vec3 d = viewing_dir_ego(yaw);
    const Vec3 right(std::cos(yaw), -std::sin(yaw), 0.0);
    const Vec3 down(0.0, 0.0, -1.0);
    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = d.transpose();
    return RigidTransform::from_rotation_translation(r, Vec3::Zero());
}

struct Billboard {
    Vec3 normal;  // unit, horizontal, faces the anchor camera
    Vec3 right;   // unit, horizontal
    Vec3 up = Vec3(0.0, 0.0, 1.0);
    int anchor_camera = 0;
};

struct Texture {
    std::uint64_t own_key = 0;
    std::uint64_t shared_key = 0;
    Scalar similarity = 0.0;
    Scalar cells_x = 1.6;
    Scalar cells_y = 1.2;

    Scalar sample(int channel, Scalar u, Scalar v) const {
        const Scalar own =
            noise::fbm2(mix_seed(own_key, static_cast<std::uint64_t>(channel)), u * cells_x, v * cells_y);
        if (similarity <= 0.0) return own;
        const Scalar shared = noise::fbm2(mix_seed(shared_key, static_cast<std::uint64_t>(channel)),
                                          u * cells_x, v * cells_y);
        return (1.0 - similarity) * own + similarity * shared;
    }
};

struct SimObject {
    ObjectSpec spec;
    Billboard board;
    Texture texture;

    bool alive(int frame) const {
        return frame >= spec.spawn_frame &&
               (spec.despawn_frame < 0 || frame < spec.despawn_frame);
    }
    Point3 center_at(int frame, Scalar dt) const {
        const Scalar t = (frame - spec.spawn_frame) * dt;
        return spec.center0 + Vec3(spec.velocity(0) * t, spec.velocity(1) * t, 0.0);
    }
};

std::vector<Scalar> resolve_yaws(const ScenarioConfig& cfg) {
    if (!cfg.camera_yaw_offsets.empty()) return cfg.camera_yaw_offsets;
    std::vector<Scalar> yaws(static_cast<size_t>(cfg.num_cameras));
    for (int i = 0; i < cfg.num_cameras; ++i) {
        yaws[static_cast<size_t>(i)] = 2.0 * M_PI * i / cfg.num_cameras;
    }
    return yaws;
}

RigidTransform ego_pose_at(const ScenarioConfig& cfg, int frame) {
    if (!cfg.ego_waypoints.empty()) {
        const auto& wp = cfg.ego_waypoints[std::min<size_t>(static_cast<size_t>(frame),
                                                            cfg.ego_waypoints.size() - 1)];
        return RigidTransform::translation(Vec3(wp[0], wp[1], 0.0)) * RigidTransform::rotation_z(wp[2]);
    }
    const Scalar t = frame * cfg.frame_dt;
    return RigidTransform::translation(Vec3(cfg.ego_velocity(0) * t, cfg.ego_velocity(1) * t, 0.0)) *
           RigidTransform::rotation_z(cfg.ego_yaw_rate * t);
}

}  // namespace

nlohmann::ordered_json ScenarioConfig::to_json() const {
    nlohmann::ordered_json j;
    j["num_cameras"] = num_cameras;
    j["image_w"] = image_w;
    j["image_h"] = image_h;
    j["camera_yaw_offsets"] = camera_yaw_offsets;
    j["fx"] = fx;
    j["fy"] = fy;
    j["ox"] = ox;
    j["oy"] = oy;
    j["ego_velocity"] = {ego_velocity(0), ego_velocity(1)};
    j["ego_yaw_rate"] = ego_yaw_rate;
    j["ego_waypoints"] = ego_waypoints;
    j["object_count"] = object_count;
    j["spawn_radius"] = spawn_radius;
    j["object_speed"] = object_speed;
    j["billboard_w"] = billboard_w;
    j["billboard_h"] = billboard_h;
    j["billboard_z"] = billboard_z;
    nlohmann::ordered_json objs = nlohmann::ordered_json::array();
    for (const auto& o : objects) {
        nlohmann::ordered_json e;
        e["id"] = o.id;
        e["center0"] = {o.center0(0), o.center0(1), o.center0(2)};
        e["velocity"] = {o.velocity(0), o.velocity(1)};
        e["spawn_frame"] = o.spawn_frame;
        e["despawn_frame"] = o.despawn_frame;
        if (o.texture_key) e["texture_key"] = *o.texture_key;
        e["texture_similarity"] = o.texture_similarity;
        objs.push_back(std::move(e));
    }
    j["objects"] = std::move(objs);
    j["num_frames"] = num_frames;
    j["frame_dt"] = frame_dt;
    j["min_box_area"] = min_box_area;
    j["max_view_angle"] = max_view_angle;
    j["near_plane"] = near_plane;
    j["occlusion_rate"] = occlusion_rate;
    j["box_jitter_px"] = box_jitter_px;
    j["feature_channels"] = feature_channels;
    j["texture_cells"] = texture_cells;
    j["seed"] = seed;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("num_cameras", cfg.num_cameras);
    get("image_w", cfg.image_w);
    get("image_h", cfg.image_h);
    get("camera_yaw_offsets", cfg.camera_yaw_offsets);
    get("fx", cfg.fx);
    get("fy", cfg.fy);
    get("ox", cfg.ox);
    get("oy", cfg.oy);
    if (j.contains("ego_velocity")) {
        cfg.ego_velocity = Vec2(j["ego_velocity"].at(0).get<Scalar>(), j["ego_velocity"].at(1).get<Scalar>());
    }
    get("ego_yaw_rate", cfg.ego_yaw_rate);
    get("ego_waypoints", cfg.ego_waypoints);
    get("object_count", cfg.object_count);
    get("spawn_radius", cfg.spawn_radius);
    get("object_speed", cfg.object_speed);
    get("billboard_w", cfg.billboard_w);
    get("billboard_h", cfg.billboard_h);
    get("billboard_z", cfg.billboard_z);
    if (j.contains("objects")) {
        for (const auto& e : j.at("objects")) {
            ObjectSpec o;
            o.id = e.at("id").get<std::int64_t>();
            o.center0 = Vec3(e.at("center0").at(0).get<Scalar>(), e.at("center0").at(1).get<Scalar>(),
                             e.at("center0").at(2).get<Scalar>());
            o.velocity = Vec2(e.at("velocity").at(0).get<Scalar>(), e.at("velocity").at(1).get<Scalar>());
            o.spawn_frame = e.value("spawn_frame", 0);
            o.despawn_frame = e.value("despawn_frame", -1);
            if (e.contains("texture_key")) o.texture_key = e.at("texture_key").get<std::uint64_t>();
            o.texture_similarity = e.value("texture_similarity", 0.0);
            cfg.objects.push_back(std::move(o));
        }
    }
    get("num_frames", cfg.num_frames);
    get("frame_dt", cfg.frame_dt);
    get("min_box_area", cfg.min_box_area);
    get("max_view_angle", cfg.max_view_angle);
    get("near_plane", cfg.near_plane);
    get("occlusion_rate", cfg.occlusion_rate);
    get("box_jitter_px", cfg.box_jitter_px);
    get("feature_channels", cfg.feature_channels);
    get("texture_cells", cfg.texture_cells);
    get("seed", cfg.seed);
    return cfg;
}

RigidTransform Scenario::camera_from_ego(int camera) const {
    const auto yaws = resolve_yaws(config);
    return cam_from_ego_transform(yaws.at(static_cast<size_t>(camera)));
}

RigidTransform Scenario::camera_extrinsic(int frame_index, int camera) const {
    return camera_from_ego(camera) * frames.at(static_cast<size_t>(frame_index)).ego_pose.inverse();
}

const ObjectState* Scenario::find_object(int frame_index, std::int64_t id) const {
    const auto& objs = frames.at(static_cast<size_t>(frame_index)).objects;
    for (const auto& o : objs) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

namespace {

void validate_config(const ScenarioConfig& cfg) {
    if (cfg.num_cameras < 1) throw ConfigError("scenesim: num_cameras must be >= 1");
    if (!cfg.camera_yaw_offsets.empty() &&
        static_cast<int>(cfg.camera_yaw_offsets.size()) != cfg.num_cameras) {
        throw ConfigError("scenesim: camera_yaw_offsets length must equal num_cameras");
    }
    if (cfg.image_w < 8 || cfg.image_h < 8) throw ConfigError("scenesim: image too small");
    if (!(cfg.fx > 0.0) || !(cfg.fy > 0.0)) throw ConfigError("scenesim: focal lengths must be positive");
    if (cfg.num_frames < 1) throw ConfigError("scenesim: num_frames must be >= 1");
    if (!(cfg.frame_dt > 0.0)) throw ConfigError("scenesim: frame_dt must be positive");
    if (!(cfg.billboard_w > 0.0) || !(cfg.billboard_h > 0.0)) {
        throw ConfigError("scenesim: billboard extents must be positive");
    }
    if (cfg.objects.empty()) {
        if (cfg.object_count < 0) throw ConfigError("scenesim: object_count must be >= 0");
        if (!(cfg.spawn_radius[0] > 0.0) || cfg.spawn_radius[1] < cfg.spawn_radius[0]) {
            throw ConfigError("scenesim: spawn_radius must be positive and ordered");
        }
    }
    if (cfg.feature_channels < 1) throw ConfigError("scenesim: feature_channels must be >= 1");
}

// Closest approach between the ego track and an object's track, used to pick
// the anchor camera before any rendering happens.
int closest_frame(const ScenarioConfig& cfg, const SimObject& obj) {
    int best = obj.spec.spawn_frame;
    Scalar best_d = std::numeric_limits<Scalar>::max();
    const int last = obj.spec.despawn_frame < 0 ? cfg.num_frames : obj.spec.despawn_frame;
    for (int f = obj.spec.spawn_frame; f < std::min(last, cfg.num_frames); ++f) {
        const Vec3 ego_p = ego_pose_at(cfg, f).translation_part();
        const Scalar d = (obj.center_at(f, cfg.frame_dt) - ego_p).norm();
        if (d < best_d) {
            best_d = d;
            best = f;
        }
    }
    return best;
}

std::vector<SimObject> build_objects(const ScenarioConfig& cfg, const std::vector<Scalar>& yaws) {
    std::vector<SimObject> objects;
    std::vector<ObjectSpec> specs = cfg.objects;

    if (specs.empty() && cfg.object_count > 0) {
        Rng rng(mix_seed(cfg.seed, 0x6f626a73));
        specs.reserve(static_cast<size_t>(cfg.object_count));
        for (int i = 0; i < cfg.object_count; ++i) {
            ObjectSpec s;
            s.id = i;
            // Spread anchor positions along the ego track so the timeline
            // keeps a steady population of visible objects.
            const Scalar along = cfg.object_count > 1
                                     ? static_cast<Scalar>(i) / (cfg.object_count - 1)
                                     : 0.5;
            const Scalar t_anchor = along * (cfg.num_frames - 1) * cfg.frame_dt;
            const Vec3 track(cfg.ego_velocity(0) * t_anchor, cfg.ego_velocity(1) * t_anchor, 0.0);
            const Scalar bearing = rng.uniform(0.0, 2.0 * M_PI);
            const Scalar radius = rng.uniform(cfg.spawn_radius[0], cfg.spawn_radius[1]);
            s.center0 = track + Vec3(radius * std::sin(bearing), radius * std::cos(bearing),
                                     cfg.billboard_z);
            const Scalar speed = rng.uniform(cfg.object_speed[0], cfg.object_speed[1]);
            const Scalar dir = rng.uniform(0.0, 2.0 * M_PI);
            s.velocity = Vec2(speed * std::sin(dir), speed * std::cos(dir));
            specs.push_back(std::move(s));
        }
    }

    objects.reserve(specs.size());
    for (const auto& spec : specs) {
        SimObject obj;
        obj.spec = spec;
        if (obj.spec.center0(2) == 0.0) obj.spec.center0(2) = cfg.billboard_z;

        // Anchor to the camera that faces the object most directly around
        // closest approach; the billboard normal opposes that camera's axis.
        const int f_star = closest_frame(cfg, obj);
        const RigidTransform ego = ego_pose_at(cfg, f_star);
        const Vec3 to_obj = obj.spec.center_at
                                ? Vec3()
                                : Vec3();  // placeholder, replaced below
        (void)to_obj;
        const Vec3 rel = obj.center_at(f_star, cfg.frame_dt) - ego.translation_part();
        int anchor = 0;
        Scalar best_cos = -2.0;
        for (size_t c = 0; c < yaws.size(); ++c) {
            const Vec3 d_world = ego.rotation() * viewing_dir_ego(yaws[c]);
            const Scalar cosang = d_world.dot(rel.normalized());
            if (cosang > best_cos) {
                best_cos = cosang;
                anchor = static_cast<int>(c);
            }
        }
        const Vec3 d_world = ego.rotation() * viewing_dir_ego(yaws[static_cast<size_t>(anchor)]);
        obj.board.anchor_camera = anchor;
        obj.board.normal = -d_world;
        obj.board.right = Vec3(d_world(1), -d_world(0), 0.0).normalized();  // horizontal
        obj.board.up = Vec3(0.0, 0.0, 1.0);

        obj.texture.own_key =
            mix_seed(cfg.seed, 0x74657874, obj.spec.texture_key.value_or(static_cast<std::uint64_t>(obj.spec.id)));
        obj.texture.shared_key = mix_seed(cfg.seed, 0x73686172);
        obj.texture.similarity = obj.spec.texture_similarity;
        obj.texture.cells_x = cfg.texture_cells;
        obj.texture.cells_y = cfg.texture_cells * cfg.billboard_h / cfg.billboard_w;
        objects.push_back(std::move(obj));
    }
    return objects;
}

struct ProjectedBox {
    Scalar x_min, y_min, x_max, y_max;
    Scalar depth;     // camera-frame depth of the billboard center
    Vec2 center_px;   // projected billboard center
};

// Projects the four billboard corners; nullopt unless every corner is in
// front of the near plane.
std::optional<ProjectedBox> project_billboard(const ScenarioConfig& cfg, const RigidTransform& t_cw,
                                              const SimObject& obj, const Point3& center) {
    const Scalar hw = 0.5 * cfg.billboard_w;
    const Scalar hh = 0.5 * cfg.billboard_h;
    ProjectedBox out{};
    out.x_min = out.y_min = std::numeric_limits<Scalar>::max();
    out.x_max = out.y_max = std::numeric_limits<Scalar>::lowest();

    const Vec3 center_cam = t_cw.apply(center);
    if (center_cam(2) <= cfg.near_plane) return std::nullopt;
    out.depth = center_cam(2);
    out.center_px = Vec2(cfg.fx * center_cam(0) / center_cam(2) + cfg.ox,
                         cfg.fy * center_cam(1) / center_cam(2) + cfg.oy);

    for (int sx = -1; sx <= 1; sx += 2) {
        for (int sy = -1; sy <= 1; sy += 2) {
            const Vec3 corner = center + sx * hw * obj.board.right + sy * hh * obj.board.up;
            const Vec3 cam = t_cw.apply(corner);
            if (cam(2) <= cfg.near_plane) return std::nullopt;
            const Scalar u = cfg.fx * cam(0) / cam(2) + cfg.ox;
            const Scalar v = cfg.fy * cam(1) / cam(2) + cfg.oy;
            out.x_min = std::min(out.x_min, u);
            out.x_max = std::max(out.x_max, u);
            out.y_min = std::min(out.y_min, v);
            out.y_max = std::max(out.y_max, v);
        }
    }
    return out;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    const std::vector<Scalar> yaws = resolve_yaws(cfg);
    const std::vector<SimObject> objects = build_objects(cfg, yaws);

    std::vector<RigidTransform> cam_from_ego;
    cam_from_ego.reserve(yaws.size());
    for (const Scalar y : yaws) cam_from_ego.push_back(cam_from_ego_transform(y));

    Scenario scenario;
    scenario.config = cfg;
    scenario.frames.reserve(static_cast<size_t>(cfg.num_frames));
    std::size_t total_boxes = 0;

    for (int f = 0; f < cfg.num_frames; ++f) {
        SceneFrame frame;
        frame.index = f;
        frame.timestamp = f * cfg.frame_dt;
        frame.ego_pose = ego_pose_at(cfg, f);

        struct Candidate {
            size_t obj_index;
            ProjectedBox proj;
        };

        for (int cam = 0; cam < cfg.num_cameras; ++cam) {
            frame.features.emplace_back(cfg.image_w, cfg.image_h, cfg.feature_channels);
            frame.features.back().camera_index = cam;
            frame.features.back().timestamp = f;
        }

        // Per-frame object states (visibility filled per camera below).
        std::vector<size_t> alive;
        for (size_t i = 0; i < objects.size(); ++i) {
            if (!objects[i].alive(f)) continue;
            alive.push_back(i);
            ObjectState st;
            st.id = objects[i].spec.id;
            st.center = objects[i].center_at(f, cfg.frame_dt);
            st.velocity = objects[i].spec.velocity;
            st.visible.assign(static_cast<size_t>(cfg.num_cameras), false);
            frame.objects.push_back(std::move(st));
        }

        for (int cam = 0; cam < cfg.num_cameras; ++cam) {
            const RigidTransform t_cw = cam_from_ego[static_cast<size_t>(cam)] * frame.ego_pose.inverse();
            const Vec3 cam_center = frame.ego_pose.translation_part();
            const Vec3 cam_axis = frame.ego_pose.rotation() * viewing_dir_ego(yaws[static_cast<size_t>(cam)]);

            std::vector<Candidate> candidates;
            for (size_t ai = 0; ai < alive.size(); ++ai) {
                const SimObject& obj = objects[alive[ai]];
                const Point3 center = frame.objects[ai].center;

                // One-sided fronto gate: the camera axis must face the board.
                if (cam_axis.dot(-obj.board.normal) < std::cos(cfg.max_view_angle)) continue;

                const auto proj = project_billboard(cfg, t_cw, obj, center);
                if (!proj) continue;
                candidates.push_back({ai, *proj});
            }

            // Occlusion: a nearer candidate whose center ray passes within
            // its angular radius of a farther one drops the farther box.
            std::vector<bool> occluded(candidates.size(), false);
            for (size_t a = 0; a < candidates.size(); ++a) {
                for (size_t b = 0; b < candidates.size(); ++b) {
                    if (a == b || candidates[b].proj.depth >= candidates[a].proj.depth) continue;
                    const SimObject& nearer = objects[alive[candidates[b].obj_index]];
                    const Vec3 ra = (frame.objects[candidates[a].obj_index].center - cam_center).normalized();
                    const Vec3 rb = (frame.objects[candidates[b].obj_index].center - cam_center).normalized();
                    const Scalar ang = std::acos(std::clamp(ra.dot(rb), -1.0, 1.0));
                    const Scalar radius = std::atan(
                        0.45 * std::min(cfg.billboard_w, cfg.billboard_h) / candidates[b].proj.depth);
                    (void)nearer;
                    if (ang < radius) {
                        occluded[a] = true;
                        break;
                    }
                }
            }

            // Depth-sorted rendering plus box emission.
            std::vector<size_t> order(candidates.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                return candidates[a].proj.depth < candidates[b].proj.depth;
            });

            FeatureMap& fm = frame.features[static_cast<size_t>(cam)];
            MatX zbuf = MatX::Constant(cfg.image_h, cfg.image_w, std::numeric_limits<Scalar>::max());
            const Mat3 r_wc = t_cw.rotation().transpose();

            for (const size_t ci : order) {
                const Candidate& cand = candidates[ci];
                const SimObject& obj = objects[alive[cand.obj_index]];
                const Point3 center = frame.objects[cand.obj_index].center;

                const int px0 = std::max(0, static_cast<int>(std::floor(cand.proj.x_min - 1.0)));
                const int px1 = std::min(cfg.image_w - 1, static_cast<int>(std::ceil(cand.proj.x_max + 1.0)));
                const int py0 = std::max(0, static_cast<int>(std::floor(cand.proj.y_min - 1.0)));
                const int py1 = std::min(cfg.image_h - 1, static_cast<int>(std::ceil(cand.proj.y_max + 1.0)));

                const Scalar n_dot_c = obj.board.normal.dot(center - cam_center);
                for (int py = py0; py <= py1; ++py) {
                    for (int px = px0; px <= px1; ++px) {
                        const Vec3 dir_cam((px + 0.5 - cfg.ox) / cfg.fx, (py + 0.5 - cfg.oy) / cfg.fy, 1.0);
                        const Vec3 dir_w = r_wc * dir_cam;
                        const Scalar denom = obj.board.normal.dot(dir_w);
                        if (std::abs(denom) < 1e-12) continue;
                        const Scalar s = n_dot_c / denom;  // camera-frame depth (dir z == 1)
                        if (s <= cfg.near_plane || s >= zbuf(py, px)) continue;
                        const Vec3 hit = cam_center + s * dir_w;
                        const Scalar su = (hit - center).dot(obj.board.right) / cfg.billboard_w + 0.5;
                        const Scalar sv = 0.5 - (hit - center).dot(obj.board.up) / cfg.billboard_h;
                        if (su < 0.0 || su > 1.0 || sv < 0.0 || sv > 1.0) continue;
                        zbuf(py, px) = s;
                        for (int ch = 0; ch < cfg.feature_channels; ++ch) {
                            fm.value(px, py, ch) = obj.texture.sample(ch, su, sv);
                        }
                    }
                }

                if (occluded[ci]) continue;

                // Random full-frame dropout keyed by (seed, frame, object).
                if (cfg.occlusion_rate > 0.0) {
                    Rng drop(mix_seed(cfg.seed, 0x64726f70, static_cast<std::uint64_t>(f),
                                      static_cast<std::uint64_t>(obj.spec.id)));
                    if (drop.uniform() < cfg.occlusion_rate) continue;
                }

                Scalar x0 = std::max<Scalar>(cand.proj.x_min, 0.0);
                Scalar y0 = std::max<Scalar>(cand.proj.y_min, 0.0);
                Scalar x1 = std::min<Scalar>(cand.proj.x_max, cfg.image_w);
                Scalar y1 = std::min<Scalar>(cand.proj.y_max, cfg.image_h);
                if (cfg.box_jitter_px > 0.0) {
                    Rng jit(mix_seed(cfg.seed, 0x6a697474, static_cast<std::uint64_t>(f),
                                     static_cast<std::uint64_t>(obj.spec.id) * 64 + cam));
                    x0 += jit.uniform(-cfg.box_jitter_px, cfg.box_jitter_px);
                    y0 += jit.uniform(-cfg.box_jitter_px, cfg.box_jitter_px);
                    x1 += jit.uniform(-cfg.box_jitter_px, cfg.box_jitter_px);
                    y1 += jit.uniform(-cfg.box_jitter_px, cfg.box_jitter_px);
                    x0 = std::clamp<Scalar>(x0, 0.0, cfg.image_w);
                    y0 = std::clamp<Scalar>(y0, 0.0, cfg.image_h);
                    x1 = std::clamp<Scalar>(x1, 0.0, cfg.image_w);
                    y1 = std::clamp<Scalar>(y1, 0.0, cfg.image_h);
                }
                if (x1 - x0 < 1e-6 || y1 - y0 < 1e-6) continue;
                if ((x1 - x0) * (y1 - y0) < cfg.min_box_area) continue;

                frame.boxes.emplace_back(x0, y0, x1, y1, cam);
                frame.box_object_ids.push_back(obj.spec.id);
                frame.objects[cand.obj_index].visible[static_cast<size_t>(cam)] = true;
            }
        }

        total_boxes += frame.boxes.size();
        scenario.frames.push_back(std::move(frame));
    }

    if (!objects.empty() && total_boxes == 0) {
        throw ConfigError("scenesim: no object was ever visible (check spawn region and cameras)");
    }
    return scenario;
}

std::vector<int> oracle_correspondences(const SceneFrame& prev, const SceneFrame& cur) {
    std::vector<int> mapping(cur.boxes.size(), -1);
    for (size_t i = 0; i < cur.boxes.size(); ++i) {
        const std::int64_t id = cur.box_object_ids[i];
        int best = -1;
        bool best_same_cam = false;
        Scalar best_area = -1.0;
        for (size_t p = 0; p < prev.boxes.size(); ++p) {
            if (prev.box_object_ids[p] != id) continue;
            const bool same_cam = prev.boxes[p].camera_index == cur.boxes[i].camera_index;
            const Scalar area = prev.boxes[p].area();
            if (best < 0 || (same_cam && !best_same_cam) ||
                (same_cam == best_same_cam && area > best_area)) {
                best = static_cast<int>(p);
                best_same_cam = same_cam;
                best_area = area;
            }
        }
        mapping[i] = best;
    }
    return mapping;
}

namespace {

Scalar percentile(std::vector<Scalar> values, Scalar q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto idx = static_cast<size_t>(
        std::llround(q * static_cast<Scalar>(values.size() - 1)));
    return values[std::min(idx, values.size() - 1)];
}

}  // namespace

Metrics evaluate(const Scenario& scenario, int frame_index, const std::vector<Point3>& predicted,
                 const std::vector<int>& predicted_prev_box) {
    const SceneFrame& frame = scenario.frames.at(static_cast<size_t>(frame_index));
    if (predicted.size() != frame.boxes.size()) {
        throw ShapeMismatch("evaluate: prediction list must align with frame boxes");
    }

    Metrics metrics;
    std::vector<Scalar> terr;
    std::vector<Scalar> derr;
    int assign_total = 0;
    int assign_correct = 0;

    std::vector<int> oracle;
    if (frame_index > 0) {
        oracle = oracle_correspondences(scenario.frames[static_cast<size_t>(frame_index - 1)], frame);
    }

    for (size_t i = 0; i < frame.boxes.size(); ++i) {
        BoxEval ev;
        ev.object_id = frame.box_object_ids[i];
        const ObjectState* gt = scenario.find_object(frame_index, ev.object_id);
        if (gt != nullptr) {
            ev.translation_error = (predicted[i] - gt->center).norm();
            const RigidTransform t_cw =
                scenario.camera_extrinsic(frame_index, frame.boxes[i].camera_index);
            ev.depth_error = std::abs(t_cw.apply(predicted[i])(2) - t_cw.apply(gt->center)(2));
            terr.push_back(ev.translation_error);
            derr.push_back(ev.depth_error);
        }
        if (!oracle.empty() && i < predicted_prev_box.size()) {
            ev.has_assignment_truth = true;
            ev.assignment_correct = predicted_prev_box[i] == oracle[i];
            ++assign_total;
            if (ev.assignment_correct) ++assign_correct;
        }
        metrics.per_box.push_back(ev);
    }

    metrics.association_accuracy =
        assign_total > 0 ? static_cast<Scalar>(assign_correct) / assign_total : 1.0;
    metrics.mean_translation = terr.empty() ? 0.0
                                            : std::accumulate(terr.begin(), terr.end(), 0.0) /
                                                  static_cast<Scalar>(terr.size());
    metrics.median_translation = percentile(terr, 0.5);
    metrics.p90_translation = percentile(terr, 0.9);
    metrics.mean_depth = derr.empty() ? 0.0
                                      : std::accumulate(derr.begin(), derr.end(), 0.0) /
                                            static_cast<Scalar>(derr.size());
    metrics.median_depth = percentile(derr, 0.5);
    metrics.p90_depth = percentile(derr, 0.9);
    return metrics;
}

void save_scenario(const Scenario& scenario, const std::string& dir, const std::string& json_name) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "features");

    nlohmann::ordered_json j;
    j["config"] = scenario.config.to_json();
    nlohmann::ordered_json frames = nlohmann::ordered_json::array();

    for (const auto& frame : scenario.frames) {
        nlohmann::ordered_json fj;
        fj["index"] = frame.index;
        fj["timestamp"] = frame.timestamp;
        std::vector<Scalar> pose(16);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) pose[static_cast<size_t>(r * 4 + c)] = frame.ego_pose.matrix()(r, c);
        fj["ego_pose"] = pose;

        nlohmann::ordered_json objs = nlohmann::ordered_json::array();
        for (const auto& o : frame.objects) {
            nlohmann::ordered_json oj;
            oj["id"] = o.id;
            oj["center"] = {o.center(0), o.center(1), o.center(2)};
            oj["velocity"] = {o.velocity(0), o.velocity(1)};
            oj["visible"] = o.visible;
            objs.push_back(std::move(oj));
        }
        fj["objects"] = std::move(objs);

        nlohmann::ordered_json boxes = nlohmann::ordered_json::array();
        for (const auto& b : frame.boxes) {
            boxes.push_back({b.camera_index, b.x_min, b.y_min, b.x_max, b.y_max});
        }
        fj["boxes"] = std::move(boxes);
        fj["box_object_ids"] = frame.box_object_ids;

        std::vector<std::string> paths;
        for (size_t cam = 0; cam < frame.features.size(); ++cam) {
            char name[64];
            std::snprintf(name, sizeof(name), "features/frame%04d_cam%zu.bin", frame.index, cam);
            paths.emplace_back(name);
            write_feature_map((fs::path(dir) / name).string(), frame.features[cam]);
        }
        fj["features"] = paths;
        frames.push_back(std::move(fj));
    }
    j["frames"] = std::move(frames);

    std::ofstream out(fs::path(dir) / json_name);
    if (!out) throw Error("save_scenario: cannot write '" + dir + "/" + json_name + "'");
    out << j.dump(1) << "\n";
}

Scenario load_scenario(const std::string& json_path) {
    namespace fs = std::filesystem;
    std::ifstream in(json_path);
    if (!in) throw ScenarioError("load_scenario: cannot open '" + json_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("load_scenario: malformed JSON: ") + e.what());
    }

    Scenario scenario;
    try {
        scenario.config = ScenarioConfig::from_json(j.at("config"));
        const fs::path base = fs::path(json_path).parent_path();
        for (const auto& fj : j.at("frames")) {
            SceneFrame frame;
            frame.index = fj.at("index").get<int>();
            frame.timestamp = fj.at("timestamp").get<Scalar>();
            const auto pose = fj.at("ego_pose").get<std::vector<Scalar>>();
            if (pose.size() != 16) throw ScenarioError("load_scenario: ego_pose needs 16 entries");
            Mat4 m;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) m(r, c) = pose[static_cast<size_t>(r * 4 + c)];
            frame.ego_pose = RigidTransform(m);

            for (const auto& oj : fj.at("objects")) {
                ObjectState o;
                o.id = oj.at("id").get<std::int64_t>();
                o.center = Vec3(oj.at("center").at(0).get<Scalar>(), oj.at("center").at(1).get<Scalar>(),
                                oj.at("center").at(2).get<Scalar>());
                o.velocity = Vec2(oj.at("velocity").at(0).get<Scalar>(),
                                  oj.at("velocity").at(1).get<Scalar>());
                o.visible = oj.at("visible").get<std::vector<bool>>();
                frame.objects.push_back(std::move(o));
            }
            for (const auto& bj : fj.at("boxes")) {
                frame.boxes.emplace_back(bj.at(1).get<Scalar>(), bj.at(2).get<Scalar>(),
                                         bj.at(3).get<Scalar>(), bj.at(4).get<Scalar>(),
                                         bj.at(0).get<int>());
            }
            frame.box_object_ids = fj.at("box_object_ids").get<std::vector<std::int64_t>>();
            for (const auto& rel : fj.at("features").get<std::vector<std::string>>()) {
                frame.features.push_back(read_feature_map((base / rel).string()));
                frame.features.back().camera_index = static_cast<int>(frame.features.size()) - 1;
                frame.features.back().timestamp = frame.index;
            }
            scenario.frames.push_back(std::move(frame));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioError(std::string("load_scenario: malformed scenario: ") + e.what());
    }
    return scenario;
}

}  // namespace roistereo
