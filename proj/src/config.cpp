#include "corn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "corn/error.hpp"

namespace corn {

using nlohmann::json;

namespace {

[[noreturn]] void bad_type(const std::string& key, const char* want) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + key + "' expects " + want);
}

double real(const std::string& key, const json& v) {
    if (!v.is_number()) bad_type(key, "a number");
    return v.get<double>();
}

std::uint64_t count(const std::string& key, const json& v) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        bad_type(key, "a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool boolean(const std::string& key, const json& v) {
    if (!v.is_boolean()) bad_type(key, "true or false");
    return v.get<bool>();
}

Vec3 vec3(const std::string& key, const json& v) {
    if (!v.is_array() || v.size() != 3) bad_type(key, "an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = real(key, v[std::size_t(i)]);
    return out;
}

const std::map<std::string, std::function<void(RunConfig&, const std::string&, const json&)>>& table() {
    using V = const json&;
    using K = const std::string&;
    static const std::map<std::string, std::function<void(RunConfig&, K, V)>> t = {
        {"seed", [](RunConfig& c, K k, V v) { c.seed = count(k, v); }},

        {"data.workspace_half",
         [](RunConfig& c, K k, V v) {
             const double h = real(k, v);
             c.data.workspace = Aabb(Vec3::Constant(-h), Vec3::Constant(h));
         }},
        {"data.sigma", [](RunConfig& c, K k, V v) { c.data.sigma = real(k, v); }},
        {"data.n_surface_points", [](RunConfig& c, K k, V v) { c.data.n_surface_points = count(k, v); }},
        {"data.displacement_samples", [](RunConfig& c, K k, V v) { c.data.displacement_samples = count(k, v); }},
        {"data.count", [](RunConfig& c, K k, V v) { c.data_count = count(k, v); }},
        {"data.jobs", [](RunConfig& c, K k, V v) { c.data_jobs = unsigned(count(k, v)); }},

        {"patch.n_patches", [](RunConfig& c, K k, V v) { c.encoder.patch.n_patches = count(k, v); }},
        {"patch.patch_size", [](RunConfig& c, K k, V v) { c.encoder.patch.patch_size = count(k, v); }},

        {"encoder.d_model", [](RunConfig& c, K k, V v) { c.encoder.d_model = count(k, v); }},
        {"encoder.n_layers", [](RunConfig& c, K k, V v) { c.encoder.n_layers = count(k, v); }},
        {"encoder.n_heads", [](RunConfig& c, K k, V v) { c.encoder.n_heads = count(k, v); }},
        {"encoder.ffn_dim", [](RunConfig& c, K k, V v) { c.encoder.ffn_dim = count(k, v); }},
        {"encoder.decoder_hidden", [](RunConfig& c, K k, V v) { c.encoder.decoder_hidden = count(k, v); }},
        {"encoder.input_scale", [](RunConfig& c, K k, V v) { c.encoder.input_scale = real(k, v); }},

        {"train.epochs", [](RunConfig& c, K k, V v) { c.train.epochs = count(k, v); }},
        {"train.lr", [](RunConfig& c, K k, V v) { c.train.lr = real(k, v); }},
        {"train.batch_size", [](RunConfig& c, K k, V v) { c.train.batch_size = count(k, v); }},
        {"train.weight_decay", [](RunConfig& c, K k, V v) { c.train.weight_decay = real(k, v); }},
        {"train.beta1", [](RunConfig& c, K k, V v) { c.train.beta1 = real(k, v); }},
        {"train.beta2", [](RunConfig& c, K k, V v) { c.train.beta2 = real(k, v); }},
        {"train.eps", [](RunConfig& c, K k, V v) { c.train.eps = real(k, v); }},
        {"train.val_fraction", [](RunConfig& c, K k, V v) { c.train.val_fraction = real(k, v); }},

        {"track.n_track", [](RunConfig& c, K k, V v) { c.track.n_track = count(k, v); }},
        {"track.fitness_threshold", [](RunConfig& c, K k, V v) { c.track.fitness_threshold = real(k, v); }},
        {"track.correspondence_distance",
         [](RunConfig& c, K k, V v) { c.track.correspondence_distance = real(k, v); }},
        {"track.icp_iters", [](RunConfig& c, K k, V v) { c.track.icp_iters = int(count(k, v)); }},
        {"track.normal_k", [](RunConfig& c, K k, V v) { c.track.normal_k = count(k, v); }},
        {"track.mode",
         [](RunConfig& c, K k, V v) {
             if (v == "point_to_plane") {
                 c.track.mode = IcpMode::PointToPlane;
             } else if (v == "point_to_point") {
                 c.track.mode = IcpMode::PointToPoint;
             } else {
                 bad_type(k, "\"point_to_plane\" or \"point_to_point\"");
             }
         }},
        {"track.segment", [](RunConfig& c, K k, V v) { c.track_segment = boolean(k, v); }},

        {"segment.workspace_min", [](RunConfig& c, K k, V v) { c.segment.workspace.min = vec3(k, v); }},
        {"segment.workspace_max", [](RunConfig& c, K k, V v) { c.segment.workspace.max = vec3(k, v); }},
        {"segment.table_point", [](RunConfig& c, K k, V v) { c.segment.table.point = vec3(k, v); }},
        {"segment.table_normal", [](RunConfig& c, K k, V v) { c.segment.table.normal = vec3(k, v); }},
        {"segment.table_eps", [](RunConfig& c, K k, V v) { c.segment.table_eps = real(k, v); }},
        {"segment.outlier_radius", [](RunConfig& c, K k, V v) { c.segment.outlier_radius = real(k, v); }},
        {"segment.outlier_min", [](RunConfig& c, K k, V v) { c.segment.outlier_min = count(k, v); }},
        {"segment.dbscan_eps", [](RunConfig& c, K k, V v) { c.segment.dbscan_eps = real(k, v); }},
        {"segment.dbscan_min_pts", [](RunConfig& c, K k, V v) { c.segment.dbscan_min_pts = count(k, v); }},

        {"reward.k_g", [](RunConfig& c, K k, V v) { c.reward.k_g = real(k, v); }},
        {"reward.k_r", [](RunConfig& c, K k, V v) { c.reward.k_r = real(k, v); }},
        {"reward.k_e", [](RunConfig& c, K k, V v) { c.reward.k_e = real(k, v); }},
        {"reward.k_d", [](RunConfig& c, K k, V v) { c.reward.k_d = real(k, v); }},
        {"reward.gamma", [](RunConfig& c, K k, V v) { c.reward.gamma = real(k, v); }},
        {"reward.success_translation", [](RunConfig& c, K k, V v) { c.reward.success_translation = real(k, v); }},
        {"reward.success_rotation", [](RunConfig& c, K k, V v) { c.reward.success_rotation = real(k, v); }},

        {"poses.margin_min", [](RunConfig& c, K k, V v) { c.poses_margin_min = real(k, v); }},
    };
    return t;
}

}  // namespace

void RunConfig::finalize() {
    data.seed = seed;
    train.seed = seed;
    track.seed = seed;
    encoder.patch.n_points = data.n_surface_points;
    data.validate();
    encoder.validate();
    train.validate();
    track.validate();
    segment.validate();
    reward.validate();
    if (!(poses_margin_min >= 0.0)) throw Error(ErrorCode::InvalidConfig, "poses.margin_min must be >= 0");
    if (data_count == 0) throw Error(ErrorCode::InvalidConfig, "data.count must be > 0");
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : table()) out.push_back(k);
    return out;
}

void apply_config_json(RunConfig& cfg, std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    const auto& t = table();
    for (const auto& [key, value] : doc.items()) {
        const auto it = t.find(key);
        if (it == t.end()) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
        try {
            it->second(cfg, key, value);
        } catch (const json::exception&) {
            bad_type(key, "a value of another type");
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(cfg, ss.str());
}

}  // namespace corn
