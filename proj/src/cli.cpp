#include "corn/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "corn/checkpoint.hpp"
#include "corn/config.hpp"
#include "corn/error.hpp"
#include "corn/patches.hpp"
#include "corn/policy.hpp"
#include "corn/poses.hpp"
#include "corn/primitives.hpp"

namespace corn {

using nlohmann::json;

namespace {

// Round-trip text for a double.
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Pose pose_arg(const std::vector<double>& v) {
    if (v.size() != 7) throw Error(ErrorCode::InvalidConfig, "a pose needs 7 reals: tx ty tz qx qy qz qw");
    return Pose::from_array(v);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// OBJ meshes are sampled on the surface; anything else is read as lines of
// "x y z" (header lines such as those of ASCII PCD files are skipped).
PointCloud load_cloud(const std::string& path, std::size_t n, Rng& rng) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".obj") {
        return PointCloud(sample_surface_points(load_obj(path), n, rng));
    }
    std::istringstream lines(read_text(path));
    std::string line;
    PointCloud cloud;
    while (std::getline(lines, line)) {
        std::istringstream ls(line);
        Vec3 p;
        if (ls >> p.x() >> p.y() >> p.z()) cloud.points.push_back(p);
    }
    if (cloud.size() < n) throw Error(ErrorCode::TooFewPoints, "cloud has fewer than " + std::to_string(n) + " points");
    return subsample(cloud, n, rng);
}

std::vector<double> reals(const json& j, std::size_t n, const char* what) {
    if (!j.is_array() || j.size() != n) {
        throw Error(ErrorCode::Parse, std::string(what) + " needs " + std::to_string(n) + " reals");
    }
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw Error(ErrorCode::Parse, std::string(what) + " must be numeric");
        v.push_back(x.get<double>());
    }
    return v;
}

Vec3 vec3_of(const json& j, const char* what) {
    const auto v = reals(j, 3, what);
    return {v[0], v[1], v[2]};
}

void write_metrics(json& j, const Metrics& m) {
    j["loss"] = m.loss;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["n_patches"] = m.n_patches;
}

// A file, or the *.obj files of a directory in name order.
std::vector<std::filesystem::path> obj_files(const std::filesystem::path& p) {
    if (!std::filesystem::is_directory(p)) return {p};
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

json stats_json(const DatasetStats& s) {
    return {{"n_records", s.n_records},
            {"fraction_records_any_contact", s.fraction_records_any_contact},
            {"fraction_points_positive", s.fraction_points_positive},
            {"fraction_patches_positive", s.fraction_patches_positive}};
}

double majority_baseline(std::span<const EncoderSample> samples) {
    std::size_t pos = 0, total = 0;
    for (const auto& s : samples) {
        for (auto l : s.labels) pos += l, ++total;
    }
    if (total == 0) return 0.0;
    const double p = double(pos) / double(total);
    return std::max(p, 1.0 - p);
}

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--config", config, "JSON run configuration with flat dotted keys")->check(CLI::ExistingFile);
        seed_opt = app->add_option("--seed", seed, "master seed");
    }

    RunConfig load() const {
        RunConfig cfg;
        if (!config.empty()) apply_config_file(cfg, config);
        if (seed_opt->count() > 0) cfg.seed = seed;
        return cfg;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Contact-based object representation tools", "corn"};
    app.set_version_flag("--version", std::string("corn ") + kVersion + " (dataset format " +
                                          std::to_string(kDatasetVersion) + ", checkpoint format " +
                                          std::to_string(kCheckpointVersion) + ", cloud sequence format " +
                                          std::to_string(kPcseqVersion) + ")");
    app.require_subcommand(1, 1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a contact dataset");
    Flags gen_flags;
    gen_flags.add(gen);
    std::string gen_gripper, gen_out;
    std::vector<std::string> gen_objects;
    bool gen_primitives = false;
    std::size_t gen_count = 0;
    double gen_sigma = 0.0;
    unsigned gen_jobs = 0;
    gen->add_option("--gripper", gen_gripper, "closed gripper mesh (OBJ)")->required()->check(CLI::ExistingFile);
    gen->add_option("--objects", gen_objects, "object meshes (OBJ files or directories of them)")->check(CLI::ExistingPath);
    gen->add_flag("--primitives", gen_primitives, "use the built-in primitive objects");
    gen->add_option("--out", gen_out, "dataset file to write")->required();
    auto* gen_count_opt = gen->add_option("--count", gen_count, "number of records");
    auto* gen_sigma_opt = gen->add_option("--sigma", gen_sigma, "approach noise scale (m)");
    auto* gen_jobs_opt = gen->add_option("--jobs", gen_jobs, "worker threads (0 = logical cores)");

    // train
    auto* tr = app.add_subcommand("train", "train the contact encoder");
    Flags tr_flags;
    tr_flags.add(tr);
    std::string tr_data, tr_out;
    std::size_t tr_epochs = 0;
    double tr_lr = 0.0;
    std::size_t tr_batch = 0;
    tr->add_option("--data", tr_data, "dataset file")->required()->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "checkpoint to write")->required();
    auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "training epochs");
    auto* tr_lr_opt = tr->add_option("--lr", tr_lr, "learning rate");
    auto* tr_batch_opt = tr->add_option("--batch", tr_batch, "minibatch size");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_data;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data, "dataset file")->required()->check(CLI::ExistingFile);

    // track
    auto* tk = app.add_subcommand("track", "track an object through a cloud sequence");
    Flags tk_flags;
    tk_flags.add(tk);
    std::string tk_seq;
    std::vector<double> tk_pose;
    tk->add_option("--seq", tk_seq, "cloud sequence (.pcseq)")->required()->check(CLI::ExistingFile);
    tk->add_option("--init-pose", tk_pose, "initial object pose: tx ty tz qx qy qz qw")->required()->expected(7);

    // stable-poses
    auto* sp = app.add_subcommand("stable-poses", "enumerate stable resting orientations");
    Flags sp_flags;
    sp_flags.add(sp);
    std::string sp_mesh;
    double sp_margin = 0.0;
    sp->add_option("--mesh", sp_mesh, "object mesh (OBJ)")->required()->check(CLI::ExistingFile);
    auto* sp_margin_opt = sp->add_option("--margin-min", sp_margin, "minimum stability margin (m)");

    // reward-trace
    auto* rt = app.add_subcommand("reward-trace", "per-step reward terms of a trajectory");
    Flags rt_flags;
    rt_flags.add(rt);
    std::string rt_traj;
    rt->add_option("--traj", rt_traj, "trajectory JSON")->required()->check(CLI::ExistingFile);

    // attn
    auto* at = app.add_subcommand("attn", "patch attention of the policy head");
    Flags at_flags;
    at_flags.add(at);
    std::string at_ckpt, at_cloud;
    std::vector<double> at_pose;
    at->add_option("--ckpt", at_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
    at->add_option("--cloud", at_cloud, "object cloud (OBJ mesh or ASCII points)")->required()->check(CLI::ExistingFile);
    at->add_option("--pose", at_pose, "hand pose: tx ty tz qx qy qz qw")->required()->expected(7);

    // stats
    auto* st = app.add_subcommand("stats", "summary statistics of a dataset");
    Flags st_flags;
    st_flags.add(st);
    std::string st_data;
    st->add_option("--data", st_data, "dataset file")->required()->check(CLI::ExistingFile);

    std::vector<const char*> argv{args.empty() ? "corn" : args[0].c_str()};
    for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands()) sub = s;
        err << (sub ? sub->help() : app.help());
        return 2;
    }

    try {
        if (gen->parsed()) {
            if (gen_objects.empty() && !gen_primitives) {
                err << "error: gen-data needs --objects or --primitives\n" << gen->help();
                return 2;
            }
            RunConfig cfg = gen_flags.load();
            if (gen_count_opt->count() > 0) cfg.data_count = gen_count;
            if (gen_sigma_opt->count() > 0) cfg.data.sigma = gen_sigma;
            if (gen_jobs_opt->count() > 0) cfg.data_jobs = gen_jobs;
            cfg.finalize();
            std::vector<TriMesh> objects;
            if (gen_primitives) objects = make_primitive_set();
            for (const auto& o : gen_objects) {
                for (const auto& f : obj_files(o)) objects.push_back(load_obj(f));
            }
            if (objects.empty()) throw Error(ErrorCode::EmptyMesh, "no object meshes found");
            const TriMesh gripper = load_obj(gen_gripper);
            const unsigned jobs = cfg.data_jobs ? cfg.data_jobs : std::max(1u, std::thread::hardware_concurrency());
            const auto records = generate_dataset(objects, gripper, cfg.data, cfg.data_count, jobs);
            write_dataset(records, std::filesystem::path(gen_out));
            const DatasetStats s = dataset_stats(records, cfg.encoder.patch);
            out << stats_json(s).dump(2) << "\n";
            return 0;
        }
        if (tr->parsed()) {
            RunConfig cfg = tr_flags.load();
            if (tr_epochs_opt->count() > 0) cfg.train.epochs = tr_epochs;
            if (tr_lr_opt->count() > 0) cfg.train.lr = tr_lr;
            if (tr_batch_opt->count() > 0) cfg.train.batch_size = tr_batch;
            const auto records = read_dataset(std::filesystem::path(tr_data));
            if (!records.empty()) cfg.data.n_surface_points = records.front().points.size();
            cfg.finalize();
            const auto samples = make_samples(records, cfg.encoder.patch);
            EncoderParams params = EncoderParams::initialized(cfg.encoder, cfg.seed);
            out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy,val_precision,val_recall\n";
            train(params, samples, cfg.train, [&](const EpochStats& e) {
                out << e.epoch << ',' << num(e.train_loss) << ',' << num(e.train.accuracy) << ','
                    << num(e.validation.loss) << ',' << num(e.validation.accuracy) << ','
                    << num(e.validation.precision) << ',' << num(e.validation.recall) << '\n';
            });
            save_encoder(params, tr_out);
            return 0;
        }
        if (ev->parsed()) {
            const EncoderParams params = load_encoder(ev_ckpt);
            const auto records = read_dataset(std::filesystem::path(ev_data));
            const auto samples = make_samples(records, params.cfg.patch);
            json j;
            j["n_records"] = records.size();
            write_metrics(j, evaluate(params, samples));
            j["majority_baseline"] = majority_baseline(samples);
            out << j.dump(2) << "\n";
            return 0;
        }
        if (tk->parsed()) {
            RunConfig cfg = tk_flags.load();
            cfg.finalize();
            auto frames = read_pcseq(std::filesystem::path(tk_seq));
            if (frames.empty()) throw Error(ErrorCode::TooFewPoints, "cloud sequence has no frames");
            if (cfg.track_segment) {
                for (auto& f : frames) f = segment_object(f, cfg.segment);
            }
            const Pose t0 = pose_arg(tk_pose);
            TrackerState state = tracker_init(frames.front(), t0, cfg.track);
            out << "frame,tx,ty,tz,qx,qy,qz,qw,fitness_previous,fitness_initial,reregistered,lost\n";
            auto row = [&](std::size_t f, const Pose& p, double fp, double fi, bool rr, bool lost) {
                out << f;
                for (double v : p.to_array()) out << ',' << num(v);
                out << ',' << num(fp) << ',' << num(fi) << ',' << int(rr) << ',' << int(lost) << '\n';
            };
            row(0, t0, 1.0, 1.0, false, false);
            for (std::size_t f = 1; f < frames.size(); ++f) {
                const TrackStep s = track_step(state, frames[f]);
                if (s.lost) err << "warning: frame " << f << " lost, pose held\n";
                row(f, s.pose, s.fitness_previous, s.fitness_initial, s.reregistered, s.lost);
            }
            return 0;
        }
        if (sp->parsed()) {
            RunConfig cfg = sp_flags.load();
            if (sp_margin_opt->count() > 0) cfg.poses_margin_min = sp_margin;
            cfg.finalize();
            const auto poses = stable_orientations(load_obj(sp_mesh), cfg.poses_margin_min);
            json arr = json::array();
            for (const auto& p : poses) {
                const auto& q = p.orientation;
                arr.push_back({{"quaternion", {q.x(), q.y(), q.z(), q.w()}},
                               {"rest_height", p.rest_height},
                               {"margin", p.margin}});
            }
            out << arr.dump(2) << "\n";
            return 0;
        }
        if (rt->parsed()) {
            RunConfig cfg = rt_flags.load();
            cfg.finalize();
            json doc;
            try {
                doc = json::parse(read_text(rt_traj));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::Parse, std::string("trajectory: ") + e.what());
            }
            if (!doc.is_object() || !doc.contains("goal") || !doc.contains("steps") || !doc["steps"].is_array()) {
                throw Error(ErrorCode::Parse, "trajectory needs \"goal\" and \"steps\"");
            }
            ObjectState base;
            base.goal = Pose::from_array(reals(doc["goal"], 7, "goal"));
            if (doc.contains("half_extents")) base.half_extents = vec3_of(doc["half_extents"], "half_extents");
            if (doc.contains("com")) base.com = vec3_of(doc["com"], "com");
            if (!((base.half_extents.array() > 0.0).all())) throw Error(ErrorCode::Parse, "half_extents must be > 0");
            std::vector<ObjectState> states;
            for (const auto& s : doc["steps"]) {
                ObjectState o = base;
                if (!s.is_object() || !s.contains("pose")) throw Error(ErrorCode::Parse, "each step needs a pose");
                o.pose = Pose::from_array(reals(s["pose"], 7, "pose"));
                if (s.contains("gripper_tip")) o.gripper_tip = vec3_of(s["gripper_tip"], "gripper_tip");
                if (s.contains("torques")) {
                    const auto t = reals(s["torques"], 7, "torques");
                    std::copy(t.begin(), t.end(), o.torques.begin());
                }
                if (s.contains("velocities")) {
                    const auto v = reals(s["velocities"], 7, "velocities");
                    std::copy(v.begin(), v.end(), o.joint_velocities.begin());
                }
                states.push_back(o);
            }
            out << "step,success,reach,contact,energy,total\n";
            for (std::size_t i = 1; i < states.size(); ++i) {
                const RewardTerms t = reward_terms(states[i - 1], states[i], success(states[i], cfg.reward), cfg.reward);
                out << i << ',' << num(t.success) << ',' << num(t.reach) << ',' << num(t.contact) << ','
                    << num(t.energy) << ',' << num(t.total) << '\n';
            }
            return 0;
        }
        if (at->parsed()) {
            RunConfig cfg = at_flags.load();
            cfg.finalize();
            const NamedTensors tensors = read_tensors(std::filesystem::path(at_ckpt));
            const EncoderParams enc = encoder_from_tensors(tensors);
            PolicyConfig pc;
            pc.d_model = enc.cfg.d_model;
            PolicyParams policy = PolicyParams::initialized(pc, cfg.seed);
            const bool from_ckpt = policy.load(tensors);
            Rng rng(cfg.seed);
            PointCloud cloud = load_cloud(at_cloud, enc.cfg.patch.n_points, rng);
            const Vec3 centroid = cloud.centroid();
            for (auto& p : cloud.points) p -= centroid;
            const PatchSet ps = make_patches(cloud, enc.cfg.patch);
            const Pose hand = pose_arg(at_pose);
            const auto [emb, hand_emb] = encode(enc, ps, HandState{hand.translation() - centroid, rot_to_6d(hand.rotation())});
            const PolicyOutput po = policy_forward(policy, emb, TaskInputs{});
            json j;
            j["attention"] = attention_map(po.attention);
            json centers = json::array();
            for (const auto& c : ps.centers) {
                const Vec3 w = c + centroid;
                centers.push_back({w.x(), w.y(), w.z()});
            }
            j["centers"] = centers;
            j["policy"] = from_ckpt ? "checkpoint" : "seeded-initialization";
            out << j.dump(2) << "\n";
            return 0;
        }
        if (st->parsed()) {
            RunConfig cfg = st_flags.load();
            const auto records = read_dataset(std::filesystem::path(st_data));
            if (!records.empty()) cfg.data.n_surface_points = records.front().points.size();
            cfg.finalize();
            const DatasetStats s = dataset_stats(records, cfg.encoder.patch);
            out << stats_json(s).dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace corn
