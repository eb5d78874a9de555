// Acceptance runner. With no argument every criterion runs; with a name only
// that one does. Each criterion prints its measurements followed by a single
// "PASS <name>" or "FAIL <name>" line. The exit status is nonzero when any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "corn/cli.hpp"
#include "corn/contactgen.hpp"
#include "corn/control.hpp"
#include "corn/encoder.hpp"
#include "corn/error.hpp"
#include "corn/geom.hpp"
#include "corn/hull.hpp"
#include "corn/patches.hpp"
#include "corn/percept.hpp"
#include "corn/poses.hpp"
#include "corn/primitives.hpp"
#include "corn/reward.hpp"
#include "corn/train.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace corn;

namespace {

// Tolerances and budgets.
constexpr double kContactFractionLow = 0.35;
constexpr double kContactFractionHigh = 0.65;
constexpr double kContactBudgetSeconds = 60.0;
constexpr double kNearestTolerance = 1e-12;
constexpr double kBoundarySkip = 1e-9;
constexpr double kGradientRelTolerance = 1e-4;
constexpr double kGradientStep = 1e-5;
constexpr double kJacobianTolerance = 1e-5;
constexpr double kOverfitAccuracy = 0.99;
constexpr std::size_t kOverfitEpochs = 200;
constexpr double kBaselineMarginPoints = 0.20;
constexpr double kTrainingBudgetSeconds = 30.0 * 60.0;
constexpr double kIcpCleanTranslation = 1e-3;
constexpr double kIcpCleanRotation = 1e-3;
constexpr double kIcpOccludedTranslation = 5e-3;
constexpr double kIcpOccludedRotation = 1e-2;
constexpr double kTrackingDrift = 5e-3;
constexpr double kTelescopeTolerance = 1e-12;
constexpr double kEpisodeSeparation = 0.1;
constexpr int kOracleSeeds = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Collects named checks; the criterion passes when every check does.
class Report {
public:
    void check(bool ok, const std::string& what) {
        std::cout << "  " << (ok ? "ok   " : "FAIL ") << what << "\n";
        ok_ = ok_ && ok;
    }
    void note(const std::string& what) { std::cout << "  info " << what << "\n"; }
    bool ok() const { return ok_; }

private:
    bool ok_ = true;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Labels disagreeing with the winding-number oracle after a file round trip.
// Points whose winding number sits near one half lie on the gripper surface
// and are counted separately.
struct LabelAudit {
    std::size_t points = 0;
    std::size_t mismatches = 0;
    std::size_t near_surface = 0;
    bool round_trip_equal = false;
};

LabelAudit audit_labels(const std::vector<ContactRecord>& records, const TriMesh& gripper, const std::string& tag) {
    const auto path = testutil::scratch_dir("accept_labels_" + tag) / "d.corn";
    write_dataset(records, path);
    const auto back = read_dataset(path);
    LabelAudit a;
    a.round_trip_equal = back == records;
    for (const auto& r : back) {
        const TriMesh placed = gripper.transformed(r.gripper_pose());
        for (std::size_t i = 0; i < r.points.size(); ++i) {
            const double w = testutil::winding_number(r.points[i], placed);
            a.near_surface += std::abs(w - 0.5) < 0.25;
            a.mismatches += (w > 0.5) != (r.labels[i] == 1);
            ++a.points;
        }
    }
    return a;
}

std::vector<ContactRecord> primitive_dataset(std::size_t count, double sigma, std::uint64_t seed, unsigned jobs = 1) {
    const auto objects = make_primitive_set();
    DataGenConfig cfg;
    cfg.sigma = sigma;
    cfg.seed = seed;
    return generate_dataset(objects, make_closed_gripper(), cfg, count, jobs);
}

// ---------------------------------------------------------------------------

bool contact_balance(Report& rep) {
    const auto t0 = Clock::now();
    const auto records = primitive_dataset(1000, 0.01, 2024);
    const double elapsed = seconds_since(t0);
    const DatasetStats s = dataset_stats(records);
    rep.note(fmt("records %zu, any-contact fraction %.4f, positive points %.4f, positive patches %.4f", s.n_records,
                 s.fraction_records_any_contact, s.fraction_points_positive, s.fraction_patches_positive));
    rep.check(s.n_records == 1000, "1000 records over 5 primitives");
    rep.check(s.fraction_records_any_contact >= kContactFractionLow && s.fraction_records_any_contact <= kContactFractionHigh,
              fmt("any-contact fraction %.4f in [0.35, 0.65]", s.fraction_records_any_contact));
    rep.check(elapsed < kContactBudgetSeconds, fmt("generation took %.2f s (< 60 s)", elapsed));
    const LabelAudit a = audit_labels(records, make_closed_gripper(), "balance");
    rep.check(a.round_trip_equal && a.mismatches == 0, fmt("labels recomputed: %zu mismatches", a.mismatches));
    return rep.ok();
}

bool label_recomputability(Report& rep) {
    const TriMesh gripper = make_closed_gripper();
    struct Case {
        const char* tag;
        std::size_t count;
        double sigma;
        std::uint64_t seed;
        unsigned jobs;
    };
    const std::vector<Case> cases{{"s005", 300, 0.005, 1, 1}, {"s010", 300, 0.01, 2, 2}, {"s020", 300, 0.02, 3, 3},
                                  {"s050", 200, 0.05, 4, 1}};
    for (const Case& c : cases) {
        const auto records = primitive_dataset(c.count, c.sigma, c.seed, c.jobs);
        const LabelAudit a = audit_labels(records, gripper, c.tag);
        rep.check(a.round_trip_equal, fmt("sigma %.3f: file round trip reproduces every record", c.sigma));
        rep.check(a.mismatches == 0, fmt("sigma %.3f: %zu of %zu labels disagree (%zu within the surface band)", c.sigma,
                                         a.mismatches, a.points, a.near_surface));
    }

    // A dataset written by the command-line front end over a custom object.
    const auto dir = testutil::scratch_dir("accept_labels_cli");
    save_obj(gripper, dir / "gripper.obj");
    save_obj(make_cylinder(0.04, 0.06, 16), dir / "can.obj");
    std::ostringstream out, err;
    const int code = run_cli({"corn", "gen-data", "--gripper", (dir / "gripper.obj").string(), "--objects",
                              (dir / "can.obj").string(), "--out", (dir / "d.corn").string(), "--count", "200",
                              "--seed", "9"},
                             out, err);
    rep.check(code == 0, "gen-data on a custom mesh exits 0");
    if (code == 0) {
        const auto records = read_dataset(dir / "d.corn");
        const LabelAudit a = audit_labels(records, load_obj(dir / "gripper.obj"), "cli");
        rep.check(a.mismatches == 0, fmt("gen-data output: %zu of %zu labels disagree", a.mismatches, a.points));
    }
    return rep.ok();
}

bool geometry_oracles(Report& rep) {
    Rng rng(7);

    // Containment against an analytic box under random rigid placements.
    std::size_t box_tests = 0, box_bad = 0;
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
        const Vec3 h(rng.uniform(0.01, 0.2), rng.uniform(0.01, 0.2), rng.uniform(0.01, 0.2));
        const Pose pose = testutil::random_pose(rng, 0.5);
        const TriMesh box = make_box(h).transformed(pose);
        for (int i = 0; i < 400; ++i) {
            const Vec3 local = testutil::random_vec(rng, 1.5).cwiseProduct(h);
            const Vec3 gap = h - local.cwiseAbs();
            const double to_boundary = gap.minCoeff() >= 0 ? gap.minCoeff() : (-gap).cwiseMax(0.0).norm();
            if (to_boundary < kBoundarySkip) continue;
            ++box_tests;
            box_bad += point_in_mesh(pose.apply(local), box) != (gap.minCoeff() > 0);
        }
    }
    rep.check(box_bad == 0, fmt("point_in_mesh vs analytic box: %zu mismatches over %zu points", box_bad, box_tests));

    // Icosphere: inside its inradius and outside its circumradius.
    std::size_t sphere_tests = 0, sphere_bad = 0;
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
        const double r = rng.uniform(0.02, 0.2);
        const TriMesh s = make_icosphere(r, 1 + seed % 3);
        double inradius = INFINITY;
        for (std::size_t f = 0; f < s.num_faces(); ++f) {
            const Vec3 a = s.corner(f, 0), b = s.corner(f, 1), c = s.corner(f, 2);
            inradius = std::min(inradius, std::abs((b - a).cross(c - a).normalized().dot(a)));
        }
        for (int i = 0; i < 400; ++i) {
            const Vec3 p = testutil::random_vec(rng, 1.3 * r);
            const double n = p.norm();
            if (n > inradius - kBoundarySkip && n < r + kBoundarySkip) continue;
            ++sphere_tests;
            sphere_bad += point_in_mesh(p, s) != (n < inradius);
        }
    }
    rep.check(sphere_bad == 0,
              fmt("point_in_mesh vs sphere radii: %zu mismatches over %zu points", sphere_bad, sphere_tests));

    // Nearest surface point against an exhaustive triangle scan.
    double worst_nearest = 0.0;
    const auto shapes = make_primitive_set();
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
        const TriMesh m = shapes[std::size_t(seed) % shapes.size()].transformed(testutil::random_pose(rng, 0.2));
        for (int i = 0; i < 40; ++i) {
            const Vec3 p = testutil::random_vec(rng, 0.3);
            const NearestPoint np = nearest_point_on_mesh(p, m);
            worst_nearest = std::max(worst_nearest, std::abs(np.distance - testutil::mesh_distance(p, m)));
            worst_nearest = std::max(worst_nearest, std::abs((np.point - p).norm() - np.distance));
        }
    }
    rep.check(worst_nearest <= kNearestTolerance, fmt("nearest_point_on_mesh worst deviation %.3e", worst_nearest));

    // Neighbour queries and sampling on small clouds.
    int knn_bad = 0, fps_bad = 0, dbscan_bad = 0, outlier_bad = 0;
    for (int seed = 0; seed < kOracleSeeds; ++seed) {
        Rng r(std::uint64_t(100 + seed));
        const std::size_t n = 50 + r.below(451);
        PointCloud c;
        for (std::size_t i = 0; i < n; ++i) c.points.push_back(testutil::random_vec(r, 0.1));
        const std::size_t k = 1 + r.below(std::min<std::size_t>(n, 64));
        const Vec3 q = testutil::random_vec(r, 0.12);
        knn_bad += knn(c, q, k) != testutil::knn_oracle(c, q, k);
        const std::size_t m = 1 + r.below(std::min<std::size_t>(n, 64));
        fps_bad += farthest_point_sample(c, m) != testutil::fps_oracle(c, m);

        const auto pts = testutil::blobs(r, n);
        const double eps = r.uniform(0.004, 0.02);
        const std::size_t min_pts = 2 + r.below(8);
        dbscan_bad += dbscan(pts, eps, min_pts) != testutil::reference_dbscan(pts, eps, min_pts);

        const double radius = r.uniform(0.005, 0.03);
        const std::size_t n_min = 1 + r.below(10);
        outlier_bad += radius_outlier_removal(PointCloud(pts), radius, n_min).points !=
                       testutil::radius_outlier_oracle(pts, radius, n_min);
    }
    rep.check(knn_bad == 0, fmt("knn vs sort: %d of %d instances differ", knn_bad, kOracleSeeds));
    rep.check(fps_bad == 0, fmt("farthest point sampling vs exhaustive: %d of %d differ", fps_bad, kOracleSeeds));
    rep.check(dbscan_bad == 0, fmt("dbscan vs reference: %d of %d differ", dbscan_bad, kOracleSeeds));
    rep.check(outlier_bad == 0, fmt("radius outlier vs brute force: %d of %d differ", outlier_bad, kOracleSeeds));
    return rep.ok();
}

bool gradients(Report& rep) {
    // Two records that each carry positive and negative patches.
    std::vector<EncoderSample> samples;
    for (const auto& r : primitive_dataset(64, 0.01, 11)) {
        EncoderSample s = make_sample(r, PatchConfig{});
        const auto pos = std::count(s.labels.begin(), s.labels.end(), 1);
        if (pos > 0 && pos < std::ptrdiff_t(s.labels.size())) samples.push_back(std::move(s));
        if (samples.size() == 2) break;
    }
    rep.check(samples.size() == 2, "found a mixed two-record batch");
    if (samples.size() < 2) return false;

    EncoderParams params = EncoderParams::initialized(EncoderConfig{}, 13);
    const std::vector<std::size_t> idx{0, 1};
    const EncoderBatch batch = make_batch(samples, idx, params.cfg);
    params.zero_grad();
    loss_and_backward(params, batch);

    std::vector<std::pair<std::string, nn::Tensor*>> tensors;
    params.for_each([&](const std::string& name, nn::Tensor& t) { tensors.emplace_back(name, &t); });
    Rng rng(14);
    double worst = 0.0;
    std::string worst_name;
    std::size_t checked = 0, failing_groups = 0;
    for (auto& [name, t] : tensors) {
        std::vector<std::size_t> entries;
        const auto biggest = std::max_element(t->grad.begin(), t->grad.end(),
                                              [](double a, double b) { return std::abs(a) < std::abs(b); });
        entries.push_back(std::size_t(biggest - t->grad.begin()));
        for (int k = 0; k < 8; ++k) entries.push_back(std::size_t(rng.below(t->size())));
        double group_worst = 0.0;
        for (std::size_t i : entries) {
            const double orig = t->value[i];
            t->value[i] = orig + kGradientStep;
            const double up = loss_only(params, batch).loss;
            t->value[i] = orig - kGradientStep;
            const double down = loss_only(params, batch).loss;
            t->value[i] = orig;
            const double numeric = (up - down) / (2 * kGradientStep);
            const double analytic = t->grad[i];
            const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            group_worst = std::max(group_worst, rel);
            ++checked;
        }
        failing_groups += group_worst >= kGradientRelTolerance;
        if (group_worst > worst) worst = group_worst, worst_name = name;
    }
    rep.check(failing_groups == 0, fmt("%zu parameter groups, %zu entries, worst relative error %.2e (%s)",
                                       tensors.size(), checked, worst, worst_name.c_str()));

    double worst_jacobian = 0.0;
    Rng qrng(15);
    const SerialChain chain = SerialChain::franka();
    for (int trial = 0; trial < 100; ++trial) {
        JointVector q;
        for (int i = 0; i < kChainJoints; ++i) q[i] = qrng.uniform(-2.0, 2.0);
        worst_jacobian = std::max(worst_jacobian, (jacobian(chain, q) - testutil::numeric_jacobian(chain, q)).cwiseAbs().maxCoeff());
    }
    rep.check(worst_jacobian < kJacobianTolerance, fmt("jacobian columns worst deviation %.2e", worst_jacobian));
    return rep.ok();
}

bool learning(Report& rep) {
    const auto t0 = Clock::now();

    // Overfit a small set; train accuracy is re-evaluated after each epoch.
    const auto small = make_samples(primitive_dataset(50, 0.01, 31), PatchConfig{});
    TrainConfig overfit;
    overfit.epochs = kOverfitEpochs;
    overfit.val_fraction = 0.0;
    overfit.eval_train = true;
    overfit.seed = 32;
    EncoderParams p = EncoderParams::initialized(EncoderConfig{}, 33);
    double best = 0.0;
    std::size_t reached = 0;
    train(p, small, overfit, [&](const EpochStats& e) {
        best = std::max(best, e.train.accuracy);
        if (reached == 0 && e.train.accuracy >= kOverfitAccuracy) reached = e.epoch + 1;
    });
    rep.check(reached > 0, fmt("50-record overfit best train accuracy %.4f, first epoch >= 0.99: %zu", best, reached));
    rep.note(fmt("overfit took %.1f s", seconds_since(t0)));

    // Held-out accuracy on a 10k primitive dataset against the majority class.
    const auto t1 = Clock::now();
    const auto records = primitive_dataset(10000, 0.01, 41);
    const auto samples = make_samples(records, PatchConfig{});
    rep.note(fmt("10k generation took %.1f s", seconds_since(t1)));
    TrainConfig tc;
    tc.epochs = 25;
    tc.seed = 42;
    EncoderParams q = EncoderParams::initialized(EncoderConfig{}, 43);
    const TrainReport report = train(q, samples, tc, [&](const EpochStats& e) {
        rep.note(fmt("epoch %zu train loss %.4f held-out accuracy %.4f", e.epoch + 1, e.train_loss, e.validation.accuracy));
    });
    const std::span<const EncoderSample> held(samples.data() + report.n_train, report.n_validation);
    std::size_t positives = 0, total = 0;
    for (const auto& s : held) {
        positives += std::size_t(std::count(s.labels.begin(), s.labels.end(), 1));
        total += s.labels.size();
    }
    const double majority = double(std::max(positives, total - positives)) / double(total);
    const Metrics m = evaluate(q, held);
    rep.check(m.accuracy >= majority + kBaselineMarginPoints,
              fmt("held-out accuracy %.4f vs majority baseline %.4f (needs >= %.4f)", m.accuracy, majority,
                  majority + kBaselineMarginPoints));
    rep.note(fmt("held-out precision %.4f recall %.4f over %zu patches", m.precision, m.recall, m.n_patches));
    const double elapsed = seconds_since(t0);
    rep.check(elapsed < kTrainingBudgetSeconds, fmt("total learning time %.1f s (< 1800 s)", elapsed));
    return rep.ok();
}

double translation_error(const Pose& a, const Pose& b) { return (a.translation() - b.translation()).norm(); }
double rotation_error(const Pose& a, const Pose& b) { return a.rotation().angle_to(b.rotation()); }

bool icp_tracking(Report& rep) {
    const TriMesh box = make_box(Vec3(0.06, 0.04, 0.03));
    double clean_t = 0.0, clean_r = 0.0, occ_t = 0.0, occ_r = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        Rng rng(std::uint64_t(200 + seed));
        const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        const Vec3 shift = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized() * 0.01;
        const Pose truth(shift, Rotation::from_axis_angle(axis, 5.0 * std::numbers::pi / 180.0));
        const PointCloud src = sample_surface_points(box, 2048, rng);

        const PointCloud tgt = estimate_normals(src.transformed(truth), 16);
        // 10% of the target cut away on one side, 1 mm noise on the rest.
        const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        std::vector<double> proj;
        for (const auto& p : src.points) proj.push_back(p.dot(dir));
        std::vector<double> sorted = proj;
        std::sort(sorted.begin(), sorted.end());
        const double cut = sorted[sorted.size() * 9 / 10];
        PointCloud partial;
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (proj[i] < cut) partial.points.push_back(truth.apply(src.points[i]) + Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.001);
        }
        const PointCloud occluded = estimate_normals(partial, 16);

        for (IcpMode mode : {IcpMode::PointToPlane, IcpMode::PointToPoint}) {
            IcpConfig cfg;
            cfg.mode = mode;
            const IcpResult a = icp(src, tgt, Pose::identity(), cfg);
            clean_t = std::max(clean_t, translation_error(a.transform, truth));
            clean_r = std::max(clean_r, rotation_error(a.transform, truth));
            const IcpResult b = icp(src, occluded, Pose::identity(), cfg);
            occ_t = std::max(occ_t, translation_error(b.transform, truth));
            occ_r = std::max(occ_r, rotation_error(b.transform, truth));
        }
    }
    rep.check(clean_t < kIcpCleanTranslation && clean_r < kIcpCleanRotation,
              fmt("clean 5 deg / 1 cm: worst %.2e m, %.2e rad", clean_t, clean_r));
    rep.check(occ_t < kIcpOccludedTranslation && occ_r < kIcpOccludedRotation,
              fmt("10%% occlusion + 1 mm noise: worst %.2e m, %.2e rad", occ_t, occ_r));

    // Twenty frames of a box sliding and turning, 1 mm sensor noise.
    Rng rng(300);
    auto observe = [&](const Pose& pose) {
        PointCloud c = sample_surface_points(box, 3000, rng).transformed(pose);
        for (auto& p : c.points) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.001;
        return c;
    };
    const Pose t0 = Pose::from_translation(Vec3(0.1, 0.0, 0.03));
    TrackerConfig tcfg;
    rep.check(tcfg.fitness_threshold == 0.6, "fitness gate 0.6");
    TrackerState state = tracker_init(observe(t0), t0, tcfg);
    const Pose step(Vec3(0.004, 0.002, 0.0), Rotation::from_axis_angle(Vec3::UnitZ(), 0.02));
    Pose truth = t0;
    std::size_t reregistered = 0;
    double worst_drift = 0.0;
    for (int f = 0; f < 20; ++f) {
        truth = Pose(step.translation() + truth.translation(), step.rotation() * truth.rotation());
        const TrackStep s = track_step(state, observe(truth));
        reregistered += s.reregistered;
        worst_drift = std::max(worst_drift, translation_error(s.pose, truth));
    }
    const double final_drift = translation_error(state.pose, truth);
    rep.note(fmt("re-registered on %zu of 20 frames, worst frame error %.2e m", reregistered, worst_drift));
    rep.check(final_drift < kTrackingDrift, fmt("20-frame drift %.2e m", final_drift));
    return rep.ok();
}

bool reward_identities(Report& rep) {
    const RewardParams p;
    Rng rng(400);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> phi(101);
        for (auto& v : phi) {
            const Pose a = testutil::random_pose(rng, 0.3), b = testutil::random_pose(rng, 0.3);
            const Vec3 h(rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1), rng.uniform(0.01, 0.1));
            v = potential_reach(bbox_distance(a, b, h), p) + potential_contact(rng.uniform(0.0, 0.3), p);
        }
        double sum = 0.0, g = 1.0;
        for (std::size_t t = 0; t < 100; ++t) {
            sum += g * shaped_reward(phi[t], phi[t + 1], p);
            g *= p.gamma;
        }
        worst = std::max(worst, std::abs(sum - (g * phi[100] - phi[0])));
    }
    rep.check(worst < kTelescopeTolerance, fmt("telescoping worst deviation %.2e over 100 trajectories", worst));
    rep.check(potential_reach(0.0, p) == 0.302, "phi_reach(0) == 0.302");
    rep.check(potential_contact(0.0, p) == 0.0604, "phi_contact(0) == 0.0604");

    const double below_t = std::nextafter(0.05, 0.0), below_r = std::nextafter(0.1, 0.0);
    rep.check(success_from_errors(below_t, below_r), "success just inside both thresholds");
    rep.check(!success_from_errors(0.05, 0.0), "translation 0.05 is not success");
    rep.check(!success_from_errors(0.0, 0.1), "rotation 0.1 is not success");
    rep.check(!success_from_errors(std::nextafter(0.05, 1.0), 0.0) && !success_from_errors(0.0, std::nextafter(0.1, 1.0)),
              "just outside either threshold is not success");
    ObjectState s;
    s.pose = Pose::from_translation(Vec3(0.05, 0.0, 0.0));
    rep.check(!success(s), "object exactly 0.05 m from goal is not success");
    s.pose = Pose::from_translation(Vec3(below_t, 0.0, 0.0));
    rep.check(success(s), "object just under 0.05 m from goal is success");
    return rep.ok();
}

bool stable_poses(Report& rep) {
    const auto cube = stable_orientations(make_box(Vec3(0.5, 0.5, 0.5)));
    rep.check(cube.size() == 6, fmt("unit cube classes: %zu", cube.size()));

    std::vector<TriMesh> shapes = make_primitive_set();
    shapes.push_back(make_box(Vec3(0.5, 0.5, 0.5)));
    shapes.push_back(make_prism({{0, 0}, {0.1, 0}, {0.1, 0.03}, {0.03, 0.03}, {0.03, 0.08}, {0, 0.08}}, 0.0, 0.02));
    const double margin_min = 0.002;
    std::size_t emitted = 0, replay_bad = 0, too_close = 0, episodes = 0;
    Rng rng(500);
    const Aabb ws(Vec3(-0.3, -0.2, 0.0), Vec3(0.3, 0.2, 0.3));
    for (const auto& mesh : shapes) {
        const auto poses = stable_orientations(mesh, margin_min);
        const Vec3 com = com_and_volume(mesh).com;
        for (const auto& s : poses) {
            ++emitted;
            const SupportAnalysis a = analyze_support(mesh, com, s.orientation);
            const TriMesh placed = mesh.transformed(Pose(Vec3(0, 0, s.rest_height), s.orientation));
            double zmin = INFINITY;
            for (const auto& v : placed.vertices()) zmin = std::min(zmin, v.z());
            const Vec3 c = Pose(Vec3(0, 0, s.rest_height), s.orientation).apply(com);
            const bool ok = std::abs(a.rest_height - s.rest_height) < 1e-12 && std::abs(a.margin - s.margin) < 1e-9 &&
                            s.margin >= margin_min && polygon_margin(s.support_polygon, c.head<2>()) >= margin_min - 1e-12 &&
                            std::abs(zmin) < 1e-12;
            replay_bad += !ok;
        }
        if (poses.empty()) continue;
        for (int i = 0; i < 2000; ++i) {
            const EpisodeSpec e = sample_episode(poses, ws, rng);
            ++episodes;
            too_close += (e.goal.translation() - e.initial.translation()).head<2>().norm() < kEpisodeSeparation;
        }
    }
    rep.check(replay_bad == 0, fmt("%zu emitted poses, %zu fail the support replay", emitted, replay_bad));
    rep.check(too_close == 0, fmt("%zu episodes, %zu closer than 0.1 m", episodes, too_close));
    return rep.ok();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

bool determinism(Report& rep) {
    const auto dir = testutil::scratch_dir("accept_determinism");
    save_obj(make_closed_gripper(), dir / "gripper.obj");
    std::ofstream(dir / "small.json") << R"({"encoder.d_model": 32, "encoder.ffn_dim": 64, "encoder.decoder_hidden": 16})";
    Rng rng(600);
    std::vector<PointCloud> frames;
    const TriMesh box = make_box(Vec3(0.06, 0.04, 0.03));
    for (int f = 0; f < 6; ++f) {
        PointCloud c = sample_surface_points(box, 2000, rng).transformed(Pose::from_translation(Vec3(0.003 * f, 0, 0)));
        for (auto& p : c.points) p += Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.001;
        frames.push_back(c);
    }
    write_pcseq(frames, dir / "seq.pcseq");

    auto run = [&](std::vector<std::string> args) {
        args.insert(args.begin(), "corn");
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return std::pair{code, out.str()};
    };
    auto same = [&](const char* what, const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const std::filesystem::path& fa, const std::filesystem::path& fb) {
        const auto ra = run(a), rb = run(b);
        const bool files = fa.empty() || slurp(fa) == slurp(fb);
        rep.check(ra.first == 0 && rb.first == 0 && ra.second == rb.second && files,
                  fmt("%s: exit %d/%d, identical stdout %d, identical file %d", what, ra.first, rb.first,
                      int(ra.second == rb.second), int(files)));
    };
    const std::string g = (dir / "gripper.obj").string();
    auto gen = [&](const std::string& out, const char* jobs) {
        return std::vector<std::string>{"gen-data", "--gripper", g, "--primitives", "--out", out, "--count", "200",
                                        "--seed", "17", "--jobs", jobs};
    };
    same("gen-data rerun", gen((dir / "a.corn").string(), "1"), gen((dir / "b.corn").string(), "1"), dir / "a.corn",
         dir / "b.corn");
    same("gen-data 1 vs 4 jobs", gen((dir / "a.corn").string(), "1"), gen((dir / "c.corn").string(), "4"),
         dir / "a.corn", dir / "c.corn");

    auto tr = [&](const std::string& out) {
        return std::vector<std::string>{"train", "--data", (dir / "a.corn").string(), "--out", out, "--epochs", "2",
                                        "--seed", "5", "--config", (dir / "small.json").string()};
    };
    same("train rerun", tr((dir / "a.ckpt").string()), tr((dir / "b.ckpt").string()), dir / "a.ckpt", dir / "b.ckpt");

    const std::vector<std::string> tk{"track", "--seq", (dir / "seq.pcseq").string(), "--init-pose", "0", "0", "0",
                                      "0", "0", "0", "1", "--seed", "3"};
    same("track rerun", tk, tk, {}, {});
    return rep.ok();
}

struct Criterion {
    const char* name;
    bool (*run)(Report&);
};

const Criterion kCriteria[] = {
    {"contact_balance", contact_balance}, {"label_recomputability", label_recomputability},
    {"geometry_oracles", geometry_oracles}, {"gradients", gradients},
    {"learning", learning},               {"icp_tracking", icp_tracking},
    {"reward_identities", reward_identities}, {"stable_poses", stable_poses},
    {"determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
    const std::string only = argc > 1 ? argv[1] : "";
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!only.empty() && only != c.name) continue;
        ++ran;
        std::cout << "[" << c.name << "]\n" << std::flush;
        Report rep;
        bool ok = false;
        try {
            ok = c.run(rep);
        } catch (const std::exception& e) {
            rep.check(false, std::string("exception: ") + e.what());
        }
        ok = ok && rep.ok();
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << "\n" << std::flush;
        failed += !ok;
    }
    if (ran == 0) {
        std::cerr << "unknown criterion: " << only << "\n";
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
