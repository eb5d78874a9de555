#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/SVD>
#include <json.hpp>

#include "corn/control.hpp"
#include "corn/error.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace corn;

namespace {

constexpr double kPi = std::numbers::pi;

// Two unit links in the xy plane; joints 3-7 sit at the tip and only spin it.
SerialChain planar_arm() {
    SerialChain c;
    c.joints[1].origin = Pose::from_translation(Vec3(1, 0, 0));
    c.joints[2].origin = Pose::from_translation(Vec3(1, 0, 0));
    c.validate();
    return c;
}

JointVector random_q(Rng& rng) {
    JointVector q;
    for (int i = 0; i < kChainJoints; ++i) q[i] = rng.uniform(-1.5, 1.5);
    return q;
}

nlohmann::json chain_json(const SerialChain& c) {
    nlohmann::json doc;
    for (const auto& j : c.joints) {
        doc["joints"].push_back({{"origin", j.origin.to_array()}, {"axis", {j.axis.x(), j.axis.y(), j.axis.z()}}});
    }
    doc["ee_offset"] = c.ee_offset.to_array();
    return doc;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("forward kinematics on analytic chains") {
    const SerialChain planar = planar_arm();
    CHECK((fk(planar, JointVector::Zero()).translation() - Vec3(2, 0, 0)).norm() < 1e-15);
    JointVector q = JointVector::Zero();
    q[0] = kPi / 2;
    CHECK((fk(planar, q).translation() - Vec3(0, 2, 0)).norm() < 1e-12);
    q[1] = kPi / 2;
    CHECK((fk(planar, q).translation() - Vec3(-1, 1, 0)).norm() < 1e-12);

    SerialChain single;
    single.ee_offset = Pose::from_translation(Vec3(1, 0, 0));
    JointVector s = JointVector::Zero();
    s[0] = kPi / 2;
    const Pose p = fk(single, s);
    CHECK((p.translation() - Vec3(0, 1, 0)).norm() < 1e-12);
    CHECK(p.rotation().angle_to(Rotation::from_axis_angle(Vec3::UnitZ(), kPi / 2)) < 1e-12);

    // Home pose is the product of the fixed transforms.
    const SerialChain franka = SerialChain::franka();
    Pose home;
    for (const auto& j : franka.joints) home = home * j.origin;
    home = home * franka.ee_offset;
    const Pose got = fk(franka, JointVector::Zero());
    CHECK((got.translation() - home.translation()).norm() < 1e-12);
    CHECK(got.rotation().angle_to(home.rotation()) < 1e-12);
    CHECK((got.translation() - Vec3(0.088, 0.0, 0.8226)).norm() < 1e-9);
}

TEST_CASE("jacobian matches analytic planar values") {
    const Jacobian j = jacobian(planar_arm(), JointVector::Zero());
    Jacobian ref = Jacobian::Zero();
    ref.col(0) << 0, 2, 0, 0, 0, 1;
    ref.col(1) << 0, 1, 0, 0, 0, 1;
    for (int i = 2; i < 7; ++i) ref.col(i) << 0, 0, 0, 0, 0, 1;
    CHECK((j - ref).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("jacobian columns match central differences") {
    Rng rng(1);
    for (const SerialChain& chain : {SerialChain::franka(), planar_arm()}) {
        for (int trial = 0; trial < 50; ++trial) {
            const JointVector q = random_q(rng);
            const Jacobian a = jacobian(chain, q);
            const Jacobian n = testutil::numeric_jacobian(chain, q);
            CHECK((a - n).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("damped least squares step") {
    const SerialChain chain = SerialChain::franka();
    Rng rng(2);
    const JointVector q = random_q(rng);
    const Jacobian j = jacobian(chain, q);
    CHECK(dls_step(j, Twist::Zero(), 0.05).isZero(0.0));

    // Pseudoinverse oracle from the SVD.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(j), Eigen::ComputeThinU | Eigen::ComputeThinV);
    REQUIRE(svd.singularValues().minCoeff() > 1e-2);
    const Eigen::VectorXd inv = svd.singularValues().cwiseInverse();
    const Eigen::MatrixXd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    for (int trial = 0; trial < 20; ++trial) {
        Twist e;
        for (int k = 0; k < 6; ++k) e[k] = rng.uniform(-0.1, 0.1);
        const JointVector dq = dls_step(j, e, 1e-9);
        CHECK((dq - pinv * e).cwiseAbs().maxCoeff() < 1e-6);
    }

    CHECK(code_of([&] { dls_step(j, Twist::Ones(), 0.0); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([&] { dls_step(Jacobian::Zero(), Twist::Ones(), 1e-200); }) == ErrorCode::SingularSolve);
}

TEST_CASE("more damping never lengthens the step") {
    Rng rng(3);
    const SerialChain chain = SerialChain::franka();
    for (int trial = 0; trial < 30; ++trial) {
        const Jacobian j = jacobian(chain, random_q(rng));
        Twist e;
        for (int k = 0; k < 6; ++k) e[k] = rng.uniform(-1.0, 1.0);
        double prev = INFINITY;
        for (double lambda = 1e-4; lambda < 1e4; lambda *= 1.7) {
            const double n = dls_step(j, e, lambda).norm();
            CHECK(n <= prev * (1.0 + 1e-12));
            prev = n;
        }
        CHECK(prev < 1e-6);
    }
}

TEST_CASE("pose error and residual application") {
    Rng rng(4);
    const Pose a = testutil::random_pose(rng);
    CHECK(pose_error(a, a).isZero(1e-15));
    const Pose r(Vec3(0.01, -0.02, 0.005), Rotation::from_rotation_vector(Vec3(0.02, 0.0, -0.01)));
    const Pose t = apply_residual(a, r);
    const Twist e = pose_error(t, a);
    CHECK((e.head<3>() - r.translation()).norm() < 1e-15);
    CHECK((e.tail<3>() - Vec3(0.02, 0.0, -0.01)).norm() < 1e-12);
    CHECK(apply_residual(a, Pose::identity()).rotation().angle_to(a.rotation()) < 1e-12);
}

TEST_CASE("inverse kinematics") {
    const SerialChain chain = SerialChain::franka();
    Rng rng(5);

    SUBCASE("identity residual keeps q") {
        const JointVector q = random_q(rng);
        const IkResult r = ik(chain, q, Pose::identity());
        CHECK(r.status == IkStatus::Converged);
        CHECK(r.q == q);
        CHECK(r.iterations == 0);
    }

    SUBCASE("one centimetre residual converges") {
        for (int trial = 0; trial < 20; ++trial) {
            JointVector q;
            q << 0.1, -0.4, 0.2, -2.0, 0.1, 1.6, 0.7;
            for (int i = 0; i < 7; ++i) q[i] += rng.uniform(-0.3, 0.3);
            Vec3 d = testutil::random_vec(rng);
            d = d.normalized() * 0.01;
            const Pose residual = Pose::from_translation(d);
            const Pose target = apply_residual(fk(chain, q), residual);
            const IkResult r = ik(chain, q, residual);
            CHECK(r.status == IkStatus::Converged);
            CHECK(r.iterations <= 32);
            const Pose reached = fk(chain, r.q);
            CHECK((reached.translation() - target.translation()).norm() < 1e-4);
            CHECK(reached.rotation().angle_to(target.rotation()) < 1e-3);
        }
    }

    SUBCASE("unreachable target flags no progress and never worsens") {
        JointVector q;
        q << 0.0, -0.5, 0.0, -2.0, 0.0, 1.5, 0.8;
        const Pose residual = Pose::from_translation(Vec3(10.0, 0.0, 0.0));
        const Pose target = apply_residual(fk(chain, q), residual);
        const IkResult r = ik(chain, q, residual);
        CHECK(r.no_progress());
        CHECK(r.status != IkStatus::Converged);
        CHECK(r.q.allFinite());
        const double before = (fk(chain, q).translation() - target.translation()).norm();
        const double after = (fk(chain, r.q).translation() - target.translation()).norm();
        CHECK(after <= before);
        CHECK(r.translation_error == doctest::Approx(after));
    }

    SUBCASE("invalid configuration") {
        IkConfig cfg;
        cfg.damping = -1.0;
        CHECK(code_of([&] { ik(chain, JointVector::Zero(), Pose::identity(), cfg); }) == ErrorCode::InvalidConfig);
        JointVector bad = JointVector::Zero();
        bad[2] = NAN;
        CHECK(code_of([&] { ik(chain, bad, Pose::identity()); }) == ErrorCode::NonFiniteInput);
    }
}

TEST_CASE("impedance torque") {
    Rng rng(6);
    const JointVector q = random_q(rng), qt = random_q(rng), v = random_q(rng);
    const JointVector ones = JointVector::Ones();
    CHECK(torque(ones, ones, qt, q, JointVector::Zero()) == qt - q);

    const JointVector kp = JointVector::Constant(4.0), rho = JointVector::Constant(0.5);
    CHECK(torque(kp, rho, q, q, v) == -v);  // kd = 0.5 * sqrt(4) = 1 exactly

    JointVector kp_r, rho_r;
    for (int i = 0; i < 7; ++i) {
        kp_r[i] = rng.uniform(0.5, 50.0);
        rho_r[i] = rng.uniform(0.1, 2.0);
    }
    const JointVector expect = kp_r.cwiseProduct(qt - q) - (rho_r.array() * kp_r.array().sqrt()).matrix().cwiseProduct(v);
    CHECK((torque(kp_r, rho_r, qt, q, v) - expect).cwiseAbs().maxCoeff() < 1e-12);

    // Linear in the position error at fixed gains.
    const JointVector e1 = random_q(rng), e2 = random_q(rng);
    const JointVector z = JointVector::Zero();
    const JointVector lhs = torque(kp_r, rho_r, 2.0 * e1 + 3.0 * e2, z, z);
    const JointVector rhs = 2.0 * torque(kp_r, rho_r, e1, z, z) + 3.0 * torque(kp_r, rho_r, e2, z, z);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

    JointVector bad = ones;
    bad[4] = 0.0;
    CHECK(code_of([&] { torque(bad, ones, qt, q, v); }) == ErrorCode::NonPositiveGains);
    CHECK(code_of([&] { torque(ones, -ones, qt, q, v); }) == ErrorCode::NonPositiveGains);
}

TEST_CASE("chain definition files") {
    const SerialChain franka = SerialChain::franka();
    const auto dir = testutil::scratch_dir("chain");
    const auto path = dir / "franka.json";
    std::ofstream(path) << chain_json(franka).dump(2);
    const SerialChain loaded = load_chain(path);
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const JointVector q = random_q(rng);
        const Pose a = fk(franka, q), b = fk(loaded, q);
        CHECK((a.translation() - b.translation()).norm() < 1e-12);
        CHECK(a.rotation().angle_to(b.rotation()) < 1e-9);
    }

    // Axes are normalized on load.
    auto doc = chain_json(franka);
    doc["joints"][3]["axis"] = {0.0, 0.0, 5.0};
    CHECK(parse_chain(doc.dump()).joints[3].axis == Vec3::UnitZ());

    doc["joints"][3]["axis"] = {0.0, 0.0, 0.0};
    CHECK(code_of([&] { parse_chain(doc.dump()); }) == ErrorCode::DegenerateInput);
    CHECK(code_of([&] { parse_chain("{not json"); }) == ErrorCode::Parse);
    auto short_doc = chain_json(franka);
    short_doc["joints"].erase(0);
    CHECK(code_of([&] { parse_chain(short_doc.dump()); }) == ErrorCode::Parse);
    CHECK(code_of([&] { load_chain(dir / "missing.json"); }) == ErrorCode::Io);
}
