#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/oracles.hpp"
#include "tcopt/kinematics.hpp"

using namespace tcopt;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<int>(values.size()));
  int i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

KinematicChain two_link() {
  return KinematicChain(PlanarChain{{1.0, 1.0}}, vec({kPi, kPi}));
}

KinematicChain random_spatial(std::mt19937& rng, int m) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  SpatialDHChain chain;
  for (int j = 0; j < m; ++j) {
    DHRow row;
    row.a = 0.5 * std::abs(unit(rng));
    row.alpha = unit(rng) * kPi;
    row.d = 0.4 * unit(rng);
    row.theta_offset = unit(rng);
    chain.rows.push_back(row);
  }
  return KinematicChain(std::move(chain), Vec::Constant(m, kPi));
}

// Independent planar reference: sum of per-link vectors at cumulative angles.
Eigen::Vector3d planar_reference(const std::vector<double>& lengths,
                                 const Vec& q) {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  double angle = 0.0;
  for (size_t j = 0; j < lengths.size(); ++j) {
    angle += q[static_cast<int>(j)];
    p.x() += lengths[j] * std::cos(angle);
    p.y() += lengths[j] * std::sin(angle);
  }
  return p;
}

}  // namespace

TEST_CASE("planar forward kinematics matches the per-link sum") {
  const KinematicChain chain = two_link();

  const Pose extended = forward_kinematics(chain, vec({0.0, 0.0}));
  CHECK(extended.position.isApprox(Eigen::Vector3d(2.0, 0.0, 0.0), 1e-14));

  const Vec elbow = vec({kPi / 2, -kPi / 2});
  const Pose bent = forward_kinematics(chain, elbow);
  const Eigen::Vector3d expected = planar_reference({1.0, 1.0}, elbow);
  CHECK((bent.position - expected).norm() < 1e-14);
  CHECK(bent.position.x() == doctest::Approx(1.0));
  CHECK(bent.position.y() == doctest::Approx(1.0));

  CHECK_THROWS_AS(forward_kinematics(chain, vec({0.0})), std::invalid_argument);
}

TEST_CASE("spatial pose at zero equals the product of zero-angle DH rows") {
  std::mt19937 rng(7);
  const KinematicChain chain = random_spatial(rng, 4);
  const Pose pose = forward_kinematics(chain, Vec::Zero(4));

  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  for (const DHRow& row : chain.spatial().rows) {
    const double c = std::cos(row.theta_offset);
    const double s = std::sin(row.theta_offset);
    const double ca = std::cos(row.alpha);
    const double sa = std::sin(row.alpha);
    Eigen::Matrix4d link;
    link << c, -s * ca, s * sa, row.a * c,
        s, c * ca, -c * sa, row.a * s,
        0, sa, ca, row.d,
        0, 0, 0, 1;
    T = T * link;
  }
  CHECK((pose.position - T.topRightCorner<3, 1>()).norm() < 1e-14);
  CHECK((pose.rotation - T.topLeftCorner<3, 3>()).norm() < 1e-14);
}

TEST_CASE("generalized kinematics agrees with angle evaluation on the circle") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const KinematicChain planar =
      KinematicChain(PlanarChain{{1.0, 0.7, 1.3}}, Vec::Constant(3, kPi));
  const KinematicChain spatial = random_spatial(rng, 7);

  for (const KinematicChain* chain : {&planar, &spatial}) {
    for (int sample = 0; sample < 100; ++sample) {
      Vec q(chain->joints());
      for (int j = 0; j < q.size(); ++j) q[j] = unit(rng) * kPi;
      const Pose direct = forward_kinematics(*chain, q);
      const Pose lifted = generalized_forward_kinematics(
          *chain, q.array().cos(), q.array().sin());
      CHECK((direct.position - lifted.position).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK((direct.rotation - lifted.rotation).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("generalized planar evaluation matches the multilinear expansion") {
  const KinematicChain chain = two_link();
  const Vec v = vec({0.5, 1.0});
  const Vec w = vec({0.0, 0.0});
  const Pose pose = generalized_forward_kinematics(chain, v, w);
  // x = l1 v1 + l2 (v1 v2 - w1 w2), y = l1 w1 + l2 (w1 v2 + v1 w2)
  CHECK(pose.position.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pose.position.y() == doctest::Approx(0.0).epsilon(1e-12));

  const Pose at_rest = generalized_forward_kinematics(chain, vec({1.0, 1.0}),
                                                      vec({0.0, 0.0}));
  const Pose zero = forward_kinematics(chain, vec({0.0, 0.0}));
  CHECK((at_rest.position - zero.position).norm() < 1e-14);

  CHECK_THROWS_AS(generalized_forward_kinematics(chain, vec({1.0}), vec({0.0})),
                  std::invalid_argument);
}

TEST_CASE("angle-evaluated rotations stay orthonormal") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Pose base;
  base.rotation = rotation_xyz(0.3, -0.2, 0.9);
  base.position = Eigen::Vector3d(0.2, -0.4, 0.1);
  KinematicChain chain(random_spatial(rng, 6).spatial(), Vec::Constant(6, kPi),
                       base);
  for (int sample = 0; sample < 50; ++sample) {
    Vec q(6);
    for (int j = 0; j < 6; ++j) q[j] = unit(rng) * kPi;
    const Eigen::Matrix3d r = forward_kinematics(chain, q).rotation;
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity())
              .lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("generalized evaluation is affine in each slack pair") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const KinematicChain chain = random_spatial(rng, 5);

  for (int sample = 0; sample < 20; ++sample) {
    Vec v(5), w(5);
    for (int j = 0; j < 5; ++j) {
      v[j] = unit(rng);
      w[j] = unit(rng);
    }
    const int j = sample % 5;
    auto eval = [&](double vj, double wj) {
      Vec pv = v, pw = w;
      pv[j] = vj;
      pw[j] = wj;
      const Pose pose = generalized_forward_kinematics(chain, pv, pw);
      Eigen::Matrix<double, 12, 1> flat;
      flat.head<3>() = pose.position;
      flat.tail<9>() =
          Eigen::Map<const Eigen::Matrix<double, 9, 1>>(pose.rotation.data());
      return flat;
    };
    const auto f1 = eval(1.0, 0.0);
    const auto f2 = eval(-1.0, 0.0);
    const auto f3 = eval(0.0, 1.0);
    const auto g = 0.5 * (f1 - f2);
    const auto p = 0.5 * (f1 + f2);
    const auto h = f3 - p;
    const double vj = unit(rng);
    const double wj = unit(rng);
    const auto predicted = vj * g + wj * h + p;
    CHECK((predicted - eval(vj, wj)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("cumulative coupling matrices") {
  const KinematicChain planar3 =
      KinematicChain(PlanarChain{{1.0, 1.0, 1.0}}, Vec::Constant(3, kPi));
  Mat expected(3, 3);
  expected << 1, 0, 0, 1, 1, 0, 1, 1, 1;
  CHECK(cumulative_coupling_matrix(planar3) == expected);

  std::mt19937 rng(5);
  const KinematicChain spatial7 = random_spatial(rng, 7);
  CHECK(cumulative_coupling_matrix(spatial7).isIdentity(0.0));

  const KinematicChain single =
      KinematicChain(PlanarChain{{1.0}}, Vec::Constant(1, kPi));
  CHECK(cumulative_coupling_matrix(single) == Mat::Ones(1, 1));
}

TEST_CASE("chain validation rejects bad models") {
  CHECK_THROWS_AS(KinematicChain(PlanarChain{{1.0, -1.0}}, vec({kPi, kPi})),
                  std::invalid_argument);
  CHECK_THROWS_AS(KinematicChain(PlanarChain{{1.0}}, vec({0.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(KinematicChain(PlanarChain{{1.0}}, vec({kPi, kPi})),
                  std::invalid_argument);
}
