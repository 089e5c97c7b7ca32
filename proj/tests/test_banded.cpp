#include <doctest.h>

#include <random>

#include "tcopt/banded.hpp"

using namespace tcopt;

namespace {

// Random SPD matrix with the requested bandwidth, via a diagonally
// dominated banded Gram construction.
Mat random_banded_spd(std::mt19937& rng, int n, int kd) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Mat dense = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - kd); j <= i; ++j) {
      const double value = unit(rng);
      dense(i, j) = value;
      dense(j, i) = value;
    }
    dense(i, i) += kd + 2.0;
  }
  return dense;
}

}  // namespace

TEST_CASE("banded Cholesky matches a dense solve") {
  std::mt19937 rng(19);
  for (const auto [n, kd] : {std::pair{12, 1}, {30, 4}, {60, 9}, {17, 16}}) {
    const Mat dense = random_banded_spd(rng, n, kd);
    BandedSpdMatrix banded(n, kd);
    for (int i = 0; i < n; ++i) {
      for (int j = std::max(0, i - kd); j <= i; ++j) {
        banded.set(i, j, dense(i, j));
      }
    }
    banded.factorize();
    const Vec rhs = Vec::Random(n);
    const Vec x = banded.solve(rhs);
    const Vec reference = dense.ldlt().solve(rhs);
    CHECK((x - reference).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((dense * x - rhs).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("banded factorization rejects indefinite matrices") {
  BandedSpdMatrix banded(3, 1);
  banded.set(0, 0, 1.0);
  banded.set(1, 1, -2.0);
  banded.set(2, 2, 1.0);
  CHECK_THROWS_AS(banded.factorize(), std::runtime_error);

  BandedSpdMatrix unfactored(3, 1);
  CHECK_THROWS_AS(unfactored.solve(Vec::Zero(3)), std::runtime_error);
  CHECK_THROWS_AS(unfactored.add(2, 0, 1.0), std::out_of_range);
}
