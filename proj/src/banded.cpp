#include "tcopt/banded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tcopt {

namespace {

void check_band(int row, int col, int n, int kd) {
  if (row < col) std::swap(row, col);
  if (col < 0 || row >= n || row - col > kd) {
    throw std::out_of_range("entry outside the stored band");
  }
}

}  // namespace

BandedSpdMatrix::BandedSpdMatrix(int size, int bandwidth)
    : n_(size), kd_(bandwidth), band_(Mat::Zero(bandwidth + 1, size)) {
  if (size < 1 || bandwidth < 0) {
    throw std::invalid_argument("invalid band matrix shape");
  }
}

double BandedSpdMatrix::entry(int row, int col) const {
  check_band(row, col, n_, kd_);
  if (row < col) std::swap(row, col);
  return band_(row - col, col);
}

void BandedSpdMatrix::add(int row, int col, double value) {
  check_band(row, col, n_, kd_);
  if (row < col) std::swap(row, col);
  band_(row - col, col) += value;
}

void BandedSpdMatrix::set(int row, int col, double value) {
  check_band(row, col, n_, kd_);
  if (row < col) std::swap(row, col);
  band_(row - col, col) = value;
}

void BandedSpdMatrix::factorize() {
  for (int j = 0; j < n_; ++j) {
    double diag = band_(0, j);
    const int kmin = std::max(0, j - kd_);
    for (int k = kmin; k < j; ++k) {
      const double ljk = band_(j - k, k);
      diag -= ljk * ljk;
    }
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw std::runtime_error("band matrix is not positive definite");
    }
    diag = std::sqrt(diag);
    band_(0, j) = diag;

    const int imax = std::min(n_ - 1, j + kd_);
    for (int i = j + 1; i <= imax; ++i) {
      double sum = band_(i - j, j);
      const int k0 = std::max({0, i - kd_, j - kd_});
      for (int k = k0; k < j; ++k) {
        sum -= band_(i - k, k) * band_(j - k, k);
      }
      band_(i - j, j) = sum / diag;
    }
  }
  factored_ = true;
}

Vec BandedSpdMatrix::solve(const Vec& rhs) const {
  if (!factored_) {
    throw std::runtime_error("solve called before factorize");
  }
  if (rhs.size() != n_) {
    throw std::invalid_argument("rhs size does not match matrix");
  }
  Vec y(n_);
  for (int i = 0; i < n_; ++i) {
    double sum = rhs[i];
    const int k0 = std::max(0, i - kd_);
    for (int k = k0; k < i; ++k) {
      sum -= band_(i - k, k) * y[k];
    }
    y[i] = sum / band_(0, i);
  }
  Vec x(n_);
  for (int i = n_ - 1; i >= 0; --i) {
    double sum = y[i];
    const int kmax = std::min(n_ - 1, i + kd_);
    for (int k = i + 1; k <= kmax; ++k) {
      sum -= band_(k - i, i) * x[k];
    }
    x[i] = sum / band_(0, i);
  }
  return x;
}

}  // namespace tcopt
