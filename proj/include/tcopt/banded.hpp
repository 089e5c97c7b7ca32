#pragma once

#include "tcopt/types.hpp"

namespace tcopt {

/// Symmetric positive definite band matrix with in-place Cholesky.
///
/// Lower band storage: band(k, j) holds entry (j + k, j) for 0 <= k <= kd.
class BandedSpdMatrix {
 public:
  BandedSpdMatrix(int size, int bandwidth);

  int size() const { return n_; }
  int bandwidth() const { return kd_; }

  double entry(int row, int col) const;
  void add(int row, int col, double value);
  void set(int row, int col, double value);

  /// In-place LL^T factorization. Throws std::runtime_error when the matrix
  /// is not positive definite.
  void factorize();

  /// Solves A x = rhs. Requires factorize() first.
  Vec solve(const Vec& rhs) const;

 private:
  int n_;
  int kd_;
  Mat band_;  // (kd + 1) x n
  bool factored_ = false;
};

}  // namespace tcopt
