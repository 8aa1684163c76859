#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rce/core.hpp"

namespace rce {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vec x;
  double objective = 0.0;
};

// Dense two-phase simplex for: minimize cost.x subject to A x = b, x >= 0.
// Bland's rule keeps it cycle free; sizes here are a few dozen columns.
class SimplexSolver {
 public:
  explicit SimplexSolver(double tol = 1e-11) : tol_(tol) {}

  LpResult solve(const Mat& A, const Vec& b, const Vec& cost) const {
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (b.size() != m || cost.size() != n) throw InvalidInput("LP dimension mismatch");
    // Tableau columns: n structural, m artificial, then rhs.
    Mat T = Mat::Zero(m + 1, n + m + 1);
    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) {
      const double sgn = b(r) < 0 ? -1.0 : 1.0;
      T.row(r).head(n) = sgn * A.row(r);
      T(r, n + r) = 1.0;
      T(r, n + m) = sgn * b(r);
      basis[r] = n + r;
    }
    // Phase 1: minimize the sum of artificials.
    for (int r = 0; r < m; ++r) T.row(m) -= T.row(r);
    for (int r = 0; r < m; ++r) T(m, n + r) = 0.0;
    if (!iterate(T, basis, n + m)) return {LpStatus::unbounded, {}, 0.0};
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (-T(m, n + m) > 1e-9 * scale) return {LpStatus::infeasible, {}, 0.0};

    // Drive remaining artificials out of the basis; drop redundant rows.
    std::vector<int> keep;
    for (int r = 0; r < m; ++r) {
      if (basis[r] >= n) {
        int col = -1;
        for (int j = 0; j < n; ++j)
          if (std::abs(T(r, j)) > 1e-9) {
            col = j;
            break;
          }
        if (col < 0) continue;
        pivot(T, basis, r, col);
      }
      keep.push_back(r);
    }
    const int m2 = static_cast<int>(keep.size());
    Mat T2 = Mat::Zero(m2 + 1, n + 1);
    std::vector<int> basis2(m2);
    for (int k = 0; k < m2; ++k) {
      T2.row(k).head(n) = T.row(keep[k]).head(n);
      T2(k, n) = T(keep[k], n + m);
      basis2[k] = basis[keep[k]];
    }
    // Phase 2 objective row in terms of the current basis.
    T2.row(m2).head(n) = cost.transpose();
    for (int k = 0; k < m2; ++k) {
      const double cb = cost(basis2[k]);
      if (cb != 0.0) T2.row(m2) -= cb * T2.row(k);
    }
    if (!iterate(T2, basis2, n)) return {LpStatus::unbounded, {}, 0.0};
    Vec x = Vec::Zero(n);
    for (int k = 0; k < m2; ++k) x(basis2[k]) = T2(k, n);
    return {LpStatus::optimal, x, cost.dot(x)};
  }

 private:
  double tol_;

  static void pivot(Mat& T, std::vector<int>& basis, int r, int col) {
    T.row(r) /= T(r, col);
    for (int k = 0; k < T.rows(); ++k)
      if (k != r && T(k, col) != 0.0) T.row(k) -= T(k, col) * T.row(r);
    basis[r] = col;
  }

  // Returns false when unbounded. Columns >= ncols never enter.
  bool iterate(Mat& T, std::vector<int>& basis, int ncols) const {
    const int m = static_cast<int>(T.rows()) - 1;
    const int rhs = static_cast<int>(T.cols()) - 1;
    for (int guard = 0; guard < 100000; ++guard) {
      int col = -1;
      for (int j = 0; j < ncols; ++j)
        if (T(m, j) < -tol_) {
          col = j;
          break;
        }
      if (col < 0) return true;
      int row = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m; ++r) {
        if (T(r, col) > tol_) {
          const double ratio = T(r, rhs) / T(r, col);
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && row >= 0 && basis[r] < basis[row])) {
            best = ratio;
            row = r;
          }
        }
      }
      if (row < 0) return false;
      pivot(T, basis, row, col);
    }
    throw Error("simplex iteration limit reached");
  }
};

struct MaxCouplingSolution {
  Vec c;         // |c_i| <= 1
  double scale;  // largest s with A c = s d
};

// maximize s subject to A c = s d and |c_i| <= 1.
inline MaxCouplingSolution max_coupling_lp(const Mat& A, const Vec& d) {
  const int m = static_cast<int>(A.rows()), N = static_cast<int>(A.cols());
  if (d.size() != m) throw InvalidInput("direction size does not match matrix rows");
  if (d.cwiseAbs().maxCoeff() == 0.0) throw DegenerateGeometry("zero target pattern");
  // Variables: u = c + 1 in [0, 2], slack w with u + w = 2, and s >= 0.
  const int nv = 2 * N + 1;
  Mat Aeq = Mat::Zero(m + N, nv);
  Vec beq(m + N);
  Aeq.block(0, 0, m, N) = A;
  Aeq.block(0, 2 * N, m, 1) = -d;
  beq.head(m) = A * Vec::Ones(N);
  for (int i = 0; i < N; ++i) {
    Aeq(m + i, i) = 1.0;
    Aeq(m + i, N + i) = 1.0;
    beq(m + i) = 2.0;
  }
  Vec cost = Vec::Zero(nv);
  cost(2 * N) = -1.0;
  const auto res = SimplexSolver().solve(Aeq, beq, cost);
  if (res.status != LpStatus::optimal) throw NoSolution("pattern not reachable with |c_i| <= 1");
  Vec c = res.x.head(N).array() - 1.0;
  double s = res.x(2 * N);
  const double amax = A.cwiseAbs().maxCoeff();
  if (!(s > 1e-10 * amax)) throw NoSolution("pattern lies outside the range of the coupling matrix");

  // Polish: fix saturated components and re-solve the remaining equalities exactly.
  std::vector<int> free_idx, fixed_idx;
  for (int i = 0; i < N; ++i) (std::abs(c(i)) > 1.0 - 1e-8 ? fixed_idx : free_idx).push_back(i);
  Mat B(m, static_cast<int>(free_idx.size()) + 1);
  for (std::size_t k = 0; k < free_idx.size(); ++k) B.col(k) = A.col(free_idx[k]);
  B.col(B.cols() - 1) = -d;
  Vec rhs = Vec::Zero(m);
  for (int i : fixed_idx) rhs -= A.col(i) * (c(i) > 0 ? 1.0 : -1.0);
  Eigen::ColPivHouseholderQR<Mat> qr(B);
  if (qr.rank() == B.cols()) {
    const Vec y = qr.solve(rhs);
    const bool consistent = (B * y - rhs).norm() <= 1e-10 * (1.0 + rhs.norm());
    const bool in_box = free_idx.empty() || y.head(free_idx.size()).cwiseAbs().maxCoeff() <= 1.0 + 1e-9;
    if (consistent && in_box && y(y.size() - 1) > 0) {
      for (std::size_t k = 0; k < free_idx.size(); ++k) c(free_idx[k]) = y(k);
      for (int i : fixed_idx) c(i) = c(i) > 0 ? 1.0 : -1.0;
      s = y(y.size() - 1);
    }
  }
  return {c, s};
}

}  // namespace rce
