#ifndef PANN_TESTS_ORACLES_HPP
#define PANN_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests. None of these
// call into the library code they are used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Average precision by direct counting at every distinct threshold:
/// predicted positive <=> score >= threshold. O(n * distinct).
inline double average_precision(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double total_pos = 0;
  for (auto l : labels) total_pos += l;
  double ap = 0.0, prev_recall = 0.0;
  for (double th : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= th) (labels[i] ? tp : fp) += 1;
    }
    const double recall = tp / total_pos;
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

/// 2x2 max by scanning every pixel and updating its block.
inline std::vector<float> block_max(const std::vector<float>& plane, std::size_t side) {
  const std::size_t half = side / 2;
  std::vector<float> out(half * half, -std::numeric_limits<float>::infinity());
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      float& cell = out[(r / 2) * half + c / 2];
      cell = std::max(cell, plane[r * side + c]);
    }
  }
  return out;
}

/// Closed-form state of one edge under constant voltage v from lambda0.
inline double lambda_closed_form(double lambda0, double v, double t, double v_set, double v_reset, double lambda_max) {
  const double mag = std::abs(v);
  if (mag > v_set) {
    const double dir = v > 0 ? 1.0 : -1.0;
    return std::clamp(lambda0 + dir * (mag - v_set) * t, -lambda_max, lambda_max);
  }
  if (mag >= v_reset) return lambda0;
  const double remaining = std::max(0.0, std::abs(lambda0) - (v_reset - mag) * t);
  return lambda0 > 0 ? remaining : (lambda0 < 0 ? -remaining : 0.0);
}

struct DenseEdge {
  std::size_t u, v;
  double g;
};

/// Node voltages from a dense MNA system: Dirichlet rows for fixed nodes,
/// KCL rows elsewhere, and v = 0 for nodes that cannot reach a fixed node.
inline std::vector<double> dense_mna(std::size_t n, const std::vector<DenseEdge>& edges,
                                     const std::vector<std::pair<std::size_t, double>>& fixed) {
  // components by repeated relaxation (small graphs only)
  std::vector<int> reach(n, 0);
  for (const auto& [node, volt] : fixed) reach[node] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : edges) {
      if (reach[e.u] != reach[e.v]) {
        reach[e.u] = reach[e.v] = 1;
        changed = true;
      }
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
    a(u, u) += e.g;
    a(v, v) += e.g;
    a(u, v) -= e.g;
    a(v, u) -= e.g;
  }
  for (const auto& [node, volt] : fixed) {
    const auto i = static_cast<Eigen::Index>(node);
    a.row(i).setZero();
    a(i, i) = 1.0;
    b(i) = volt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!reach[i]) {
      const auto k = static_cast<Eigen::Index>(i);
      a.row(k).setZero();
      a(k, k) = 1.0;
      b(k) = 0.0;
    }
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  return {x.data(), x.data() + x.size()};
}

}  // namespace oracle

#endif  // PANN_TESTS_ORACLES_HPP
