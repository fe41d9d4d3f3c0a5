#ifndef PANN_DYNAMICS_HPP
#define PANN_DYNAMICS_HPP

// Memristive junction dynamics and the Kirchhoff solve that drives them.
//
// Every edge carries a state lambda (volt-seconds). Conductance grows
// linearly with |lambda| from g_off to g_on. Each substep solves the node
// voltages with the driven electrodes held fixed and then integrates the
// equation of state with forward Euler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "pann/binary_io.hpp"
#include "pann/common.hpp"
#include "pann/netgen.hpp"
#include "pann/supernodal.hpp"

namespace pann {

struct DynamicsConfig {
  double v_set = 1e-2;
  double v_reset = 5e-3;
  double lambda_max = 1.5e-2;
  double dt = 1e-3;
  std::uint32_t steps_per_frame = 10;
  double g_off = 7.77e-8;
  double g_on = 7.75e-5;
  double solver_tolerance = 1e-10;

  void validate() const {
    if (!(v_reset > 0.0 && v_reset < v_set)) throw ConfigError("dynamics: require 0 < v_reset < v_set");
    if (!(lambda_max > 0.0)) throw ConfigError("dynamics: lambda_max must be positive");
    if (!(dt > 0.0)) throw ConfigError("dynamics: dt must be positive");
    if (steps_per_frame == 0) throw ConfigError("dynamics: steps_per_frame must be positive");
    if (!(g_off > 0.0 && g_on > g_off)) throw ConfigError("dynamics: require g_on > g_off > 0");
    if (!(solver_tolerance > 0.0)) throw ConfigError("dynamics: solver_tolerance must be positive");
  }
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (achieved relative residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct NetworkState {
  std::vector<double> lambda;        // per edge
  std::vector<double> node_voltage;  // per node
  double time = 0.0;

  static NetworkState zero(const NetworkGraph& g) {
    return {std::vector<double>(g.edge_count(), 0.0), std::vector<double>(g.node_count(), 0.0), 0.0};
  }
};

/// Voltages applied to the electrode grid for one frame, in grid order.
struct InputFrame {
  std::vector<double> voltages;
  std::vector<std::uint8_t> driven_mask;  // empty: every electrode driven

  static constexpr double max_abs_voltage = 10.0;

  bool driven(std::size_t k) const { return driven_mask.empty() || driven_mask[k] != 0; }

  void validate(std::size_t n_electrodes) const {
    if (voltages.size() != n_electrodes) throw ConfigError("input frame: voltage count does not match electrode count");
    if (!driven_mask.empty() && driven_mask.size() != voltages.size())
      throw ConfigError("input frame: driven mask length does not match voltages");
    for (double v : voltages) {
      if (!std::isfinite(v) || std::abs(v) > max_abs_voltage)
        throw ConfigError("input frame: applied voltage outside +-10 V");
    }
  }
};

inline double edge_conductance(double lambda, const DynamicsConfig& c) {
  const double frac = std::min(std::abs(lambda), c.lambda_max) / c.lambda_max;
  return c.g_off + (c.g_on - c.g_off) * frac;
}

constexpr double sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// Rate of the equation of state for one edge, including the saturation hold.
inline double lambda_rate(double lambda, double v, const DynamicsConfig& c) {
  const double mag = std::abs(v);
  double rate = 0.0;
  if (mag > c.v_set) {
    rate = (mag - c.v_set) * sgn(v);
  } else if (mag >= c.v_reset) {
    rate = 0.0;
  } else {
    rate = (mag - c.v_reset) * sgn(lambda);
  }
  if (std::abs(lambda) >= c.lambda_max && rate * sgn(lambda) > 0.0) rate = 0.0;
  return rate;
}

/// One forward-Euler update of a single edge state.
inline double integrate_lambda(double lambda, double v, const DynamicsConfig& c) {
  const double rate = lambda_rate(lambda, v, c);
  double next = lambda + c.dt * rate;
  // decay stops at zero instead of overshooting
  if (std::abs(v) < c.v_reset && lambda != 0.0 && sgn(next) != sgn(lambda)) next = 0.0;
  return std::clamp(next, -c.lambda_max, c.lambda_max);
}

/// Solves current conservation for a fixed graph. The sparsity pattern and
/// component structure are analysed once per driven-electrode set; only the
/// numeric factorisation is repeated as conductances change.
class KirchhoffSolver {
 public:
  explicit KirchhoffSolver(const NetworkGraph& graph, double tolerance = 1e-10)
      : graph_(&graph), tolerance_(tolerance) {
    const std::size_t n = graph.node_count();
    adjacency_start_.assign(n + 1, 0);
    for (const auto& e : graph.edges) {
      ++adjacency_start_[e.u + 1];
      ++adjacency_start_[e.v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) adjacency_start_[i + 1] += adjacency_start_[i];
    adjacency_.resize(adjacency_start_[n]);
    std::vector<std::size_t> fill(adjacency_start_.begin(), adjacency_start_.end() - 1);
    for (std::uint32_t k = 0; k < graph.edges.size(); ++k) {
      adjacency_[fill[graph.edges[k].u]++] = k;
      adjacency_[fill[graph.edges[k].v]++] = k;
    }
    electrode_of_node_.assign(n, -1);
    for (std::size_t k = 0; k < graph.input_index.size(); ++k)
      electrode_of_node_[graph.input_index[k]] = static_cast<std::int32_t>(k);
  }

  const NetworkGraph& graph() const { return *graph_; }

  /// Node voltages for the given edge conductances and applied inputs.
  std::vector<double> solve(std::span<const double> conductances, const InputFrame& frame) {
    std::vector<double> v(graph_->node_count(), 0.0);
    solve_into(conductances, frame, v);
    return v;
  }

  void solve_into(std::span<const double> conductances, const InputFrame& frame, std::vector<double>& v) {
    const NetworkGraph& g = *graph_;
    if (conductances.size() != g.edge_count()) throw ConfigError("kirchhoff: conductance count does not match edges");
    frame.validate(g.input_index.size());
    prepare(frame);

    v.assign(g.node_count(), 0.0);
    for (std::size_t k = 0; k < g.input_index.size(); ++k) {
      if (frame.driven(k)) v[g.input_index[k]] = frame.voltages[k];
    }
    const auto m = static_cast<Eigen::Index>(unknowns_.size());
    if (m == 0) return;

    // numeric values follow the fixed triplet layout built in prepare()
    auto* values = matrix_.valuePtr();
    std::fill(values, values + matrix_.nonZeros(), 0.0);
    rhs_.setZero(m);
    for (std::uint32_t k = 0; k < g.edges.size(); ++k) {
      const double gk = conductances[k];
      const auto& slots = edge_slots_[k];
      if (slots.uu >= 0) values[slots.uu] += gk;
      if (slots.vv >= 0) values[slots.vv] += gk;
      if (slots.uv >= 0) values[slots.uv] -= gk;
      const Edge& e = g.edges[k];
      const std::int32_t ru = row_of_node_[e.u];
      const std::int32_t rv = row_of_node_[e.v];
      if (ru >= 0 && rv < 0) rhs_[ru] += gk * v[e.v];
      if (rv >= 0 && ru < 0) rhs_[rv] += gk * v[e.u];
    }

    if (!analysed_) {
      chol_.analyze(matrix_);
      analysed_ = true;
    }
    if (!chol_.factorize(matrix_))
      throw SolverError("kirchhoff: factorisation failed", std::numeric_limits<double>::infinity());
    Eigen::VectorXd x = chol_.solve(rhs_);

    const double bnorm = rhs_.norm();
    double rel = bnorm > 0.0 ? (rhs_ - upper_times(x)).norm() / bnorm : 0.0;
    for (int refine = 0; rel > tolerance_ && refine < 3; ++refine) {
      x += chol_.solve(rhs_ - upper_times(x));
      rel = (rhs_ - upper_times(x)).norm() / bnorm;
    }
    last_residual_ = rel;
    if (!(rel <= tolerance_)) throw SolverError("kirchhoff: residual target not reached", rel);
    for (Eigen::Index i = 0; i < m; ++i) v[unknowns_[i]] = x[i];
  }

  double last_residual() const { return last_residual_; }

  /// Net current leaving each node for the given voltages (zero at solved
  /// undriven nodes).
  std::vector<double> net_currents(std::span<const double> conductances, std::span<const double> v) const {
    std::vector<double> out(graph_->node_count(), 0.0);
    for (std::size_t k = 0; k < graph_->edges.size(); ++k) {
      const Edge& e = graph_->edges[k];
      const double i = conductances[k] * (v[e.u] - v[e.v]);
      out[e.u] += i;
      out[e.v] -= i;
    }
    return out;
  }

  /// True for nodes whose connected component contains a driven electrode.
  std::vector<bool> reachable_from_driven(const InputFrame& frame) const {
    const NetworkGraph& g = *graph_;
    std::vector<bool> seen(g.node_count(), false);
    std::vector<std::uint32_t> stack;
    for (std::size_t k = 0; k < g.input_index.size(); ++k) {
      if (!frame.driven(k)) continue;
      const auto s = g.input_index[k];
      if (seen[s]) continue;
      seen[s] = true;
      stack.push_back(s);
      while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (std::size_t p = adjacency_start_[u]; p < adjacency_start_[u + 1]; ++p) {
          const Edge& e = g.edges[adjacency_[p]];
          const auto w = e.u == u ? e.v : e.u;
          if (!seen[w]) {
            seen[w] = true;
            stack.push_back(w);
          }
        }
      }
    }
    return seen;
  }

 private:
  struct EdgeSlots {
    std::ptrdiff_t uu = -1, vv = -1, uv = -1;
  };

  void prepare(const InputFrame& frame) {
    std::vector<std::uint8_t> driven(graph_->input_index.size());
    for (std::size_t k = 0; k < driven.size(); ++k) driven[k] = frame.driven(k) ? 1 : 0;
    if (prepared_ && driven == prepared_mask_) return;
    prepared_mask_ = driven;
    analysed_ = false;


    const NetworkGraph& g = *graph_;
    const auto reach = reachable_from_driven(frame);
    row_of_node_.assign(g.node_count(), -1);
    unknowns_.clear();
    for (std::uint32_t i = 0; i < g.node_count(); ++i) {
      const auto ek = electrode_of_node_[i];
      const bool fixed = ek >= 0 && frame.driven(static_cast<std::size_t>(ek));
      if (!fixed && reach[i]) {
        row_of_node_[i] = static_cast<std::int32_t>(unknowns_.size());
        unknowns_.push_back(i);
      }
    }
    const auto m = static_cast<Eigen::Index>(unknowns_.size());

    // upper triangle only
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m + g.edge_count());
    for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(i, i, 1.0);
    for (const auto& e : g.edges) {
      const auto ru = row_of_node_[e.u];
      const auto rv = row_of_node_[e.v];
      if (ru >= 0 && rv >= 0) trip.emplace_back(std::min(ru, rv), std::max(ru, rv), 1.0);
    }
    matrix_.resize(m, m);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();

    auto slot = [&](std::int32_t r, std::int32_t c) -> std::ptrdiff_t {
      if (r < 0 || c < 0) return -1;
      if (r > c) std::swap(r, c);
      const auto* outer = matrix_.outerIndexPtr();
      const auto* inner = matrix_.innerIndexPtr();
      const auto* begin = inner + outer[c];
      const auto* end = inner + outer[c + 1];
      const auto* it = std::lower_bound(begin, end, r);
      return it - inner;
    };
    edge_slots_.assign(g.edge_count(), {});
    for (std::size_t k = 0; k < g.edge_count(); ++k) {
      const Edge& e = g.edges[k];
      const auto ru = row_of_node_[e.u];
      const auto rv = row_of_node_[e.v];
      edge_slots_[k] = {slot(ru, ru), slot(rv, rv), (ru >= 0 && rv >= 0) ? slot(ru, rv) : -1};
    }
    prepared_ = true;
  }

  Eigen::VectorXd upper_times(const Eigen::VectorXd& x) const {
    return matrix_.selfadjointView<Eigen::Upper>() * x;
  }

  const NetworkGraph* graph_;
  double tolerance_;
  std::vector<std::size_t> adjacency_start_;
  std::vector<std::uint32_t> adjacency_;
  std::vector<std::int32_t> electrode_of_node_;

  bool prepared_ = false;
  bool analysed_ = false;
  std::vector<std::uint8_t> prepared_mask_;
  std::vector<std::int32_t> row_of_node_;
  std::vector<std::uint32_t> unknowns_;
  std::vector<EdgeSlots> edge_slots_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::VectorXd rhs_;
  SupernodalCholesky chol_;
  double last_residual_ = 0.0;
};

/// Free-function form of a single solve.
inline std::vector<double> solve_kirchhoff(const NetworkGraph& graph, std::span<const double> conductances,
                                           const InputFrame& frame, double tolerance = 1e-10) {
  KirchhoffSolver solver(graph, tolerance);
  return solver.solve(conductances, frame);
}

/// A band-network: one graph, one evolving state, one solver workspace.
class MemristiveNetwork {
 public:
  MemristiveNetwork(const NetworkGraph& graph, DynamicsConfig config)
      : graph_(&graph), config_(config), solver_(graph, config.solver_tolerance),
        state_(NetworkState::zero(graph)), conductance_(graph.edge_count()) {
    config_.validate();
  }

  const NetworkState& state() const { return state_; }
  const DynamicsConfig& config() const { return config_; }
  const NetworkGraph& graph() const { return *graph_; }
  KirchhoffSolver& solver() { return solver_; }

  void set_state(NetworkState s) {
    if (s.lambda.size() != graph_->edge_count()) throw ConfigError("network state does not match graph");
    if (s.node_voltage.size() != graph_->node_count()) s.node_voltage.assign(graph_->node_count(), 0.0);
    state_ = std::move(s);
  }

  void reset() { state_ = NetworkState::zero(*graph_); }

  /// Presents one frame for steps_per_frame substeps.
  void step(const InputFrame& frame) {
    const auto& edges = graph_->edges;
    for (std::uint32_t s = 0; s < config_.steps_per_frame; ++s) {
      for (std::size_t k = 0; k < edges.size(); ++k) conductance_[k] = edge_conductance(state_.lambda[k], config_);
      solver_.solve_into(conductance_, frame, state_.node_voltage);
      const auto& v = state_.node_voltage;
      for (std::size_t k = 0; k < edges.size(); ++k) {
        state_.lambda[k] = integrate_lambda(state_.lambda[k], v[edges[k].u] - v[edges[k].v], config_);
      }
      state_.time += config_.dt;
    }
  }

  /// Voltages at the readout nodes, ascending node id.
  std::vector<double> readout() const {
    std::vector<double> out;
    readout_into(out);
    return out;
  }

  void readout_into(std::vector<double>& out) const {
    out.resize(graph_->readout_ids.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = state_.node_voltage[graph_->readout_ids[i]];
  }

 private:
  const NetworkGraph* graph_;
  DynamicsConfig config_;
  KirchhoffSolver solver_;
  NetworkState state_;
  std::vector<double> conductance_;
};

/// Free-function step on an explicit state.
inline NetworkState step(NetworkState state, const NetworkGraph& graph, const InputFrame& frame,
                         const DynamicsConfig& config) {
  MemristiveNetwork net(graph, config);
  net.set_state(std::move(state));
  net.step(frame);
  return net.state();
}

inline std::vector<double> readout(const NetworkState& state, const NetworkGraph& graph) {
  std::vector<double> out(graph.readout_ids.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state.node_voltage[graph.readout_ids[i]];
  return out;
}

// Snapshot layout: "NWNS", u16 version, u32 edge count, f64[edge count]
// lambda, f64 time. Little-endian throughout.
inline constexpr std::uint16_t snapshot_version = 1;

inline void write_state_snapshot(std::ostream& os, const NetworkState& state) {
  os.write("NWNS", 4);
  io::put_le<std::uint16_t>(os, snapshot_version);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(state.lambda.size()));
  for (double l : state.lambda) io::put_le<double>(os, l);
  io::put_le<double>(os, state.time);
}

inline NetworkState read_state_snapshot(std::istream& is) {
  io::expect_magic(is, "NWNS", "state snapshot");
  if (io::get_le<std::uint16_t>(is) != snapshot_version) throw FormatError("state snapshot: unsupported version");
  const auto n = io::get_le<std::uint32_t>(is);
  NetworkState s;
  s.lambda.resize(n);
  for (auto& l : s.lambda) l = io::get_le<double>(is);
  s.time = io::get_le<double>(is);
  return s;
}

}  // namespace pann

#endif  // PANN_DYNAMICS_HPP
