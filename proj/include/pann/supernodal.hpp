#ifndef PANN_SUPERNODAL_HPP
#define PANN_SUPERNODAL_HPP

// Multifrontal supernodal Cholesky for a fixed sparsity pattern.
//
// The symbolic phase (AMD ordering, elimination tree, column structure,
// supernode partition and assembly maps) runs once. Each numeric
// factorisation then only scatters values and runs dense kernels on the
// frontal matrices, which is where nearly all of the work lives for the
// nanowire Laplacians.

#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

namespace pann {

class SupernodalCholesky {
 public:
  using Matrix = Eigen::SparseMatrix<double>;  // column-major, upper triangle stored

  /// Symbolic analysis of an upper-triangular pattern. Every diagonal entry
  /// must be present.
  void analyze(const Matrix& upper) {
    n_ = upper.cols();
    const auto n = static_cast<std::size_t>(n_);

    Matrix full = upper.selfadjointView<Eigen::Upper>();
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
    Eigen::AMDOrdering<int>()(full, pinv);
    const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p = pinv.inverse();
    perm_.assign(p.indices().data(), p.indices().data() + n);

    // postorder the elimination tree so that subtrees are contiguous
    auto parent = elimination_tree(upper);
    std::vector<std::vector<int>> kids(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (parent[j] >= 0) kids[static_cast<std::size_t>(parent[j])].push_back(static_cast<int>(j));
    }
    std::vector<int> post_of(n), stack;
    std::vector<std::size_t> cursor(n, 0);
    int next = 0;
    for (std::size_t root = 0; root < n; ++root) {
      if (parent[root] >= 0) continue;
      stack.push_back(static_cast<int>(root));
      while (!stack.empty()) {
        const auto top = static_cast<std::size_t>(stack.back());
        if (cursor[top] < kids[top].size()) {
          stack.push_back(kids[top][cursor[top]++]);
        } else {
          post_of[top] = next++;
          stack.pop_back();
        }
      }
    }
    for (auto& q : perm_) q = post_of[static_cast<std::size_t>(q)];
    parent = elimination_tree(upper);
    const auto colstruct = column_structure(upper, parent);

    // fundamental supernodes, then relaxed merging of a child into the
    // parent that immediately follows it
    std::vector<Range> ranges;
    for (std::size_t j = 0; j < n; ++j) {
      const bool extend = j > 0 && parent[j - 1] == static_cast<int>(j) &&
                          colstruct[j - 1].size() == colstruct[j].size() + 1;
      if (!extend) ranges.push_back({static_cast<int>(j), static_cast<int>(j), 0});
      ranges.back().last = static_cast<int>(j) + 1;
      ranges.back().true_nnz += colstruct[j].size() + 1;
    }
    std::vector<Range> merged;
    for (Range cur : ranges) {
      while (!merged.empty()) {
        const Range& prev = merged.back();
        if (prev.last != cur.first || parent[static_cast<std::size_t>(prev.last - 1)] != cur.first) break;
        const std::size_t below = colstruct[static_cast<std::size_t>(cur.last - 1)].size();
        const std::size_t width = static_cast<std::size_t>(cur.last - prev.first);
        const std::size_t stored = width * (width + 1) / 2 + width * below;
        const std::size_t nnz = prev.true_nnz + cur.true_nnz;
        const double zeros = static_cast<double>(stored - nnz) / static_cast<double>(stored);
        const bool accept = width <= 4 || (width <= 16 && zeros < 0.8) || (width <= 48 && zeros < 0.1) || zeros < 0.05;
        if (!accept) break;
        cur = {prev.first, cur.last, nnz};
        merged.pop_back();
      }
      merged.push_back(cur);
    }

    supernodes_.clear();
    sn_of_col_.assign(n, -1);
    std::size_t offset = 0;
    for (const auto& r : merged) {
      Supernode sn;
      sn.first = r.first;
      sn.last = r.last;
      for (int j = r.first; j < r.last; ++j) {
        sn.rows.push_back(j);
        sn_of_col_[static_cast<std::size_t>(j)] = static_cast<int>(supernodes_.size());
      }
      const auto& below = colstruct[static_cast<std::size_t>(r.last - 1)];
      sn.rows.insert(sn.rows.end(), below.begin(), below.end());
      sn.factor_offset = offset;
      offset += sn.rows.size() * static_cast<std::size_t>(sn.width());
      supernodes_.push_back(std::move(sn));
    }
    factor_.assign(offset, 0.0);

    // where each child's update block lands in its parent's front
    std::vector<int> local(n, -1);
    children_.assign(supernodes_.size(), {});
    for (std::size_t s = 0; s < supernodes_.size(); ++s) {
      auto& sn = supernodes_[s];
      if (sn.rows.size() > static_cast<std::size_t>(sn.width())) {
        sn.parent = sn_of_col_[static_cast<std::size_t>(sn.rows[static_cast<std::size_t>(sn.width())])];
        children_[static_cast<std::size_t>(sn.parent)].push_back(static_cast<int>(s));
      }
    }
    for (std::size_t s = 0; s < supernodes_.size(); ++s) {
      auto& sn = supernodes_[s];
      for (std::size_t i = 0; i < sn.rows.size(); ++i) local[static_cast<std::size_t>(sn.rows[i])] = static_cast<int>(i);
      for (int c : children_[s]) {
        auto& child = supernodes_[static_cast<std::size_t>(c)];
        child.relative.clear();
        for (std::size_t i = static_cast<std::size_t>(child.width()); i < child.rows.size(); ++i)
          child.relative.push_back(local[static_cast<std::size_t>(child.rows[i])]);
      }
    }

    std::size_t update_total = 0;
    for (auto& sn : supernodes_) {
      sn.update_offset = update_total;
      update_total += square(sn.update_size());
    }
    update_.assign(update_total, 0.0);

    // value slot of A -> (supernode, position in its factor block)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> per_sn(supernodes_.size());
    for (Eigen::Index c = 0; c < n_; ++c) {
      for (auto k = upper.outerIndexPtr()[c]; k < upper.outerIndexPtr()[c + 1]; ++k) {
        const int a = perm_[static_cast<std::size_t>(upper.innerIndexPtr()[k])];
        const int b = perm_[static_cast<std::size_t>(c)];
        const int lo = std::min(a, b), hi = std::max(a, b);
        const auto s = static_cast<std::size_t>(sn_of_col_[static_cast<std::size_t>(lo)]);
        const auto& sn = supernodes_[s];
        const auto lr = static_cast<std::size_t>(std::lower_bound(sn.rows.begin(), sn.rows.end(), hi) - sn.rows.begin());
        const auto lc = static_cast<std::size_t>(lo - sn.first);
        per_sn[s].emplace_back(static_cast<std::size_t>(k), sn.factor_offset + lc * sn.rows.size() + lr);
      }
    }
    scatter_begin_.assign(1, 0);
    scatter_.clear();
    for (const auto& list : per_sn) {
      scatter_.insert(scatter_.end(), list.begin(), list.end());
      scatter_begin_.push_back(scatter_.size());
    }
    work_.resize(n_);
    gather_.resize(n_);
    factored_values_.clear();
    analysed_ = true;
  }

  bool analysed() const { return analysed_; }

  /// Numeric factorisation; values must follow the analysed pattern.
  /// Returns false if the matrix is not numerically positive definite.
  bool factorize(const Matrix& upper) {
    const double* values = upper.valuePtr();
    mark_dirty(values, static_cast<std::size_t>(upper.nonZeros()));
    for (std::size_t s = 0; s < supernodes_.size(); ++s) {
      if (!dirty_[s]) continue;
      const auto& sn = supernodes_[s];
      const auto ns = static_cast<Eigen::Index>(sn.rows.size());
      const auto w = static_cast<Eigen::Index>(sn.width());
      const auto u = ns - w;
      double* lblock = factor_.data() + sn.factor_offset;
      std::fill(lblock, lblock + ns * w, 0.0);
      for (std::size_t k = scatter_begin_[s]; k < scatter_begin_[s + 1]; ++k)
        factor_[scatter_[k].second] += values[scatter_[k].first];

      // child contributions to this supernode's own columns
      for (int c : children_[s]) {
        const auto& child = supernodes_[static_cast<std::size_t>(c)];
        const auto cu = static_cast<Eigen::Index>(child.update_size());
        const double* cblock = update_.data() + child.update_offset;
        const int* rel = child.relative.data();
        for (Eigen::Index jj = 0; jj < cu && rel[jj] < w; ++jj) {
          double* dst = lblock + rel[jj] * ns;
          const double* src = cblock + jj * cu;
          for (Eigen::Index ii = jj; ii < cu; ++ii) dst[rel[ii]] += src[ii];
        }
      }

      Eigen::Map<Eigen::MatrixXd> front(lblock, ns, w);
      auto f11 = front.topRows(w);
      Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(f11);
      if (llt.info() != Eigen::Success) {
        factored_values_.clear();
        return false;
      }
      if (u == 0) continue;

      auto l21 = front.bottomRows(u);
      f11.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(l21);
      double* ublock = update_.data() + sn.update_offset;
      for (Eigen::Index j = 0; j < u; ++j) std::fill(ublock + j * u + j, ublock + (j + 1) * u, 0.0);
      Eigen::Map<Eigen::MatrixXd> upd(ublock, u, u);
      upd.selfadjointView<Eigen::Lower>().rankUpdate(l21, -1.0);

      // child contributions that pass straight through to the update block
      for (int c : children_[s]) {
        const auto& child = supernodes_[static_cast<std::size_t>(c)];
        const auto cu = static_cast<Eigen::Index>(child.update_size());
        const double* cblock = update_.data() + child.update_offset;
        const int* rel = child.relative.data();
        for (Eigen::Index jj = 0; jj < cu; ++jj) {
          if (rel[jj] < w) continue;
          double* dst = ublock + (rel[jj] - w) * u - w;
          const double* src = cblock + jj * cu;
          for (Eigen::Index ii = jj; ii < cu; ++ii) dst[rel[ii]] += src[ii];
        }
      }
    }
    factored_values_.assign(values, values + upper.nonZeros());
    return true;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) {
    auto& y = work_;
    for (Eigen::Index i = 0; i < n_; ++i) y[perm_[static_cast<std::size_t>(i)]] = b[i];
    for (const auto& sn : supernodes_) {
      const auto ns = static_cast<Eigen::Index>(sn.rows.size());
      const auto w = static_cast<Eigen::Index>(sn.width());
      Eigen::Map<const Eigen::MatrixXd> front(factor_.data() + sn.factor_offset, ns, w);
      auto x1 = y.segment(sn.first, w);
      front.topLeftCorner(w, w).triangularView<Eigen::Lower>().solveInPlace(x1);
      if (ns > w) {
        auto z = gather_.head(ns - w);
        z.noalias() = front.bottomLeftCorner(ns - w, w) * x1;
        for (Eigen::Index i = w; i < ns; ++i) y[sn.rows[static_cast<std::size_t>(i)]] -= z[i - w];
      }
    }
    for (auto s = supernodes_.rbegin(); s != supernodes_.rend(); ++s) {
      const auto& sn = *s;
      const auto ns = static_cast<Eigen::Index>(sn.rows.size());
      const auto w = static_cast<Eigen::Index>(sn.width());
      Eigen::Map<const Eigen::MatrixXd> front(factor_.data() + sn.factor_offset, ns, w);
      auto x1 = y.segment(sn.first, w);
      if (ns > w) {
        auto z = gather_.head(ns - w);
        for (Eigen::Index i = w; i < ns; ++i) z[i - w] = y[sn.rows[static_cast<std::size_t>(i)]];
        x1.noalias() -= front.bottomLeftCorner(ns - w, w).transpose() * z;
      }
      front.topLeftCorner(w, w).transpose().triangularView<Eigen::Upper>().solveInPlace(x1);
    }
    Eigen::VectorXd x(n_);
    for (Eigen::Index i = 0; i < n_; ++i) x[i] = y[perm_[static_cast<std::size_t>(i)]];
    return x;
  }

  std::size_t supernode_count() const { return supernodes_.size(); }

 private:
  static std::size_t square(std::size_t x) { return x * x; }

  // A supernode is refactored when one of its own entries changed since the
  // last factorisation or when any descendant is refactored. Clean subtrees
  // keep their columns and update blocks, so the result is the same as a
  // full factorisation.
  void mark_dirty(const double* values, std::size_t nnz) {
    const bool full = factored_values_.size() != nnz;
    dirty_.assign(supernodes_.size(), full);
    if (full) return;
    for (std::size_t s = 0; s < supernodes_.size(); ++s) {
      for (std::size_t k = scatter_begin_[s]; k < scatter_begin_[s + 1] && !dirty_[s]; ++k) {
        const std::size_t slot = scatter_[k].first;
        dirty_[s] = values[slot] != factored_values_[slot];
      }
      // postorder: a parent always follows its children
      if (dirty_[s] && supernodes_[s].parent >= 0) dirty_[static_cast<std::size_t>(supernodes_[s].parent)] = true;
    }
  }

  struct Range {
    int first = 0;
    int last = 0;
    std::size_t true_nnz = 0;
  };

  /// Strictly-lower neighbours of every column in elimination order.
  std::vector<std::vector<int>> lower_adjacency(const Matrix& upper) const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
    for (Eigen::Index c = 0; c < n_; ++c) {
      for (Matrix::InnerIterator it(upper, c); it; ++it) {
        if (it.row() == c) continue;
        const int a = perm_[static_cast<std::size_t>(it.row())], b = perm_[static_cast<std::size_t>(c)];
        adj[static_cast<std::size_t>(std::max(a, b))].push_back(std::min(a, b));
      }
    }
    return adj;
  }

  std::vector<int> elimination_tree(const Matrix& upper) const {
    const auto adj = lower_adjacency(upper);
    const auto n = static_cast<std::size_t>(n_);
    std::vector<int> parent(n, -1), ancestor(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
      const int kk = static_cast<int>(k);
      for (int i : adj[k]) {
        auto j = static_cast<std::size_t>(i);
        while (ancestor[j] != -1 && ancestor[j] != kk) {
          const auto up = static_cast<std::size_t>(ancestor[j]);
          ancestor[j] = kk;
          j = up;
        }
        if (ancestor[j] == -1) {
          ancestor[j] = kk;
          parent[j] = kk;
        }
      }
    }
    return parent;
  }

  /// Below-diagonal row indices of every column of L, ascending.
  std::vector<std::vector<int>> column_structure(const Matrix& upper, const std::vector<int>& parent) const {
    const auto adj = lower_adjacency(upper);
    const auto n = static_cast<std::size_t>(n_);
    std::vector<std::vector<int>> cols(n);
    std::vector<int> mark(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
      const int kk = static_cast<int>(k);
      mark[k] = kk;
      for (int i : adj[k]) {
        for (auto j = static_cast<std::size_t>(i); mark[j] != kk; j = static_cast<std::size_t>(parent[j])) {
          cols[j].push_back(kk);
          mark[j] = kk;
        }
      }
    }
    return cols;
  }

  struct Supernode {
    int first = 0;
    int last = 0;  // exclusive
    std::size_t factor_offset = 0;  // ns x width block of L
    std::size_t update_offset = 0;  // update_size^2 Schur complement block
    int parent = -1;
    std::vector<int> rows;      // column indices then below-diagonal structure
    std::vector<int> relative;  // update rows -> local rows of the parent front
    int width() const { return last - first; }
    std::size_t update_size() const { return rows.size() - static_cast<std::size_t>(width()); }
  };

  Eigen::Index n_ = 0;
  bool analysed_ = false;
  std::vector<int> perm_;  // original index -> elimination position
  std::vector<int> sn_of_col_;
  std::vector<Supernode> supernodes_;
  std::vector<std::vector<int>> children_;
  std::vector<std::pair<std::size_t, std::size_t>> scatter_;  // (value slot, factor position)
  std::vector<std::size_t> scatter_begin_;
  std::vector<double> factor_;
  std::vector<double> update_;
  std::vector<double> factored_values_;  // matrix values behind factor_
  std::vector<std::uint8_t> dirty_;
  Eigen::VectorXd work_;
  Eigen::VectorXd gather_;
};

}  // namespace pann

#endif  // PANN_SUPERNODAL_HPP
