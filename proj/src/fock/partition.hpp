#pragma once

// Disjoint-set helper for grouping basis indices into blocks.

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <vector>

namespace qillum::fock::detail {

class IndexPartition {
public:
  explicit IndexPartition(Eigen::Index n) : parent_(static_cast<std::size_t>(n), -1) {}

  void touch(Eigen::Index i) {
    auto& p = parent_[static_cast<std::size_t>(i)];
    if (p < 0) p = i;
  }

  void unite(Eigen::Index a, Eigen::Index b) {
    touch(a);
    touch(b);
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[static_cast<std::size_t>(a)] = b;
  }

  Eigen::Index find(Eigen::Index i) {
    while (parent_[static_cast<std::size_t>(i)] != i) {
      auto& p = parent_[static_cast<std::size_t>(i)];
      p = parent_[static_cast<std::size_t>(p)];
      i = p;
    }
    return i;
  }

  bool touched(Eigen::Index i) const { return parent_[static_cast<std::size_t>(i)] >= 0; }

  /// Groups of touched indices, each sorted, groups ordered by smallest member.
  std::vector<std::vector<Eigen::Index>> groups() {
    std::vector<Eigen::Index> root_slot(parent_.size(), -1);
    std::vector<std::vector<Eigen::Index>> out;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(parent_.size()); ++i) {
      if (!touched(i)) continue;
      const auto r = static_cast<std::size_t>(find(i));
      if (root_slot[r] < 0) {
        root_slot[r] = static_cast<Eigen::Index>(out.size());
        out.emplace_back();
      }
      out[static_cast<std::size_t>(root_slot[r])].push_back(i);
    }
    return out;
  }

private:
  std::vector<Eigen::Index> parent_;
};

/// Position lookup: index -> (group, local offset).
struct Locator {
  std::vector<int> group;
  std::vector<int> local;

  Locator(Eigen::Index n, const std::vector<std::vector<Eigen::Index>>& groups)
      : group(static_cast<std::size_t>(n), -1), local(static_cast<std::size_t>(n), -1) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      for (std::size_t k = 0; k < groups[g].size(); ++k) {
        group[static_cast<std::size_t>(groups[g][k])] = static_cast<int>(g);
        local[static_cast<std::size_t>(groups[g][k])] = static_cast<int>(k);
      }
    }
  }
};

}  // namespace qillum::fock::detail
