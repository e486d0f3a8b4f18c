#pragma once

#include <map>
#include <string>
#include <vector>

#include "bo4io/common.hpp"

namespace bo4io {

enum class SolveStatus { Optimal, Infeasible, Unbounded, GridOptimal };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::GridOptimal: return "grid-optimal-within-tolerance";
  }
  return "?";
}

inline SolveStatus parse_status(const std::string& s) {
  if (s == "optimal") return SolveStatus::Optimal;
  if (s == "infeasible") return SolveStatus::Infeasible;
  if (s == "unbounded") return SolveStatus::Unbounded;
  if (s == "grid-optimal-within-tolerance" || s == "grid-optimal") return SolveStatus::GridOptimal;
  throw InputError("unknown solver status '" + s + "'");
}

/// Named contiguous block of the flat decision vector (e.g. "f", "y", "v").
struct VariableBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Output of a forward-problem solve.
struct FopSolution {
  Vector x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<VariableBlock> layout;
  /// Grid solvers: bound on how far the reported objective may sit above the global optimum.
  double gap_bound = 0.0;

  bool usable() const noexcept { return status == SolveStatus::Optimal || status == SolveStatus::GridOptimal; }

  const VariableBlock* find(const std::string& name) const {
    for (const auto& b : layout)
      if (b.name == name) return &b;
    return nullptr;
  }

  Vector block(const std::string& name) const {
    const auto* b = find(name);
    if (!b) throw InputError("solution has no variable family '" + name + "'");
    return x.segment(b->offset, b->size);
  }

  /// Concatenation of the named families in the given order.
  Vector gather(const std::vector<std::string>& names) const {
    Eigen::Index n = 0;
    for (const auto& nm : names) {
      const auto* b = find(nm);
      if (!b) throw InputError("solution has no variable family '" + nm + "'");
      n += b->size;
    }
    Vector out(n);
    Eigen::Index at = 0;
    for (const auto& nm : names) {
      const auto* b = find(nm);
      out.segment(at, b->size) = x.segment(b->offset, b->size);
      at += b->size;
    }
    return out;
  }

  static FopSolution infeasible() { return FopSolution{}; }
};

/// Per-observation contextual inputs, keyed by field name (e.g. "L", "U", "availability").
using InputFields = std::map<std::string, Vector>;

}  // namespace bo4io
