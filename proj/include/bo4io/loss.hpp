#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/document.hpp"
#include "bo4io/fop/forward.hpp"
#include "bo4io/parallel.hpp"

namespace bo4io {

inline constexpr std::string_view kObsMagic = "bo4io-obs v1";

/// One (u_i, x_i) pair. x is over the masked decision layout, in the units of the set
/// (standardized when the set carries standardization statistics).
struct Observation {
  InputFields input;
  Vector x;
};

/// Observations of one forward model plus how decisions were recorded.
struct ObservationSet {
  std::string family;
  std::vector<std::string> mask;  // observed variable blocks, in order
  Vector center;                  // standardization x = (raw - center) / scale; empty = raw units
  Vector scale;
  std::vector<Observation> items;

  std::size_t size() const noexcept { return items.size(); }
  bool standardized() const noexcept { return center.size() > 0; }

  /// Maps raw masked decisions into the set's units.
  Vector to_units(const Vector& raw) const {
    if (!standardized()) return raw;
    return (raw - center).cwiseQuotient(scale);
  }

  void validate(const ForwardProblem* fp = nullptr) const {
    if (mask.empty()) throw InputError("observations: empty mask");
    if (items.empty()) throw InputError("observations: empty set");
    const auto n = items.front().x.size();
    for (const auto& o : items)
      if (o.x.size() != n) throw InputError("observations: inconsistent decision lengths");
    if (standardized() && (center.size() != n || scale.size() != n || (scale.array() <= 0).any()))
      throw InputError("observations: bad standardization statistics");
    if (fp) {
      if (fp->family() != family)
        throw InputError("observations are for family '" + family + "' but the model is '" + fp->family() + "'");
      Eigen::Index m = 0;
      const auto lay = fp->layout();
      for (const auto& name : mask) {
        auto it = std::find_if(lay.begin(), lay.end(), [&](const VariableBlock& b) { return b.name == name; });
        if (it == lay.end()) throw InputError("observations: unknown variable block '" + name + "'");
        m += it->size;
      }
      if (m != n) throw InputError("observations: decision length does not match mask layout");
    }
  }

  ObservationSet subset(std::size_t begin, std::size_t end) const {
    ObservationSet s = *this;
    s.items.assign(items.begin() + static_cast<std::ptrdiff_t>(begin), items.begin() + static_cast<std::ptrdiff_t>(end));
    return s;
  }
};

inline TextDocument to_document(const ObservationSet& obs) {
  TextDocument doc{std::string(kObsMagic)};
  doc.add("family", obs.family);
  doc.add("mask", obs.mask);
  if (obs.standardized()) {
    doc.add("center", {}, obs.center);
    doc.add("scale", {}, obs.scale);
  }
  doc.add("count", static_cast<double>(obs.size()));
  for (std::size_t i = 0; i < obs.items.size(); ++i) {
    doc.add("observation", std::to_string(i));
    for (const auto& [k, v] : obs.items[i].input) doc.add("input", {k}, v);
    doc.add("x", {}, obs.items[i].x);
  }
  return doc;
}

inline ObservationSet observations_from_document(const TextDocument& doc) {
  ObservationSet obs;
  obs.family = doc.string("family");
  obs.mask = doc.strings("mask");
  if (doc.has("center")) {
    obs.center = doc.numbers("center");
    obs.scale = doc.numbers("scale");
  }
  Observation* cur = nullptr;
  for (const auto& l : doc.lines()) {
    if (l.key == "observation") {
      obs.items.emplace_back();
      cur = &obs.items.back();
    } else if (l.key == "input" || l.key == "x") {
      if (!cur) throw InputError(doc.where(l) + ": '" + l.key + "' before any 'observation' line");
      if (l.key == "x") {
        cur->x = doc.numbers_of(l);
      } else {
        if (l.values.empty()) throw InputError(doc.where(l) + ": input needs a field name");
        cur->input[l.values[0]] = doc.numbers_of(l, 1);
      }
    }
  }
  if (doc.has("count") && static_cast<std::size_t>(doc.number("count")) != obs.items.size())
    throw InputError(doc.origin() + ": count does not match the number of observations");
  obs.validate();
  return obs;
}

inline ObservationSet load_observations(const std::string& path) {
  return observations_from_document(TextDocument::load(path, kObsMagic));
}

/// Loss configuration: forward model, parameter mapping, weights and infeasibility penalty.
struct LossConfig {
  std::shared_ptr<const ForwardProblem> fop;
  Parameterization par;
  /// Residual weight W (masked dim square). Empty = identity.
  Matrix weight;
  /// Penalty per observation when any forward solve fails (total = value * |I|).
  double penalty_per_observation = 1e6;
  int workers = 1;

  void validate(const ObservationSet& obs) const {
    if (!fop) throw ConfigError("loss: no forward model bound");
    if (workers < 1) throw ConfigError("loss: workers must be >= 1");
    if (!(penalty_per_observation > 0.0)) throw ConfigError("loss: penalty must be positive");
    obs.validate(fop.get());
    if (weight.size() > 0) {
      const auto n = obs.items.front().x.size();
      if (weight.rows() != n || weight.cols() != n) throw ConfigError("loss: weight matrix has wrong shape");
      if (!weight.isApprox(weight.transpose(), 1e-12)) throw ConfigError("loss: weight matrix not symmetric");
      Eigen::LLT<Matrix> llt(weight);
      if (llt.info() != Eigen::Success) throw ConfigError("loss: weight matrix not positive definite");
    }
  }

  /// W = I / sigma^2 over the masked components.
  static Matrix inverse_noise_weight(Eigen::Index n, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("loss: inverse-noise weighting needs sigma > 0");
    return Matrix::Identity(n, n) / (sigma * sigma);
  }
};

struct LossResult {
  double value = 0.0;
  bool penalized = false;
  std::size_t infeasible = 0;
  double fop_seconds = 0.0;  ///< wall time of the parallel solve section
};

/// Predicted decisions of every observation in the set's units (empty vector = solve failed).
inline std::vector<Vector> predict(const Vector& theta_hat, const ObservationSet& obs, const LossConfig& cfg,
                                   double* seconds = nullptr) {
  const Vector full = cfg.par.expand(theta_hat);
  std::vector<Vector> pred(obs.size());
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(obs.size(), cfg.workers, [&](std::size_t i) {
    FopSolution s;
    try {
      s = cfg.fop->solve(obs.items[i].input, full);
    } catch (const NumericalError&) {
      return;  // counted as infeasible
    }
    if (!s.usable()) return;
    pred[i] = obs.to_units(s.gather(obs.mask));
  });
  if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return pred;
}

/// Weighted sum of squared residuals over all observations; summed in observation order so the
/// result does not depend on the number of workers.
inline LossResult evaluate_loss(const Vector& theta_hat, const ObservationSet& obs, const LossConfig& cfg) {
  cfg.validate(obs);
  LossResult r;
  const auto pred = predict(theta_hat, obs, cfg, &r.fop_seconds);
  double total = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (pred[i].size() == 0) {
      ++r.infeasible;
      continue;
    }
    const Vector res = obs.items[i].x - pred[i];
    total += cfg.weight.size() > 0 ? res.dot(cfg.weight * res) : res.squaredNorm();
  }
  if (r.infeasible > 0) {
    r.penalized = true;
    r.value = cfg.penalty_per_observation * static_cast<double>(obs.size());
  } else {
    r.value = total;
  }
  return r;
}

/// Mean squared residual per observed component: sum_i sum_k (x_ik - x̂_ik)^2 / |I| / n, in the
/// units of the set. Reporting only.
inline LossResult decision_error(const Vector& theta_hat, const ObservationSet& obs, const LossConfig& cfg) {
  cfg.validate(obs);
  LossResult r;
  const auto pred = predict(theta_hat, obs, cfg, &r.fop_seconds);
  double total = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (pred[i].size() == 0) {
      ++r.infeasible;
      continue;
    }
    total += (obs.items[i].x - pred[i]).squaredNorm();
  }
  const double n = static_cast<double>(obs.items.front().x.size());
  if (r.infeasible > 0) {
    r.penalized = true;
    r.value = cfg.penalty_per_observation;
  } else {
    r.value = total / static_cast<double>(obs.size()) / n;
  }
  return r;
}

/// Euclidean distance between full parameter vectors.
inline double parameter_error(const Vector& theta_true, const Vector& theta_hat) {
  if (theta_true.size() != theta_hat.size()) throw InputError("parameter_error: length mismatch");
  return (theta_true - theta_hat).norm();
}

}  // namespace bo4io
