#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bo4io/domain.hpp"
#include "bo4io/fop/fba.hpp"
#include "bo4io/fop/networks.hpp"
#include "bo4io/fop/pooling.hpp"

namespace bo4io {

/// A solvable forward model: given contextual inputs u and the full parameter vector, returns a
/// globally optimal decision. Implementations are immutable and safe to call concurrently.
class ForwardProblem {
 public:
  virtual ~ForwardProblem() = default;
  virtual std::string family() const = 0;
  /// Length of the full parameter vector accepted by solve().
  virtual Eigen::Index parameter_size() const = 0;
  virtual FopSolution solve(const InputFields& u, const Vector& theta) const = 0;
  /// Layout of solution vectors (block names and sizes) without solving.
  virtual std::vector<VariableBlock> layout() const = 0;
  /// Network document (used by the external oracle protocol and the dataset sidecar).
  virtual TextDocument document() const = 0;
  /// Nominal full parameter vector stored in the network.
  virtual Vector nominal_parameters() const = 0;
  /// Qualities per product in the parameter vector (generalized pooling), else 1.
  virtual Eigen::Index parameter_block() const { return 1; }
};

class FbaForward final : public ForwardProblem {
 public:
  explicit FbaForward(FbaProblem p, FbaOptions opt = {}) : p_(std::move(p)), opt_(opt) { p_.validate(); }
  std::string family() const override { return "fba"; }
  Eigen::Index parameter_size() const override { return p_.num_objectives(); }
  FopSolution solve(const InputFields& u, const Vector& theta) const override { return solve_fba(p_, u, theta, opt_); }
  std::vector<VariableBlock> layout() const override { return {{"v", 0, p_.num_reactions()}}; }
  TextDocument document() const override { return to_document(p_); }
  Vector nominal_parameters() const override {
    return Vector::Constant(p_.num_objectives(), 1.0 / static_cast<double>(p_.num_objectives()));
  }
  const FbaProblem& problem() const noexcept { return p_; }

 private:
  FbaProblem p_;
  FbaOptions opt_;
};

class PoolingForward final : public ForwardProblem {
 public:
  explicit PoolingForward(PoolingNetwork n, PoolingOptions opt = {}) : n_(std::move(n)), opt_(opt) { n_.validate(); }
  std::string family() const override { return "pooling"; }
  Eigen::Index parameter_size() const override { return n_.num_products(); }
  FopSolution solve(const InputFields& u, const Vector& theta) const override {
    return solve_pooling(n_, u, theta, opt_);
  }
  std::vector<VariableBlock> layout() const override { return detail::pooling_layout(n_, false); }
  TextDocument document() const override { return to_document(n_); }
  Vector nominal_parameters() const override { return n_.demand_cap; }
  const PoolingNetwork& network() const noexcept { return n_; }

 private:
  PoolingNetwork n_;
  PoolingOptions opt_;
};

class GenPoolingForward final : public ForwardProblem {
 public:
  explicit GenPoolingForward(GenPoolingNetwork n, PoolingOptions opt = {}) : n_(std::move(n)), opt_(opt) {
    n_.validate();
  }
  std::string family() const override { return "genpooling"; }
  Eigen::Index parameter_size() const override { return n_.num_products() * n_.num_qualities(); }
  FopSolution solve(const InputFields& u, const Vector& theta) const override {
    return solve_genpooling(n_, u, theta, opt_);
  }
  std::vector<VariableBlock> layout() const override { return detail::pooling_layout(n_, true); }
  TextDocument document() const override { return to_document(n_); }
  Vector nominal_parameters() const override { return detail::flatten_rows(n_.quality_limit); }
  Eigen::Index parameter_block() const override { return n_.num_qualities(); }
  const GenPoolingNetwork& network() const noexcept { return n_; }

 private:
  GenPoolingNetwork n_;
  PoolingOptions opt_;
};

struct SolverOptions {
  FbaOptions fba;
  PoolingOptions pooling;
};

/// Builds the bundled solver for a network document. For FBA, `n_objectives` > 0 keeps only the
/// first n objectives (dimension d uses d+1 weights).
inline std::shared_ptr<const ForwardProblem> make_forward(const TextDocument& doc, int n_objectives = 0,
                                                          const SolverOptions& opt = {}) {
  const auto fam = doc.string("family");
  if (fam == "fba") {
    auto p = fba_from_document(doc);
    if (n_objectives > 0) {
      if (n_objectives > p.num_objectives())
        throw ConfigError("fba: network has " + std::to_string(p.num_objectives()) + " objectives, " +
                          std::to_string(n_objectives) + " requested");
      p.objective.resize(static_cast<std::size_t>(n_objectives));
      p.objective_sense.conservativeResize(n_objectives);
    }
    return std::make_shared<FbaForward>(std::move(p), opt.fba);
  }
  if (fam == "pooling") return std::make_shared<PoolingForward>(pooling_from_document(doc), opt.pooling);
  if (fam == "genpooling") return std::make_shared<GenPoolingForward>(genpooling_from_document(doc), opt.pooling);
  throw InputError(doc.origin() + ": unknown family '" + fam + "'");
}

/// Maps the d searched parameters to the forward problem's full parameter vector.
///   simplex:       (θ̂_1..θ̂_d, 1 - Σθ̂)                         (FBA weights)
///   subset:        nominal vector with entries `free` replaced  (pooling demand caps)
///   quality_share: θ_{j1} = θ̂_j for the free products, the other qualities of product j share
///                  1 - θ̂_j in their nominal proportions           (generalized pooling limits)
struct Parameterization {
  enum class Kind { Simplex, Subset, QualityShare };
  Kind kind = Kind::Simplex;
  Eigen::Index d = 1;
  Vector nominal;                    // full nominal vector (subset / quality_share)
  std::vector<Eigen::Index> free;    // subset: entry indices; quality_share: product indices
  Eigen::Index qualities = 1;        // quality_share: K

  Vector expand(const Vector& theta_hat) const {
    if (theta_hat.size() != d)
      throw InputError("parameter vector has length " + std::to_string(theta_hat.size()) + ", expected " +
                       std::to_string(d));
    switch (kind) {
      case Kind::Simplex: {
        Vector full(d + 1);
        full.head(d) = theta_hat;
        full[d] = 1.0 - theta_hat.sum();
        return full;
      }
      case Kind::Subset: {
        Vector full = nominal;
        for (Eigen::Index i = 0; i < d; ++i) full[free[static_cast<std::size_t>(i)]] = theta_hat[i];
        return full;
      }
      case Kind::QualityShare: {
        Vector full = nominal;
        const auto K = qualities;
        for (Eigen::Index i = 0; i < d; ++i) {
          const auto j = free[static_cast<std::size_t>(i)];
          const double rest = nominal.segment(j * K + 1, K - 1).sum();
          full[j * K] = theta_hat[i];
          for (Eigen::Index k = 1; k < K; ++k)
            full[j * K + k] = rest > 0.0 ? (1.0 - theta_hat[i]) * nominal[j * K + k] / rest
                                         : (1.0 - theta_hat[i]) / static_cast<double>(K - 1);
        }
        return full;
      }
    }
    return theta_hat;
  }

  /// Inverse of expand for a full vector that lies in the image.
  Vector restrict(const Vector& full) const {
    Vector t(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      switch (kind) {
        case Kind::Simplex: t[i] = full[i]; break;
        case Kind::Subset: t[i] = full[free[static_cast<std::size_t>(i)]]; break;
        case Kind::QualityShare: t[i] = full[free[static_cast<std::size_t>(i)] * qualities]; break;
      }
    }
    return t;
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::Simplex: return "simplex";
      case Kind::Subset: return "subset";
      case Kind::QualityShare: return "quality_share";
    }
    return "?";
  }
};

/// Default parameterization and search domain for a family with d unknowns.
inline std::pair<Parameterization, ParameterDomain> default_parameterization(const ForwardProblem& fp, int d) {
  Parameterization par;
  par.d = d;
  if (d < 1) throw ConfigError("d must be >= 1");
  if (fp.family() == "fba") {
    if (d + 1 != fp.parameter_size())
      throw ConfigError("fba: d = " + std::to_string(d) + " needs " + std::to_string(d + 1) + " objectives");
    par.kind = Parameterization::Kind::Simplex;
    return {par, ParameterDomain::unit_simplex(d)};
  }
  if (fp.family() == "pooling") {
    if (d > fp.parameter_size()) throw ConfigError("pooling: d exceeds the number of products");
    par.kind = Parameterization::Kind::Subset;
    par.nominal = fp.nominal_parameters();
    for (Eigen::Index j = 0; j < d; ++j) par.free.push_back(j);
    return {par, ParameterDomain(Vector::Constant(d, 0.5), Vector::Constant(d, 1.0), false)};
  }
  if (fp.family() == "genpooling") {
    const auto K = fp.parameter_block();
    if (d > fp.parameter_size() / K) throw ConfigError("genpooling: d exceeds the number of products");
    if (K < 2) throw ConfigError("genpooling: quality shares need at least two qualities");
    par.kind = Parameterization::Kind::QualityShare;
    par.qualities = K;
    par.nominal = fp.nominal_parameters();
    for (Eigen::Index j = 0; j < d; ++j) par.free.push_back(j);
    return {par, ParameterDomain(Vector::Constant(d, 0.2), Vector::Constant(d, 0.6), false)};
  }
  throw ConfigError("no default parameterization for family '" + fp.family() + "'");
}

}  // namespace bo4io
