#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bo4io/common.hpp"
#include "bo4io/fop/lp.hpp"
#include "bo4io/fop/solution.hpp"

namespace bo4io {

struct Arc {
  Eigen::Index from = 0;
  Eigen::Index to = 0;
};

/// Standard pooling network. Arcs: T_f feed->pool, T_y pool->product, T_z feed->product.
struct PoolingNetwork {
  std::vector<std::string> feeds, pools, products, qualities;
  Matrix feed_quality;   // C_{sk}, |S| x |K|
  Vector feed_cost;      // eta_s
  Vector availability;   // A^U_s
  Matrix quality_limit;  // P^U_{jk} (standard) or theta_{jk} (generalized); +inf = no limit
  Vector demand_cap;     // theta_j (standard); unused when generalized
  std::vector<Arc> arcs_f, arcs_y, arcs_z;
  Vector revenue_y;  // phi^y per T_y arc
  Vector revenue_z;  // phi^z per T_z arc

  Eigen::Index num_feeds() const noexcept { return static_cast<Eigen::Index>(feeds.size()); }
  Eigen::Index num_pools() const noexcept { return static_cast<Eigen::Index>(pools.size()); }
  Eigen::Index num_products() const noexcept { return static_cast<Eigen::Index>(products.size()); }
  Eigen::Index num_qualities() const noexcept { return static_cast<Eigen::Index>(qualities.size()); }

  void validate() const {
    const auto S = num_feeds(), L = num_pools(), J = num_products(), K = num_qualities();
    if (S == 0 || J == 0) throw InputError("pooling: need at least one feed and one product");
    if (feed_quality.rows() != S || feed_quality.cols() != K) throw InputError("pooling: feed quality shape");
    if (feed_cost.size() != S || availability.size() != S) throw InputError("pooling: feed vector sizes");
    if (quality_limit.rows() != J || quality_limit.cols() != K) throw InputError("pooling: quality limit shape");
    if (static_cast<Eigen::Index>(arcs_y.size()) != revenue_y.size() ||
        static_cast<Eigen::Index>(arcs_z.size()) != revenue_z.size())
      throw InputError("pooling: revenue vector sizes");
    auto check = [](const std::vector<Arc>& arcs, Eigen::Index nf, Eigen::Index nt, const char* what) {
      for (const auto& a : arcs)
        if (a.from < 0 || a.from >= nf || a.to < 0 || a.to >= nt)
          throw InputError(std::string("pooling: ") + what + " arc endpoint out of range");
    };
    check(arcs_f, S, L, "T_f");
    check(arcs_y, L, J, "T_y");
    check(arcs_z, S, J, "T_z");
    for (Eigen::Index l = 0; l < L; ++l) {
      const bool in = std::any_of(arcs_f.begin(), arcs_f.end(), [&](const Arc& a) { return a.to == l; });
      const bool out = std::any_of(arcs_y.begin(), arcs_y.end(), [&](const Arc& a) { return a.from == l; });
      if (!in || !out) throw InputError("pooling: pool '" + pools[static_cast<std::size_t>(l)] +
                                        "' needs at least one inlet and one outlet");
    }
    if ((feed_quality.array() < 0).any() || (feed_cost.array() < 0).any() || (availability.array() < 0).any() ||
        (quality_limit.array() < 0).any())
      throw InputError("pooling: qualities, costs and capacities must be nonnegative");
  }
};

/// Generalized pooling: installation binaries, per-arc costs, pool capacities and hard demands.
/// quality_limit holds theta_{jk}.
struct GenPoolingNetwork : PoolingNetwork {
  Vector arc_cost_f;    // eta^f_{sl} per T_f arc
  Vector install_feed;  // eta^init_s
  Vector install_pool;  // eta^pool_l
  Vector pool_capacity; // S_l
  Vector demand;        // D_j

  void validate() const {
    PoolingNetwork::validate();
    if (arc_cost_f.size() != static_cast<Eigen::Index>(arcs_f.size()) || install_feed.size() != num_feeds() ||
        install_pool.size() != num_pools() || pool_capacity.size() != num_pools() ||
        demand.size() != num_products())
      throw InputError("genpooling: vector sizes");
    if ((demand.array() < 0).any()) throw InputError("genpooling: negative demand");
  }
};

struct PoolingOptions {
  /// Grid points per pool-quality dimension; 0 picks 201 / 41 / 13 for 1 / 2 / 3 dimensions.
  int points_per_dim = 0;
  /// If positive, overrides points_per_dim with range / delta_p + 1 points.
  double delta_p = 0.0;
  bool refine = true;
  int golden_iterations = 30;
  static constexpr Eigen::Index kMaxGridDims = 3;
  static constexpr Eigen::Index kMaxBinaries = 10;
};

namespace detail {

/// Fully resolved data of one instance (nominal values overridden by observation inputs).
struct PoolingData {
  Matrix C;
  Vector cost_f;  // per T_f arc
  Vector avail;
  Vector rev_y, rev_z;
  Matrix limit;
  Vector cap;          // demand cap or hard demand
  bool equality_demand = false;
  Vector feed_on, pool_on;
  Vector pool_capacity;  // empty if unlimited
  double fixed_cost = 0.0;
};

inline Vector field_or(const InputFields& u, const char* key, const Vector& fallback) {
  auto it = u.find(key);
  if (it == u.end()) return fallback;
  if (it->second.size() != fallback.size())
    throw InputError(std::string("pooling: input field '") + key + "' has length " +
                     std::to_string(it->second.size()) + ", expected " + std::to_string(fallback.size()));
  return it->second;
}

inline Matrix matrix_field_or(const InputFields& u, const char* key, const Matrix& fallback) {
  auto it = u.find(key);
  if (it == u.end()) return fallback;
  if (it->second.size() != fallback.size()) throw InputError(std::string("pooling: bad length for '") + key + "'");
  Matrix m(fallback.rows(), fallback.cols());
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(j, k) = it->second[j * m.cols() + k];
  return m;
}

inline PoolingData resolve(const PoolingNetwork& net, const InputFields& u) {
  PoolingData d;
  d.C = net.feed_quality;
  const Vector eta = field_or(u, "cost", net.feed_cost);
  d.cost_f.resize(static_cast<Eigen::Index>(net.arcs_f.size()));
  for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
    d.cost_f[static_cast<Eigen::Index>(a)] = eta[net.arcs_f[a].from];
  d.avail = field_or(u, "availability", net.availability);
  d.rev_y = field_or(u, "revenue_y", net.revenue_y);
  d.rev_z = field_or(u, "revenue_z", net.revenue_z);
  d.limit = matrix_field_or(u, "quality_limit", net.quality_limit);
  d.cap = net.demand_cap;
  d.feed_on = Vector::Ones(net.num_feeds());
  d.pool_on = Vector::Ones(net.num_pools());
  return d;
}

/// Flat layout of the LP variables (f, y, z); p and binaries are appended by the callers.
struct FlowLayout {
  Eigen::Index nf, ny, nz;
  Eigen::Index size() const { return nf + ny + nz; }
};

/// The pooling model with all pool qualities fixed to p (|L| x |K|) is an LP in (f, y, z).
inline LinearProgramSpec flow_lp(const PoolingNetwork& net, const PoolingData& d, const Matrix& p) {
  const FlowLayout lay{static_cast<Eigen::Index>(net.arcs_f.size()), static_cast<Eigen::Index>(net.arcs_y.size()),
                       static_cast<Eigen::Index>(net.arcs_z.size())};
  const auto S = net.num_feeds(), L = net.num_pools(), J = net.num_products(), K = net.num_qualities();
  const auto n = lay.size();
  auto lp = LinearProgramSpec::nonnegative(n);
  const Eigen::Index oy = lay.nf, oz = lay.nf + lay.ny;
  lp.c.head(lay.nf) = d.cost_f;
  lp.c.segment(oy, lay.ny) = -d.rev_y;
  lp.c.segment(oz, lay.nz) = -d.rev_z;

  // Switched-off units carry no flow.
  for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
    if (d.feed_on[net.arcs_f[a].from] == 0.0 || d.pool_on[net.arcs_f[a].to] == 0.0)
      lp.ub[static_cast<Eigen::Index>(a)] = 0.0;
  for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
    if (d.pool_on[net.arcs_y[a].from] == 0.0) lp.ub[oy + static_cast<Eigen::Index>(a)] = 0.0;
  for (std::size_t a = 0; a < net.arcs_z.size(); ++a)
    if (d.feed_on[net.arcs_z[a].from] == 0.0) lp.ub[oz + static_cast<Eigen::Index>(a)] = 0.0;

  std::vector<Vector> eq_rows, ub_rows;
  std::vector<double> eq_rhs, ub_rhs;
  // Feed availability.
  for (Eigen::Index s = 0; s < S; ++s) {
    Vector r = Vector::Zero(n);
    for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
      if (net.arcs_f[a].from == s) r[static_cast<Eigen::Index>(a)] = 1.0;
    for (std::size_t a = 0; a < net.arcs_z.size(); ++a)
      if (net.arcs_z[a].from == s) r[oz + static_cast<Eigen::Index>(a)] = 1.0;
    if (r.isZero()) continue;
    ub_rows.push_back(r);
    ub_rhs.push_back(d.avail[s] * d.feed_on[s]);
  }
  for (Eigen::Index l = 0; l < L; ++l) {
    if (d.pool_on[l] == 0.0) continue;
    // Material balance.
    Vector r = Vector::Zero(n);
    for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
      if (net.arcs_f[a].to == l) r[static_cast<Eigen::Index>(a)] = 1.0;
    for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
      if (net.arcs_y[a].from == l) r[oy + static_cast<Eigen::Index>(a)] = -1.0;
    eq_rows.push_back(r);
    eq_rhs.push_back(0.0);
    // Quality balance.
    for (Eigen::Index k = 0; k < K; ++k) {
      Vector q = Vector::Zero(n);
      for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
        if (net.arcs_f[a].to == l) q[static_cast<Eigen::Index>(a)] = d.C(net.arcs_f[a].from, k);
      for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
        if (net.arcs_y[a].from == l) q[oy + static_cast<Eigen::Index>(a)] = -p(l, k);
      eq_rows.push_back(q);
      eq_rhs.push_back(0.0);
    }
    // Pool capacity.
    if (d.pool_capacity.size() == L && std::isfinite(d.pool_capacity[l])) {
      Vector c = Vector::Zero(n);
      for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
        if (net.arcs_y[a].from == l) c[oy + static_cast<Eigen::Index>(a)] = 1.0;
      ub_rows.push_back(c);
      ub_rhs.push_back(d.pool_capacity[l] * d.pool_on[l]);
    }
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    // Product quality limits, linear once p is fixed.
    for (Eigen::Index k = 0; k < K; ++k) {
      const double lim = d.limit(j, k);
      if (std::isinf(lim)) continue;
      Vector r = Vector::Zero(n);
      for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
        if (net.arcs_y[a].to == j) r[oy + static_cast<Eigen::Index>(a)] = p(net.arcs_y[a].from, k) - lim;
      for (std::size_t a = 0; a < net.arcs_z.size(); ++a)
        if (net.arcs_z[a].to == j) r[oz + static_cast<Eigen::Index>(a)] = d.C(net.arcs_z[a].from, k) - lim;
      if (r.isZero()) continue;
      ub_rows.push_back(r);
      ub_rhs.push_back(0.0);
    }
    // Demand.
    Vector r = Vector::Zero(n);
    for (std::size_t a = 0; a < net.arcs_y.size(); ++a)
      if (net.arcs_y[a].to == j) r[oy + static_cast<Eigen::Index>(a)] = 1.0;
    for (std::size_t a = 0; a < net.arcs_z.size(); ++a)
      if (net.arcs_z[a].to == j) r[oz + static_cast<Eigen::Index>(a)] = 1.0;
    if (d.equality_demand) {
      eq_rows.push_back(r);
      eq_rhs.push_back(d.cap[j]);
    } else {
      ub_rows.push_back(r);
      ub_rhs.push_back(d.cap[j]);
    }
  }
  lp.A_eq.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
  lp.b_eq.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t i = 0; i < eq_rows.size(); ++i) {
    lp.A_eq.row(static_cast<Eigen::Index>(i)) = eq_rows[i].transpose();
    lp.b_eq[static_cast<Eigen::Index>(i)] = eq_rhs[i];
  }
  lp.A_ub.resize(static_cast<Eigen::Index>(ub_rows.size()), n);
  lp.b_ub.resize(static_cast<Eigen::Index>(ub_rows.size()));
  for (std::size_t i = 0; i < ub_rows.size(); ++i) {
    lp.A_ub.row(static_cast<Eigen::Index>(i)) = ub_rows[i].transpose();
    lp.b_ub[static_cast<Eigen::Index>(i)] = ub_rhs[i];
  }
  return lp;
}

struct GridOutcome {
  bool feasible = false;
  Matrix p;          // best pool qualities
  Vector flows;      // (f, y, z) at p
  double value = std::numeric_limits<double>::infinity();
  double coarse_value = std::numeric_limits<double>::infinity();
  double gap_bound = 0.0;
};

/// Exhaustive grid over the qualities of the active pools, one LP per grid point, then a
/// coordinate-wise golden-section pass inside the best cell.
inline GridOutcome grid_search(const PoolingNetwork& net, const PoolingData& d, const PoolingOptions& opt) {
  const auto L = net.num_pools(), K = net.num_qualities();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> dims;  // (pool, quality) of each grid axis
  for (Eigen::Index l = 0; l < L; ++l)
    if (d.pool_on[l] != 0.0)
      for (Eigen::Index k = 0; k < K; ++k) dims.emplace_back(l, k);
  const auto nd = static_cast<Eigen::Index>(dims.size());
  if (nd > PoolingOptions::kMaxGridDims)
    throw UnsupportedInstance("pooling: " + std::to_string(nd) +
                              " pool-quality dimensions exceed the bundled grid solver limit (" +
                              std::to_string(PoolingOptions::kMaxGridDims) +
                              "); attach an external solver via BO4IO_ORACLE_CMD");

  Vector lo(K), hi(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    lo[k] = d.C.col(k).minCoeff();
    hi[k] = d.C.col(k).maxCoeff();
  }
  std::vector<int> npts(static_cast<std::size_t>(nd));
  for (Eigen::Index a = 0; a < nd; ++a) {
    const double range = hi[dims[static_cast<std::size_t>(a)].second] - lo[dims[static_cast<std::size_t>(a)].second];
    int n = opt.points_per_dim > 0 ? opt.points_per_dim : (nd <= 1 ? 201 : nd == 2 ? 41 : 13);
    if (opt.delta_p > 0.0) n = static_cast<int>(std::llround(range / opt.delta_p)) + 1;
    npts[static_cast<std::size_t>(a)] = range > 0.0 ? std::max(n, 2) : 1;
  }
  auto coord = [&](Eigen::Index a, int i) {
    const auto k = dims[static_cast<std::size_t>(a)].second;
    const int n = npts[static_cast<std::size_t>(a)];
    return n == 1 ? lo[k] : lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) / (n - 1);
  };
  Matrix p = Matrix::Zero(L, K);
  for (Eigen::Index l = 0; l < L; ++l) p.row(l) = lo.transpose();

  GridOutcome out;
  auto evaluate = [&](const Matrix& pm, Vector* flows) {
    const auto s = solve_lp(flow_lp(net, d, pm));
    if (s.status != SolveStatus::Optimal) return std::numeric_limits<double>::infinity();
    if (flows) *flows = s.x;
    return s.objective;
  };

  std::size_t total = 1;
  for (int n : npts) total *= static_cast<std::size_t>(n);
  std::vector<double> values(total);
  std::vector<int> idx(static_cast<std::size_t>(nd), 0);
  std::size_t best_flat = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (Eigen::Index a = nd - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(npts[static_cast<std::size_t>(a)]));
      rem /= static_cast<std::size_t>(npts[static_cast<std::size_t>(a)]);
      p(dims[static_cast<std::size_t>(a)].first, dims[static_cast<std::size_t>(a)].second) = coord(a, idx[static_cast<std::size_t>(a)]);
    }
    values[flat] = evaluate(p, nullptr);
    if (values[flat] < out.coarse_value) {
      out.coarse_value = values[flat];
      best_flat = flat;
    }
  }
  if (!std::isfinite(out.coarse_value)) return out;
  out.feasible = true;

  // Certified-gap heuristic: half the largest value jump between grid neighbours.
  std::size_t stride = 1;
  for (Eigen::Index a = nd - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(npts[static_cast<std::size_t>(a)]);
    for (std::size_t flat = 0; flat < total; ++flat) {
      if ((flat / stride) % n == n - 1) continue;
      const double v0 = values[flat], v1 = values[flat + stride];
      if (std::isfinite(v0) && std::isfinite(v1)) out.gap_bound = std::max(out.gap_bound, 0.5 * std::abs(v1 - v0));
    }
    stride *= n;
  }

  {
    std::size_t rem = best_flat;
    for (Eigen::Index a = nd - 1; a >= 0; --a) {
      const auto n = static_cast<std::size_t>(npts[static_cast<std::size_t>(a)]);
      p(dims[static_cast<std::size_t>(a)].first, dims[static_cast<std::size_t>(a)].second) =
          coord(a, static_cast<int>(rem % n));
      rem /= n;
    }
  }
  out.p = p;
  out.value = evaluate(p, &out.flows);

  if (opt.refine) {
    constexpr double invphi = 0.6180339887498949;
    for (Eigen::Index a = 0; a < nd; ++a) {
      const auto n = npts[static_cast<std::size_t>(a)];
      if (n < 2) continue;
      const auto [l, k] = dims[static_cast<std::size_t>(a)];
      const double h = (hi[k] - lo[k]) / (n - 1);
      double x0 = std::max(lo[k], out.p(l, k) - h), x1 = std::min(hi[k], out.p(l, k) + h);
      Matrix q = out.p;
      auto f = [&](double x) {
        q(l, k) = x;
        return evaluate(q, nullptr);
      };
      double c = x1 - invphi * (x1 - x0), e = x0 + invphi * (x1 - x0);
      double fc = f(c), fe = f(e);
      for (int it = 0; it < opt.golden_iterations; ++it) {
        if (fc <= fe) {
          x1 = e;
          e = c;
          fe = fc;
          c = x1 - invphi * (x1 - x0);
          fc = f(c);
        } else {
          x0 = c;
          c = e;
          fc = fe;
          e = x0 + invphi * (x1 - x0);
          fe = f(e);
        }
      }
      const double xb = fc <= fe ? c : e;
      q(l, k) = xb;
      Vector flows;
      const double v = evaluate(q, &flows);
      if (v < out.value) {  // refinement never worsens the incumbent
        out.value = v;
        out.p = q;
        out.flows = std::move(flows);
      }
    }
  }
  return out;
}

inline std::vector<VariableBlock> pooling_layout(const PoolingNetwork& net, bool generalized) {
  const auto nf = static_cast<Eigen::Index>(net.arcs_f.size()), ny = static_cast<Eigen::Index>(net.arcs_y.size()),
             nz = static_cast<Eigen::Index>(net.arcs_z.size()), np = net.num_pools() * net.num_qualities();
  std::vector<VariableBlock> lay{{"f", 0, nf}, {"y", nf, ny}, {"z", nf + ny, nz}, {"p", nf + ny + nz, np}};
  if (generalized) {
    lay.push_back({"gamma_init", nf + ny + nz + np, net.num_feeds()});
    lay.push_back({"gamma_pool", nf + ny + nz + np + net.num_feeds(), net.num_pools()});
  }
  return lay;
}

inline Vector flatten_rows(const Matrix& m) {
  Vector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
  return v;
}

}  // namespace detail

/// Standard pooling with demand caps theta_j (one per product). Global within the grid tolerance.
inline FopSolution solve_pooling(const PoolingNetwork& net, const InputFields& u, const Vector& theta,
                                 const PoolingOptions& opt = {}) {
  net.validate();
  if (theta.size() != net.num_products())
    throw InputError("pooling: expected " + std::to_string(net.num_products()) + " demand caps");
  if (net.num_pools() * net.num_qualities() > PoolingOptions::kMaxGridDims)
    throw UnsupportedInstance("pooling: |L|*|K| = " + std::to_string(net.num_pools() * net.num_qualities()) +
                              " exceeds the bundled grid solver limit (3); attach an external solver via "
                              "BO4IO_ORACLE_CMD");
  auto d = detail::resolve(net, u);
  d.cap = theta;
  const auto g = detail::grid_search(net, d, opt);
  if (!g.feasible) return FopSolution::infeasible();
  FopSolution s;
  s.layout = detail::pooling_layout(net, false);
  s.x.resize(g.flows.size() + g.p.size());
  s.x << g.flows, detail::flatten_rows(g.p);
  s.objective = g.value;
  s.status = SolveStatus::GridOptimal;
  s.gap_bound = g.gap_bound;
  return s;
}

/// Generalized pooling with product quality limits theta (|J| x |K|, row-major). Enumerates all
/// installation patterns; each pattern is a standard-pooling grid+LP subproblem.
inline FopSolution solve_genpooling(const GenPoolingNetwork& net, const InputFields& u, const Vector& theta,
                                    const PoolingOptions& opt = {}) {
  net.validate();
  const auto S = net.num_feeds(), L = net.num_pools(), J = net.num_products(), K = net.num_qualities();
  if (theta.size() != J * K) throw InputError("genpooling: expected |J|*|K| = " + std::to_string(J * K) + " limits");
  if (S + L > PoolingOptions::kMaxBinaries)
    throw UnsupportedInstance("genpooling: |S|+|L| = " + std::to_string(S + L) +
                              " exceeds the enumeration limit (10); attach an external solver via BO4IO_ORACLE_CMD");
  if (L * K > PoolingOptions::kMaxGridDims)
    throw UnsupportedInstance("genpooling: |L|*|K| exceeds the bundled grid solver limit (3); attach an external "
                              "solver via BO4IO_ORACLE_CMD");
  auto base = detail::resolve(net, u);
  const Vector eta = detail::field_or(u, "cost", net.feed_cost);
  for (std::size_t a = 0; a < net.arcs_f.size(); ++a)
    base.cost_f[static_cast<Eigen::Index>(a)] = eta[net.arcs_f[a].from] + net.arc_cost_f[static_cast<Eigen::Index>(a)];
  base.limit = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(theta.data(), J, K);
  base.cap = detail::field_or(u, "demand", net.demand);
  base.equality_demand = true;
  base.pool_capacity = net.pool_capacity;

  const std::uint64_t n_patterns = std::uint64_t{1} << (S + L);
  struct PatternResult {
    detail::GridOutcome g;
    double total = std::numeric_limits<double>::infinity();
    std::uint64_t mask = 0;
  };
  std::vector<PatternResult> results;
  for (std::uint64_t mask = 0; mask < n_patterns; ++mask) {
    auto d = base;
    double fixed = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) {
      d.feed_on[s] = (mask >> s) & 1U ? 1.0 : 0.0;
      fixed += net.install_feed[s] * d.feed_on[s];
    }
    for (Eigen::Index l = 0; l < L; ++l) {
      d.pool_on[l] = (mask >> (S + l)) & 1U ? 1.0 : 0.0;
      fixed += net.install_pool[l] * d.pool_on[l];
    }
    auto g = detail::grid_search(net, d, opt);
    if (!g.feasible) continue;
    results.push_back({std::move(g), 0.0, mask});
    results.back().total = results.back().g.value + fixed;
  }
  if (results.empty()) return FopSolution::infeasible();
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].total < results[best].total) best = i;
  const auto& r = results[best];
  double gap = 0.0;  // another pattern could still win if its own grid gap exceeds its deficit
  for (const auto& o : results) gap = std::max(gap, o.g.gap_bound - (o.total - r.total));

  FopSolution s;
  s.layout = detail::pooling_layout(net, true);
  Vector gi(S), gp(L);
  for (Eigen::Index i = 0; i < S; ++i) gi[i] = (r.mask >> i) & 1U ? 1.0 : 0.0;
  for (Eigen::Index l = 0; l < L; ++l) gp[l] = (r.mask >> (S + l)) & 1U ? 1.0 : 0.0;
  s.x.resize(r.g.flows.size() + L * K + S + L);
  s.x << r.g.flows, detail::flatten_rows(r.g.p), gi, gp;
  s.objective = r.total;
  s.status = SolveStatus::GridOptimal;
  s.gap_bound = gap;
  return s;
}

/// Largest scaled violation of the standard pooling constraints by solution x (bilinear rows
/// evaluated with the solution's own p).
inline double pooling_violation(const PoolingNetwork& net, const InputFields& u, const Vector& theta,
                                const FopSolution& sol) {
  auto d = detail::resolve(net, u);
  d.cap = theta;
  const Vector pv = sol.block("p");
  Matrix p(net.num_pools(), net.num_qualities());
  for (Eigen::Index l = 0; l < p.rows(); ++l)
    for (Eigen::Index k = 0; k < p.cols(); ++k) p(l, k) = pv[l * p.cols() + k];
  const auto lp = detail::flow_lp(net, d, p);
  const Vector flows = sol.gather({"f", "y", "z"});
  const double scale = 1.0 + flows.cwiseAbs().maxCoeff();
  return lp_violation(lp, flows) / scale;
}

}  // namespace bo4io
