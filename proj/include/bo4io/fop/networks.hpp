#pragma once

#include <map>
#include <string>
#include <vector>

#include "bo4io/document.hpp"
#include "bo4io/fop/fba.hpp"
#include "bo4io/fop/pooling.hpp"

namespace bo4io {

inline constexpr std::string_view kFopMagic = "bo4io-fop v1";

// ---------------------------------------------------------------------------------------------
// Network documents.
//
// FBA:
//   family fba
//   lambda <value>
//   metabolites <name>...
//   reaction <name> <L> <U> <metabolite>:<coefficient>...
//   objective <reaction> min|max          (order defines the weight vector)
//   randomize <reaction>...               (bounds drawn per observation by datagen)
//
// Pooling / generalized pooling:
//   family pooling|genpooling
//   qualities <name>...
//   feed <name> <cost> <availability> <C_1>...<C_K>
//   feed_install <feed> <cost>                        (genpooling)
//   pool <name> [<capacity> <install_cost>]           (capacity/install: genpooling)
//   product <name> <cap> <limit_1>...<limit_K>        (cap: demand cap, or hard demand for genpooling)
//   arc_f <feed> <pool> [<arc_cost>]
//   arc_y <pool> <product> <revenue>
//   arc_z <feed> <product> <revenue>
// ---------------------------------------------------------------------------------------------

namespace detail {

inline Eigen::Index index_of(const std::vector<std::string>& names, const std::string& n, const TextDocument& doc,
                             const TextDocument::Line& line, const char* what) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == n) return static_cast<Eigen::Index>(i);
  throw InputError(doc.where(line) + ": unknown " + what + " '" + n + "'");
}

inline void need(const TextDocument& doc, const TextDocument::Line& l, std::size_t n) {
  if (l.values.size() < n)
    throw InputError(doc.where(l) + ": '" + l.key + "' expects at least " + std::to_string(n) + " values");
}

inline std::string family_of(const TextDocument& doc) { return doc.string("family"); }

}  // namespace detail

inline FbaProblem fba_from_document(const TextDocument& doc) {
  if (detail::family_of(doc) != "fba") throw InputError(doc.origin() + ": not an fba document");
  FbaProblem p;
  p.lambda = doc.number("lambda");
  p.metabolites = doc.strings("metabolites");
  const auto reactions = doc.all("reaction");
  const auto nm = static_cast<Eigen::Index>(p.metabolites.size());
  const auto nr = static_cast<Eigen::Index>(reactions.size());
  p.stoichiometry = Matrix::Zero(nm, nr);
  p.lower.resize(nr);
  p.upper.resize(nr);
  for (Eigen::Index k = 0; k < nr; ++k) {
    const auto& l = *reactions[static_cast<std::size_t>(k)];
    detail::need(doc, l, 3);
    p.reactions.push_back(l.values[0]);
    p.lower[k] = parse_number(l.values[1], doc.where(l));
    p.upper[k] = parse_number(l.values[2], doc.where(l));
    for (std::size_t t = 3; t < l.values.size(); ++t) {
      const auto& tok = l.values[t];
      const auto colon = tok.rfind(':');
      if (colon == std::string::npos) throw InputError(doc.where(l) + ": expected metabolite:coefficient");
      const auto j = detail::index_of(p.metabolites, tok.substr(0, colon), doc, l, "metabolite");
      p.stoichiometry(j, k) += parse_number(tok.substr(colon + 1), doc.where(l));
    }
  }
  const auto objs = doc.all("objective");
  p.objective_sense.resize(static_cast<Eigen::Index>(objs.size()));
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto& l = *objs[i];
    detail::need(doc, l, 2);
    p.objective.push_back(detail::index_of(p.reactions, l.values[0], doc, l, "reaction"));
    if (l.values[1] == "min") p.objective_sense[static_cast<Eigen::Index>(i)] = 1.0;
    else if (l.values[1] == "max") p.objective_sense[static_cast<Eigen::Index>(i)] = -1.0;
    else throw InputError(doc.where(l) + ": objective sense must be min or max");
  }
  for (const auto* l : doc.all("randomize"))
    for (const auto& n : l->values) p.randomized.push_back(detail::index_of(p.reactions, n, doc, *l, "reaction"));
  p.validate();
  return p;
}

inline TextDocument to_document(const FbaProblem& p) {
  TextDocument doc{std::string(kFopMagic)};
  doc.add("family", std::string("fba"));
  doc.add("lambda", p.lambda);
  doc.add("metabolites", p.metabolites);
  for (Eigen::Index k = 0; k < p.num_reactions(); ++k) {
    std::vector<std::string> v{p.reactions[static_cast<std::size_t>(k)], format_number(p.lower[k]),
                               format_number(p.upper[k])};
    for (Eigen::Index j = 0; j < p.stoichiometry.rows(); ++j)
      if (p.stoichiometry(j, k) != 0.0)
        v.push_back(p.metabolites[static_cast<std::size_t>(j)] + ":" + format_number(p.stoichiometry(j, k)));
    doc.add("reaction", v);
  }
  for (Eigen::Index i = 0; i < p.num_objectives(); ++i)
    doc.add("objective", {p.reactions[static_cast<std::size_t>(p.objective[static_cast<std::size_t>(i)])],
                          std::string(p.objective_sense[i] < 0 ? "max" : "min")});
  if (!p.randomized.empty()) {
    std::vector<std::string> v;
    for (auto k : p.randomized) v.push_back(p.reactions[static_cast<std::size_t>(k)]);
    doc.add("randomize", v);
  }
  return doc;
}

namespace detail {

inline void read_pooling_common(const TextDocument& doc, PoolingNetwork& n, bool generalized) {
  n.qualities = doc.strings("qualities");
  const auto K = static_cast<Eigen::Index>(n.qualities.size());
  const auto feeds = doc.all("feed"), pools = doc.all("pool"), products = doc.all("product");
  const auto S = static_cast<Eigen::Index>(feeds.size()), J = static_cast<Eigen::Index>(products.size());
  n.feed_quality.resize(S, K);
  n.feed_cost.resize(S);
  n.availability.resize(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto& l = *feeds[static_cast<std::size_t>(s)];
    if (l.values.size() != static_cast<std::size_t>(3 + K))
      throw InputError(doc.where(l) + ": feed expects name, cost, availability and " + std::to_string(K) +
                       " qualities");
    n.feeds.push_back(l.values[0]);
    const Vector v = doc.numbers_of(l, 1);
    n.feed_cost[s] = v[0];
    n.availability[s] = v[1];
    n.feed_quality.row(s) = v.tail(K).transpose();
  }
  for (const auto* l : pools) {
    need(doc, *l, 1);
    n.pools.push_back(l->values[0]);
  }
  n.quality_limit.resize(J, K);
  n.demand_cap.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& l = *products[static_cast<std::size_t>(j)];
    if (l.values.size() != static_cast<std::size_t>(2 + K))
      throw InputError(doc.where(l) + ": product expects name, " + std::string(generalized ? "demand" : "demand cap") +
                       " and " + std::to_string(K) + " quality limits");
    n.products.push_back(l.values[0]);
    const Vector v = doc.numbers_of(l, 1);
    n.demand_cap[j] = v[0];
    n.quality_limit.row(j) = v.tail(K).transpose();
  }
  for (const auto* l : doc.all("arc_f")) {
    need(doc, *l, 2);
    n.arcs_f.push_back({index_of(n.feeds, l->values[0], doc, *l, "feed"), index_of(n.pools, l->values[1], doc, *l, "pool")});
  }
  std::vector<double> ry, rz;
  for (const auto* l : doc.all("arc_y")) {
    need(doc, *l, 3);
    n.arcs_y.push_back({index_of(n.pools, l->values[0], doc, *l, "pool"), index_of(n.products, l->values[1], doc, *l, "product")});
    ry.push_back(parse_number(l->values[2], doc.where(*l)));
  }
  for (const auto* l : doc.all("arc_z")) {
    need(doc, *l, 3);
    n.arcs_z.push_back({index_of(n.feeds, l->values[0], doc, *l, "feed"), index_of(n.products, l->values[1], doc, *l, "product")});
    rz.push_back(parse_number(l->values[2], doc.where(*l)));
  }
  n.revenue_y = Eigen::Map<Vector>(ry.data(), static_cast<Eigen::Index>(ry.size()));
  n.revenue_z = Eigen::Map<Vector>(rz.data(), static_cast<Eigen::Index>(rz.size()));
}

inline void write_pooling_common(TextDocument& doc, const PoolingNetwork& n, const GenPoolingNetwork* g) {
  doc.add("qualities", n.qualities);
  for (Eigen::Index s = 0; s < n.num_feeds(); ++s) {
    Vector v(2 + n.num_qualities());
    v << n.feed_cost[s], n.availability[s], n.feed_quality.row(s).transpose();
    doc.add("feed", {n.feeds[static_cast<std::size_t>(s)]}, v);
  }
  if (g)
    for (Eigen::Index s = 0; s < n.num_feeds(); ++s)
      doc.add("feed_install", {n.feeds[static_cast<std::size_t>(s)], format_number(g->install_feed[s])});
  for (Eigen::Index l = 0; l < n.num_pools(); ++l) {
    if (g)
      doc.add("pool", {n.pools[static_cast<std::size_t>(l)], format_number(g->pool_capacity[l]),
                       format_number(g->install_pool[l])});
    else
      doc.add("pool", n.pools[static_cast<std::size_t>(l)]);
  }
  for (Eigen::Index j = 0; j < n.num_products(); ++j) {
    Vector v(1 + n.num_qualities());
    v << (g ? g->demand[j] : n.demand_cap[j]), n.quality_limit.row(j).transpose();
    doc.add("product", {n.products[static_cast<std::size_t>(j)]}, v);
  }
  for (std::size_t a = 0; a < n.arcs_f.size(); ++a) {
    std::vector<std::string> v{n.feeds[static_cast<std::size_t>(n.arcs_f[a].from)],
                               n.pools[static_cast<std::size_t>(n.arcs_f[a].to)]};
    if (g) v.push_back(format_number(g->arc_cost_f[static_cast<Eigen::Index>(a)]));
    doc.add("arc_f", v);
  }
  for (std::size_t a = 0; a < n.arcs_y.size(); ++a)
    doc.add("arc_y", {n.pools[static_cast<std::size_t>(n.arcs_y[a].from)], n.products[static_cast<std::size_t>(n.arcs_y[a].to)],
                      format_number(n.revenue_y[static_cast<Eigen::Index>(a)])});
  for (std::size_t a = 0; a < n.arcs_z.size(); ++a)
    doc.add("arc_z", {n.feeds[static_cast<std::size_t>(n.arcs_z[a].from)], n.products[static_cast<std::size_t>(n.arcs_z[a].to)],
                      format_number(n.revenue_z[static_cast<Eigen::Index>(a)])});
}

}  // namespace detail

inline PoolingNetwork pooling_from_document(const TextDocument& doc) {
  if (detail::family_of(doc) != "pooling") throw InputError(doc.origin() + ": not a pooling document");
  PoolingNetwork n;
  detail::read_pooling_common(doc, n, false);
  n.validate();
  return n;
}

inline GenPoolingNetwork genpooling_from_document(const TextDocument& doc) {
  if (detail::family_of(doc) != "genpooling") throw InputError(doc.origin() + ": not a genpooling document");
  GenPoolingNetwork n;
  detail::read_pooling_common(doc, n, true);
  n.demand = n.demand_cap;
  n.install_feed = Vector::Zero(n.num_feeds());
  for (const auto* l : doc.all("feed_install")) {
    detail::need(doc, *l, 2);
    n.install_feed[detail::index_of(n.feeds, l->values[0], doc, *l, "feed")] = parse_number(l->values[1], doc.where(*l));
  }
  n.pool_capacity = Vector::Constant(n.num_pools(), std::numeric_limits<double>::infinity());
  n.install_pool = Vector::Zero(n.num_pools());
  const auto pools = doc.all("pool");
  for (std::size_t l = 0; l < pools.size(); ++l) {
    const auto& line = *pools[l];
    if (line.values.size() >= 2) n.pool_capacity[static_cast<Eigen::Index>(l)] = parse_number(line.values[1], doc.where(line));
    if (line.values.size() >= 3) n.install_pool[static_cast<Eigen::Index>(l)] = parse_number(line.values[2], doc.where(line));
  }
  n.arc_cost_f = Vector::Zero(static_cast<Eigen::Index>(n.arcs_f.size()));
  const auto arcs = doc.all("arc_f");
  for (std::size_t a = 0; a < arcs.size(); ++a)
    if (arcs[a]->values.size() >= 3)
      n.arc_cost_f[static_cast<Eigen::Index>(a)] = parse_number(arcs[a]->values[2], doc.where(*arcs[a]));
  n.validate();
  return n;
}

inline TextDocument to_document(const PoolingNetwork& n) {
  TextDocument doc{std::string(kFopMagic)};
  doc.add("family", std::string("pooling"));
  detail::write_pooling_common(doc, n, nullptr);
  return doc;
}

inline TextDocument to_document(const GenPoolingNetwork& n) {
  TextDocument doc{std::string(kFopMagic)};
  doc.add("family", std::string("genpooling"));
  detail::write_pooling_common(doc, n, &n);
  return doc;
}

// ---------------------------------------------------------------------------------------------
// Bundled networks.

inline constexpr const char* kToy10Fba = R"(bo4io-fop v1
# 10-metabolite toy network: glycolysis-like trunk with two branches and a
# biomass drain. Uptake (EX_A) and one branch (R2) get random bounds per observation.
family fba
lambda 0.005
metabolites A B C D E F G H ATP NADH
reaction EX_A 0 1000 A:1
reaction R1 0 1000 A:-1 B:1 ATP:1
reaction R2 0 1000 B:-1 C:1 NADH:1
reaction R3 0 1000 B:-1 D:1
reaction R4 0 1000 C:-1 E:1 ATP:1
reaction R5 0 1000 D:-1 E:1 NADH:1
reaction R6 0 1000 E:-1 F:1
reaction R7 0 1000 E:-1 G:1 ATP:2
reaction R8 0 1000 F:-1 H:1 NADH:1
reaction BIOMASS 0 1000 B:-1 F:-1 ATP:-3
reaction ATPM 0 1000 ATP:-1
reaction EX_G 0 1000 G:-1
reaction EX_H 0 1000 H:-1
reaction NADH_OX 0 1000 NADH:-1
objective BIOMASS max
objective ATPM max
objective EX_G min
objective NADH_OX min
randomize EX_A R2
)";

inline constexpr const char* kHaverly1 = R"(bo4io-fop v1
# Haverly (1978) pooling problem 1: nominal optimum profit 400 at pool quality 1.
# Only feed->pool flows carry feed cost in the model, so direct-arc revenues are
# net margins (price - feed cost).
family pooling
qualities sulfur
feed S1 6 300 3
feed S2 16 300 1
feed S3 10 300 2
pool P1
product X 100 2.5
product Y 200 1.5
arc_f S1 P1
arc_f S2 P1
arc_y P1 X 9
arc_y P1 Y 15
arc_z S3 X -1
arc_z S3 Y 5
)";

inline constexpr const char* kTwoPool = R"(bo4io-fop v1
# Synthetic two-pool network, one quality.
family pooling
qualities sulfur
feed S1 6 300 3
feed S2 16 300 1
feed S3 10 300 2
feed S4 13 300 0.5
pool P1
pool P2
product X 150 2.5
product Y 200 1.5
arc_f S1 P1
arc_f S2 P1
arc_f S3 P2
arc_f S4 P2
arc_y P1 X 9
arc_y P1 Y 15
arc_y P2 X 9
arc_y P2 Y 15
arc_z S3 X -1
)";

inline constexpr const char* kTinyGenPooling = R"(bo4io-fop v1
# Tiny generalized pooling network: 2 feeds, 1 pool, 2 products, 2 qualities.
# Product J1 is supplied only through the pool; J2 can also be blended directly.
family genpooling
qualities q1 q2
feed S1 1.0 2 0.1 0.5
feed S2 0.5 2 0.7 0.1
feed_install S1 0.5
feed_install S2 0.3
pool P1 3 0.4
product J1 1 0.4 0.6
product J2 1 0.4 0.6
arc_f S1 P1 0.05
arc_f S2 P1 0.05
arc_y P1 J1 2.0
arc_y P1 J2 1.5
arc_z S1 J2 0.6
arc_z S2 J2 1.1
)";

/// Bundled network document by name: toy10, haverly1, twopool, tinygen.
inline TextDocument bundled_network(const std::string& name) {
  static const std::map<std::string, const char*> table{
      {"toy10", kToy10Fba}, {"haverly1", kHaverly1}, {"twopool", kTwoPool}, {"tinygen", kTinyGenPooling}};
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown bundled network '" + name + "'");
  return TextDocument::parse_string(it->second, kFopMagic, "bundled:" + name);
}

/// A bundled name, or a path to a `bo4io-fop v1` file.
inline TextDocument load_network(const std::string& name_or_path) {
  if (name_or_path == "toy10" || name_or_path == "haverly1" || name_or_path == "twopool" || name_or_path == "tinygen")
    return bundled_network(name_or_path);
  return TextDocument::load(name_or_path, kFopMagic);
}

}  // namespace bo4io
