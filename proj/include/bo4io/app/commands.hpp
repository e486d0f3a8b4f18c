#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bo4io/app/config.hpp"
#include "bo4io/app/manifest.hpp"
#include "bo4io/bo_loop.hpp"
#include "bo4io/datagen.hpp"
#include "bo4io/fop/oracle.hpp"
#include "bo4io/loss.hpp"
#include "bo4io/profile.hpp"

namespace bo4io::app {

namespace fs = std::filesystem;

/// File names inside the output directory.
struct Layout {
  fs::path dir;
  fs::path train() const { return dir / "train.obs"; }
  fs::path test() const { return dir / "test.obs"; }
  fs::path truth() const { return dir / "truth.txt"; }
  fs::path trace() const { return dir / "trace.csv"; }
  fs::path errors() const { return dir / "errors.csv"; }
  fs::path summary() const { return dir / "summary.txt"; }
  fs::path widths() const { return dir / "ci_width.csv"; }
  fs::path profile(int k) const { return dir / ("profile_" + std::to_string(k) + ".txt"); }
  fs::path manifest(const std::string& cmd) const { return dir / (cmd + ".manifest.json"); }
};

inline std::string join_numbers(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_number(v[i]);
  return s;
}

inline Layout prepare(const ExperimentConfig& c) {
  Layout l{c.out_dir};
  std::error_code ec;
  fs::create_directories(l.dir, ec);
  if (ec) throw IoError("cannot create output directory " + l.dir.string() + ": " + ec.message());
  return l;
}

struct Setup {
  std::shared_ptr<const ForwardProblem> fop;
  Parameterization par;
  ParameterDomain domain;
};

inline Setup setup(const ExperimentConfig& c) {
  const auto doc = load_network(c.network);
  SolverOptions so;
  so.pooling.delta_p = c.delta_p;
  const bool fba = doc.string("family") == "fba";
  auto fp = make_forward(doc, fba ? c.d + 1 : 0, so);
  auto [par, dom] = default_parameterization(*fp, c.d);
  return {with_env_oracle(fp, c.oracle_timeout), par, dom};
}

inline LossConfig loss_config(const ExperimentConfig& c, const Setup& s, const ObservationSet& obs) {
  LossConfig lc;
  lc.fop = s.fop;
  lc.par = s.par;
  lc.penalty_per_observation = c.penalty;
  lc.workers = c.workers;
  if (c.weight == "inverse_noise") lc.weight = LossConfig::inverse_noise_weight(obs.items.front().x.size(), c.sigma);
  return lc;
}

inline BOConfig bo_config(const ExperimentConfig& c, const Setup& s) {
  BOConfig b;
  b.domain = s.domain;
  b.T = c.T;
  b.n0 = c.n0;
  b.seed = c.seed;
  b.refit_every = c.refit_every;
  b.acquisition.beta = c.beta;
  b.acquisition.restarts = c.acq_restarts;
  b.acquisition.scatter_per_dim = c.scatter_per_dim;
  b.acquisition.workers = c.workers;
  b.fit.restarts = c.fit_restarts;
  b.fit.nu = parse_matern(c.matern);
  b.fit.workers = c.workers;
  return b;
}

/// Surrogate on the first `rows` trace rows, fitted exactly as the BO loop fits before its
/// iteration `next_iteration`.
inline GPModel surrogate(const ExperimentConfig& c, const Setup& s, const std::vector<TraceRow>& trace,
                         std::size_t rows, int next_iteration) {
  EvaluationDataset data;
  for (std::size_t i = 0; i < rows; ++i) data.push_back(trace[i].theta, trace[i].loss);
  const auto b = bo_config(c, s);
  return fit(data, s.domain, stream_seed(c.seed, tag_of("fit"), static_cast<std::uint64_t>(next_iteration)), b.fit);
}

// ---------------------------------------------------------------------------------------------

inline int cmd_datagen(const ExperimentConfig& c, std::ostream& out) {
  const auto l = prepare(c);
  const auto s = setup(c);
  GenSpec spec;
  spec.network = c.network;
  spec.d = c.d;
  spec.n_train = c.n_train;
  spec.n_test = c.n_test;
  spec.sigma = c.sigma;
  spec.seed = c.seed;
  spec.max_redraws = c.max_redraws;
  spec.workers = c.workers;
  const auto g = generate(spec, *s.fop, s.par);
  write_file(l.train(), to_document(g.train).serialize());
  write_file(l.test(), to_document(g.test).serialize());
  TextDocument truth{"bo4io-truth v1"};
  truth.add("family", g.family);
  truth.add("network", c.network);
  truth.add("parameterization", s.par.kind_name());
  truth.add("theta", {}, g.theta_true);
  truth.add("theta_full", {}, g.theta_true_full);
  if (g.train.standardized()) {
    truth.add("center", {}, g.train.center);
    truth.add("scale", {}, g.train.scale);
  }
  write_file(l.truth(), truth.serialize());

  Manifest m("datagen", serialize_config(c), c.seed);
  m.j["theta_true"] = std::vector<double>(g.theta_true.data(), g.theta_true.data() + g.theta_true.size());
  if (g.train.standardized()) {
    m.j["standardization"]["center"] = std::vector<double>(g.train.center.data(), g.train.center.data() + g.train.center.size());
    m.j["standardization"]["scale"] = std::vector<double>(g.train.scale.data(), g.train.scale.data() + g.train.scale.size());
  }
  for (const auto& p : {l.train(), l.test(), l.truth()}) m.output(p);
  m.save(l.manifest("datagen"));
  out << "datagen: " << g.train.size() << " train / " << g.test.size() << " test observations -> " << l.dir.string()
      << "\n";
  return 0;
}

inline Vector truth_theta(const Layout& l) {
  if (!fs::exists(l.truth())) return {};
  return TextDocument::load(l.truth().string(), "bo4io-truth v1").numbers("theta");
}

inline int cmd_run(const ExperimentConfig& c, bool resume, std::ostream& out) {
  const auto l = prepare(c);
  const auto s = setup(c);
  const auto train = load_observations(l.train().string());
  const auto lc = loss_config(c, s, train);
  lc.validate(train);
  auto b = bo_config(c, s);
  b.trace_path = l.trace().string();
  b.resume = resume;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t penalties = 0;
  const auto res = run(b, [&](const Vector& x) {
    const auto r = evaluate_loss(x, train, lc);
    if (r.penalized) {
      ++penalties;
      std::cerr << "run: infeasible forward problem(s) at theta = " << join_numbers(x) << " (" << r.infeasible
                << " observations), penalty applied\n";
    }
    return Evaluation{r.value, r.penalized, r.fop_seconds};
  });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Reporting errors along the best-so-far trajectory, computed after the run.
  std::optional<ObservationSet> test;
  if (fs::exists(l.test())) {
    test = load_observations(l.test().string());
    if (test->items.empty()) test.reset();
  }
  const Vector theta_true = truth_theta(l);
  std::string errors = "iteration,best,parameter_error,train_error,test_error\n";
  Vector inc;
  double inc_loss = std::numeric_limits<double>::infinity();
  double pe = std::numeric_limits<double>::quiet_NaN(), tr = pe, te = pe;
  for (const auto& row : res.trace) {
    if (row.loss < inc_loss || inc.size() == 0) {
      inc = row.theta;
      inc_loss = row.loss;
      tr = decision_error(inc, train, lc).value;
      te = test ? decision_error(inc, *test, lc).value : std::numeric_limits<double>::quiet_NaN();
      pe = theta_true.size() ? parameter_error(s.par.expand(theta_true), s.par.expand(inc))
                             : std::numeric_limits<double>::quiet_NaN();
    }
    errors += std::to_string(row.iteration) + "," + format_number(inc_loss) + "," + format_number(pe) + "," +
              format_number(tr) + "," + format_number(te) + "\n";
  }
  write_file(l.errors(), errors);

  TextDocument sum{"bo4io-summary v1"};
  sum.add("incumbent", {}, res.incumbent);
  sum.add("incumbent_full", {}, s.par.expand(res.incumbent));
  sum.add("loss", res.incumbent_loss);
  sum.add("evaluations", static_cast<double>(res.trace.size()));
  sum.add("parameter_error", pe);
  sum.add("train_error", tr);
  sum.add("test_error", te);
  std::size_t penalized_rows = 0;
  double bo_s = 0.0, fop_s = 0.0;
  for (const auto& r : res.trace) {
    penalized_rows += r.penalized ? 1 : 0;
    bo_s += r.bo_seconds;
    fop_s += r.fop_seconds;
  }
  sum.add("penalized_evaluations", static_cast<double>(penalized_rows));
  write_file(l.summary(), sum.serialize());

  Manifest m("run", serialize_config(c), c.seed);
  m.input(l.train());
  if (test) m.input(l.test());
  for (const auto& p : {l.trace(), l.errors(), l.summary()}) m.output(p);
  m.j["resume"] = resume;
  m.j["time_s"] = {{"wall", wall}, {"bo", bo_s}, {"fop", fop_s}};
  m.save(l.manifest("run"));
  out << "run: best loss " << format_number(res.incumbent_loss) << " at theta = " << join_numbers(res.incumbent)
      << "\n";
  out << "run: parameter_error " << format_number(pe) << ", train_error " << format_number(tr) << ", test_error "
      << format_number(te) << "\n";
  out << "run: time bo " << bo_s << " s, fop " << fop_s << " s, wall " << wall << " s\n";
  return 0;
}

inline int cmd_profile(const ExperimentConfig& c, std::ostream& out) {
  const auto l = prepare(c);
  const auto s = setup(c);
  const auto trace = read_trace(l.trace().string());
  if (trace.empty()) throw InputError(l.trace().string() + ": empty trace");
  if (trace.front().theta.size() != c.d) throw ConfigError("profile: trace dimension does not match data.d");
  const int done = static_cast<int>(std::count_if(trace.begin(), trace.end(), [](const TraceRow& r) { return r.iteration > 0; }));
  const std::size_t n0 = trace.size() - static_cast<std::size_t>(done);

  std::vector<int> ks = c.parameters;
  if (ks.empty())
    for (int k = 1; k <= c.d; ++k) ks.push_back(k);
  auto profile_cfg = [&](int k) {
    ProfileConfig pc;
    pc.k = k - 1;
    pc.lower = s.domain.effective_lower()[k - 1];
    pc.upper = s.domain.effective_upper()[k - 1];
    pc.delta = c.delta;
    pc.rho = c.rho;
    pc.alpha = c.alpha;
    pc.df = c.df;
    pc.seed = c.seed;
    pc.workers = c.workers;
    return pc;
  };
  auto incumbent = [&](std::size_t rows) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows; ++i)
      if (trace[i].loss < trace[best].loss) best = i;
    return trace[best];
  };

  Manifest m("profile", serialize_config(c), c.seed);
  m.input(l.trace());
  const auto model = surrogate(c, s, trace, trace.size(), done + 1);
  const auto inc = incumbent(trace.size());
  for (int k : ks) {
    const auto r = profile_parameter(model, s.domain, profile_cfg(k), inc.loss, inc.theta);
    write_file(l.profile(k), to_document(r).serialize());
    m.output(l.profile(k));
    out << "parameter " << k << ": " << to_string(r.classification) << "; OA";
    for (const auto& iv : r.oa_ci) out << " [" << format_number(iv.lo) << ", " << format_number(iv.hi) << "]";
    out << "; IA";
    for (const auto& iv : r.ia_ci) out << " [" << format_number(iv.lo) << ", " << format_number(iv.hi) << "]";
    out << "\n";
  }
  if (!c.width_checkpoints.empty()) {
    std::string w = "iteration,parameter,oa_width,ia_width,classification\n";
    for (int t : c.width_checkpoints) {
      if (t > done) throw ConfigError("profile: width checkpoint " + std::to_string(t) + " beyond the trace");
      const std::size_t rows = n0 + static_cast<std::size_t>(t);
      const auto mt = surrogate(c, s, trace, rows, t + 1);
      const auto it = incumbent(rows);
      for (int k : ks) {
        const auto r = profile_parameter(mt, s.domain, profile_cfg(k), it.loss, it.theta);
        w += std::to_string(t) + "," + std::to_string(k) + "," + format_number(r.oa_width()) + "," +
             format_number(r.ia_width()) + "," + to_string(r.classification) + "\n";
      }
    }
    write_file(l.widths(), w);
    m.output(l.widths());
  }
  m.save(l.manifest("profile"));
  return 0;
}

// ---------------------------------------------------------------------------------------------

/// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const fs::path& p) {
  std::istringstream in(read_file(p));
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    return f;
  };
  if (!std::getline(in, line)) throw InputError(p.string() + ": empty file");
  t.header = split(line);
  while (std::getline(in, line))
    if (!line.empty()) {
      t.rows.push_back(split(line));
      if (t.rows.back().size() != t.header.size()) throw InputError(p.string() + ": ragged row");
    }
  return t;
}

/// Aggregates per-iteration columns of several runs (traces, errors.csv or ci_width.csv files of
/// the same kind) into median and 2.5 / 97.5 % quantiles across runs.
inline std::string aggregate_report(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ConfigError("report: no input files");
  std::vector<CsvTable> tables;
  for (const auto& p : paths) tables.push_back(read_csv(p));
  const auto& h = tables.front().header;
  for (const auto& t : tables)
    if (t.header != h) throw InputError("report: input files have different columns");
  if (h.empty() || h[0] != "iteration") throw InputError("report: expected an 'iteration' column first");

  // Key columns identify a row across runs; numeric value columns are aggregated.
  std::vector<std::size_t> keys = {0}, values;
  std::vector<std::string> names;
  const bool widths = std::find(h.begin(), h.end(), "parameter") != h.end();
  for (std::size_t j = 1; j < h.size(); ++j) {
    if (widths && h[j] == "parameter") {
      keys.push_back(j);
      continue;
    }
    if (h[j] == "classification" || h[j] == "penalized" || h[j].rfind("theta_", 0) == 0) continue;
    values.push_back(j);
  }
  std::map<std::vector<double>, std::vector<std::vector<double>>> groups;
  for (const auto& t : tables)
    for (const auto& r : t.rows) {
      std::vector<double> key;
      for (auto j : keys) key.push_back(parse_number(r[j], "report"));
      auto& g = groups[key];
      g.resize(values.size());
      for (std::size_t v = 0; v < values.size(); ++v) g[v].push_back(parse_number(r[values[v]], "report"));
    }
  if (groups.empty()) throw InputError("report: inputs have no data rows");

  std::string outs;
  for (std::size_t k = 0; k < keys.size(); ++k) outs += (k ? "," : "") + h[keys[k]];
  outs += ",n";
  for (auto j : values) outs += "," + h[j] + "_median," + h[j] + "_lo," + h[j] + "_hi";
  outs += "\n";
  for (auto& [key, cols] : groups) {
    for (std::size_t k = 0; k < key.size(); ++k) outs += (k ? "," : "") + format_number(key[k]);
    outs += "," + std::to_string(cols.front().size());
    for (auto& col : cols) {
      std::sort(col.begin(), col.end());
      outs += "," + format_number(quantile_sorted(col, 0.5)) + "," + format_number(quantile_sorted(col, 0.025)) + "," +
              format_number(quantile_sorted(col, 0.975));
    }
    outs += "\n";
  }
  return outs;
}

/// Oracle-protocol responder backed by the bundled solvers: reads a request on `in`, writes a
/// `bo4io-sol v1` reply.
inline int cmd_solve(std::istream& in, std::ostream& out) {
  std::stringstream ss;
  ss << in.rdbuf();
  const auto doc = TextDocument::parse_string(ss.str(), kFopMagic, "request");
  InputFields u;
  for (const auto* line : doc.all("input")) {
    if (line->values.empty()) throw InputError(doc.where(*line) + ": input needs a field name");
    u[line->values[0]] = doc.numbers_of(*line, 1);
  }
  const Vector theta = doc.numbers("theta");
  auto fp = make_forward(doc);
  if (fp->family() == "fba" && theta.size() < fp->parameter_size()) fp = make_forward(doc, static_cast<int>(theta.size()));
  const auto s = fp->solve(u, theta);
  TextDocument reply{std::string(kSolutionMagic)};
  reply.add("status", to_string(s.status));
  if (s.usable()) {
    reply.add("objective", s.objective);
    for (const auto& b : s.layout) reply.add(b.name, {}, Vector(s.x.segment(b.offset, b.size)));
    reply.add("gap_bound", s.gap_bound);
  }
  out << reply.serialize();
  return 0;
}

// ---------------------------------------------------------------------------------------------

/// Command-line entry point; returns the process exit status.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"BO4IO: inverse optimization by Bayesian optimization"};
  app.require_subcommand(1);
  std::string config_path, out_dir, report_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool resume = false;
  std::vector<std::string> report_inputs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--workers", workers, "override experiment.workers");
    sub->add_option("--out-dir", out_dir, "override experiment.out_dir");
  };
  auto* datagen = app.add_subcommand("datagen", "generate train/test observation sets");
  auto* run_cmd = app.add_subcommand("run", "run Bayesian optimization on the training set");
  auto* profile = app.add_subcommand("profile", "profile-likelihood confidence intervals from a trace");
  auto* all = app.add_subcommand("all", "datagen, run and profile in sequence");
  auto* report = app.add_subcommand("report", "aggregate traces / error / width tables across runs");
  auto* solve = app.add_subcommand("solve", "answer one oracle request from stdin with the bundled solvers");
  for (auto* s : {datagen, run_cmd, profile, all}) common(s);
  for (auto* s : {run_cmd, all}) s->add_flag("--resume", resume, "continue a truncated trace");
  report->add_option("inputs", report_inputs, "trace.csv, errors.csv or ci_width.csv files");
  report->add_option("--out", report_out, "write to a file instead of stdout");
  (void)solve;

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (report->parsed()) {
      const auto table = aggregate_report(report_inputs);
      if (report_out.empty())
        out << table;
      else
        write_file(report_out, table);
      return 0;
    }
    if (solve->parsed()) return cmd_solve(std::cin, out);

    auto c = load_config(config_path);
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (!out_dir.empty()) c.out_dir = out_dir;
    c.validate();
    if (datagen->parsed()) return cmd_datagen(c, out);
    if (run_cmd->parsed()) return cmd_run(c, resume, out);
    if (profile->parsed()) return cmd_profile(c, out);
    if (all->parsed()) {
      if (!resume || !fs::exists(Layout{c.out_dir}.train())) cmd_datagen(c, out);
      cmd_run(c, resume, out);
      return cmd_profile(c, out);
    }
  } catch (const Error& e) {
    err << "bo4io: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "bo4io: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bo4io::app
