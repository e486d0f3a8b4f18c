#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bo4io/acquisition.hpp"
#include "bo4io/document.hpp"
#include "bo4io/domain.hpp"
#include "bo4io/gp.hpp"
#include "bo4io/lowdisc.hpp"

namespace bo4io {

struct BOConfig {
  ParameterDomain domain;
  int T = 100;
  int n0 = 0;  ///< 0 = max(5, 2d + 1)
  AcquisitionConfig acquisition;
  FitOptions fit;
  std::uint64_t seed = 0;
  int refit_every = 1;
  std::string trace_path;  ///< empty = no trace file
  bool resume = false;
  double duplicate_tol = 1e-9;

  int initial_size() const { return n0 > 0 ? n0 : std::max(5, 2 * domain.dim() + 1); }

  void validate() const {
    domain.validate();
    acquisition.validate();
    if (T < 0) throw ConfigError("bo: T must be >= 0");
    if (n0 != 0 && n0 < 2) throw ConfigError("bo: n0 must be >= 2");
    if (refit_every < 1) throw ConfigError("bo: refit_every must be >= 1");
    if (resume && trace_path.empty()) throw ConfigError("bo: resume needs a trace path");
  }
};

/// One evaluation of the black-box objective.
struct Evaluation {
  double value = 0.0;
  bool penalized = false;
  double fop_seconds = 0.0;
};

using LossFunction = std::function<Evaluation(const Vector&)>;

struct TraceRow {
  int iteration = 0;  ///< <= 0 for the initial design, 1..T afterwards
  Vector theta;
  double loss = 0.0;
  double best = 0.0;
  double bo_seconds = 0.0;
  double fop_seconds = 0.0;
  bool penalized = false;
};

struct BOResult {
  Vector incumbent;
  double incumbent_loss = 0.0;
  std::vector<TraceRow> trace;
  std::optional<GPModel> model;  ///< surrogate fitted to every evaluation

  EvaluationDataset dataset() const {
    EvaluationDataset data;
    for (const auto& r : trace) data.push_back(r.theta, r.loss);
    return data;
  }
};

/// n0 points of a seeded Sobol' sequence mapped into the domain; exact repeats are skipped.
inline std::vector<Vector> initial_design(const ParameterDomain& domain, int n0, std::uint64_t seed) {
  domain.validate();
  if (n0 < 1) throw ConfigError("initial design: n0 must be >= 1");
  LowDiscrepancySequence seq(domain.dim(), stream_seed(seed, tag_of("design"), 0));
  std::vector<Vector> pts;
  for (std::uint64_t i = 0; pts.size() < static_cast<std::size_t>(n0) && i < 64ULL * static_cast<std::uint64_t>(n0); ++i) {
    Vector x = domain.from_unit(seq.point(i));
    const bool dup = std::any_of(pts.begin(), pts.end(), [&](const Vector& p) { return (p - x).norm() <= 1e-12; });
    if (!dup) pts.push_back(std::move(x));
  }
  if (pts.size() < static_cast<std::size_t>(n0)) throw ConfigError("initial design: could not find distinct points");
  return pts;
}

namespace detail {

inline std::string trace_header(int d) {
  std::string h = "iteration";
  for (int j = 0; j < d; ++j) h += ",theta_" + std::to_string(j + 1);
  return h + ",loss,best,bo_time_s,fop_time_s,penalized";
}

inline std::string trace_line(const TraceRow& r) {
  std::string s = std::to_string(r.iteration);
  for (double v : r.theta) s += "," + format_number(v);
  s += "," + format_number(r.loss) + "," + format_number(r.best) + "," + format_number(r.bo_seconds) + "," +
       format_number(r.fop_seconds) + "," + (r.penalized ? "1" : "0");
  return s;
}

inline TraceRow parse_trace_line(const std::string& line, int d, const std::string& where) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
  if (f.size() != static_cast<std::size_t>(d) + 6) throw InputError(where + ": wrong number of trace columns");
  TraceRow r;
  try {
    r.iteration = std::stoi(f[0]);
  } catch (const std::exception&) {
    throw InputError(where + ": bad iteration '" + f[0] + "'");
  }
  r.theta.resize(d);
  for (int j = 0; j < d; ++j) r.theta[j] = parse_number(f[static_cast<std::size_t>(j) + 1], where);
  const auto o = static_cast<std::size_t>(d) + 1;
  r.loss = parse_number(f[o], where);
  r.best = parse_number(f[o + 1], where);
  r.bo_seconds = parse_number(f[o + 2], where);
  r.fop_seconds = parse_number(f[o + 3], where);
  r.penalized = f[o + 4] == "1";
  return r;
}

/// Complete rows of a trace file. A trailing partial line (crash mid-write) is dropped and the
/// file is truncated to the last complete row.
inline std::vector<TraceRow> read_trace_for_resume(const std::string& path, int d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace for resume: " + path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto last_nl = all.rfind('\n');
  const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (keep != all.size()) {
    std::error_code ec;
    std::filesystem::resize_file(path, keep, ec);
    if (ec) throw IoError("cannot truncate trace " + path + ": " + ec.message());
  }
  std::vector<TraceRow> rows;
  std::stringstream ss(all.substr(0, keep));
  std::string line;
  if (!std::getline(ss, line)) return rows;
  if (line != trace_header(d)) throw InputError(path + ": trace header does not match the configured dimension");
  int n = 1;
  while (std::getline(ss, line)) {
    ++n;
    if (line.empty()) continue;
    rows.push_back(parse_trace_line(line, d, path + ":" + std::to_string(n)));
  }
  return rows;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Reads every row of a trace file written by run().
inline std::vector<TraceRow> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("iteration,", 0) != 0) throw InputError(path + ": not a trace file");
  const int d = static_cast<int>(std::count(header.begin(), header.end(), ',')) - 5;
  if (d < 1) throw InputError(path + ": trace header has no parameter columns");
  std::vector<TraceRow> rows;
  int n = 1;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (!line.empty()) rows.push_back(detail::parse_trace_line(line, d, path + ":" + std::to_string(n)));
  }
  return rows;
}

/// Bayesian optimization of `loss` over cfg.domain: evaluate the initial design, then T rounds of
/// fit GP -> minimize LCB -> evaluate. Each row is appended to the trace file as soon as it is
/// known; with cfg.resume the rows already in the file are reused instead of re-evaluated.
inline BOResult run(const BOConfig& cfg, const LossFunction& loss) {
  cfg.validate();
  const int d = cfg.domain.dim();
  const auto design = initial_design(cfg.domain, cfg.initial_size(), cfg.seed);
  const int n0 = static_cast<int>(design.size());

  BOResult res;
  if (cfg.resume && std::filesystem::exists(cfg.trace_path))
    res.trace = detail::read_trace_for_resume(cfg.trace_path, d);
  for (std::size_t i = 0; i < res.trace.size() && i < design.size(); ++i)
    if (res.trace[i].theta != design[i] || res.trace[i].iteration != static_cast<int>(i) - n0 + 1)
      throw ConfigError("bo: trace " + cfg.trace_path + " was produced by a different configuration");
  if (res.trace.size() > static_cast<std::size_t>(n0 + cfg.T))
    throw ConfigError("bo: trace " + cfg.trace_path + " is longer than the configured run");

  std::ofstream out;
  if (!cfg.trace_path.empty()) {
    const bool fresh = res.trace.empty();
    out.open(cfg.trace_path, fresh ? std::ios::out | std::ios::trunc : std::ios::out | std::ios::app);
    if (!out) throw IoError("cannot open trace for writing: " + cfg.trace_path);
    if (fresh) out << detail::trace_header(d) << '\n' << std::flush;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : res.trace) best = std::min(best, r.loss);
  auto append = [&](TraceRow r) {
    best = std::min(best, r.loss);
    r.best = best;
    if (out.is_open()) {
      out << detail::trace_line(r) << '\n' << std::flush;
      if (!out) throw IoError("write failed: " + cfg.trace_path);
    }
    res.trace.push_back(std::move(r));
  };

  for (int i = static_cast<int>(res.trace.size()); i < n0; ++i) {
    const Vector& x = design[static_cast<std::size_t>(i)];
    const auto e = loss(x);
    append({i - n0 + 1, x, e.value, 0.0, 0.0, e.fop_seconds, e.penalized});
  }

  FitOptions fit_opt = cfg.fit;
  auto fit_at = [&](int t, const EvaluationDataset& data) {
    return fit(data, cfg.domain, stream_seed(cfg.seed, tag_of("fit"), static_cast<std::uint64_t>(t)), fit_opt);
  };
  // Hyperparameters are refit at t = 1, 1 + refit_every, ...; in between the last fit is reused.
  auto last_refit = [&](int t) { return t - (t - 1) % cfg.refit_every; };

  std::optional<KernelConfig> kernel;
  const int done = static_cast<int>(res.trace.size()) - n0;
  if (done < cfg.T && cfg.refit_every > 1 && done > 0) {
    const int t_r = last_refit(done + 1);
    if (t_r <= done) {
      EvaluationDataset data;
      for (int i = 0; i < n0 + t_r - 1; ++i) data.push_back(res.trace[i].theta, res.trace[i].loss);
      kernel = fit_at(t_r, data).kernel();
    }
  }

  for (int t = done + 1; t <= cfg.T; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto data = res.dataset();
    std::optional<GPModel> model;
    if (!kernel || last_refit(t) == t) {
      model = fit_at(t, data);
      kernel = model->kernel();
    } else {
      model.emplace(*kernel, data, Normalization::from_targets(data.targets));
    }
    AcquisitionConfig acq = cfg.acquisition;
    acq.seed = stream_seed(cfg.seed, tag_of("acq"), static_cast<std::uint64_t>(t));
    const auto a = minimize_acquisition(*model, cfg.domain, acq);
    Vector next = a.point;
    auto near_seen = [&](const Vector& x) {
      return std::any_of(data.inputs.begin(), data.inputs.end(),
                         [&](const Vector& p) { return (p - x).norm() <= cfg.duplicate_tol; });
    };
    if (near_seen(next)) {
      for (const auto& c : a.ranked_scatter)
        if (!near_seen(c.point)) {
          next = c.point;
          break;
        }
    }
    const double bo_s = detail::seconds_since(t0);
    const auto e = loss(next);
    append({t, next, e.value, 0.0, bo_s, e.fop_seconds, e.penalized});
  }

  auto best_row = std::min_element(res.trace.begin(), res.trace.end(),
                                   [](const TraceRow& a, const TraceRow& b) { return a.loss < b.loss; });
  res.incumbent = best_row->theta;
  res.incumbent_loss = best_row->loss;
  // Final surrogate on all evaluations (used by the profile analysis).
  res.model = fit_at(cfg.T + 1, res.dataset());
  return res;
}

}  // namespace bo4io
