#pragma once

// Config-driven experiment runner: strict JSON configs, a bundled scenario
// library with analytic oracles, the spectrum -> grouping -> filtration ->
// splitting -> diagnostics pipeline, report/CSV emission, and the seeded
// selfcheck suite. All output assembly is single-threaded and ordered so
// identical (config, seed) pairs produce byte-identical files regardless of
// worker count.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocycle.hpp"
#include "consistent.hpp"
#include "filtration.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "volume.hpp"

namespace oseledets {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Serialization helpers

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline Json jnum(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
  return v;
}

inline Json jnums(const std::vector<double>& vs) {
  Json a = Json::array();
  for (double v : vs) a.push_back(jnum(v));
  return a;
}

inline Json p_to_json(double p) {
  if (std::isinf(p)) return "inf";
  return p;
}

// Matrices serialize row-major: an array of rows.
inline Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(jnum(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(jnum(v[i]));
  return a;
}

inline Json checks_to_json(const Section2Report& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json j;
    j["name"] = c.name;
    j["lhs"] = jnum(c.lhs);
    j["rhs"] = jnum(c.rhs);
    j["pass"] = c.pass;
    if (!c.note.empty()) j["note"] = c.note;
    checks.push_back(j);
  }
  return checks;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Strict config parsing

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline int line_of_key(const std::string& raw, const std::string& key) {
  const auto pos = raw.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(raw.begin(), raw.begin() + static_cast<long>(pos), '\n'));
}

[[noreturn]] inline void config_fail(const std::string& raw, const std::string& near_key,
                                     const std::string& msg) {
  const int line = line_of_key(raw, near_key);
  std::string loc = line > 0 ? std::to_string(line) : std::string("?");
  throw ConfigError("config:" + loc + ": " + msg);
}

inline void check_keys(const Json& obj, const std::string& section,
                       const std::vector<std::string>& allowed, const std::string& raw) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      config_fail(raw, it.key(), "unknown key '" + it.key() + "' in '" + section + "'");
}

inline const Json& need(const Json& obj, const std::string& section, const std::string& key,
                        const std::string& raw) {
  if (!obj.contains(key))
    config_fail(raw, section, "missing key '" + key + "' in '" + section + "'");
  return obj.at(key);
}

inline double parse_p(const Json& j, const std::string& raw) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return infinity;
    config_fail(raw, "p", "p must be a number >= 1 or the string \"inf\"");
  }
  if (!j.is_number()) config_fail(raw, "p", "p must be a number >= 1 or the string \"inf\"");
  const double p = j.get<double>();
  if (!(p >= 1.0)) config_fail(raw, "p", "p must be >= 1");
  return p;
}

inline Mat parse_matrix(const Json& j, int rows, int cols, const std::string& what,
                        const std::string& raw) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    config_fail(raw, what, what + " must be an array of " + std::to_string(rows) + " rows");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<size_t>(i));
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      config_fail(raw, what, what + " row " + std::to_string(i) + " must have " +
                                 std::to_string(cols) + " entries");
    for (int k = 0; k < cols; ++k) {
      const Json& e = row.at(static_cast<size_t>(k));
      if (!e.is_number())
        config_fail(raw, what, what + " entries must be numbers");
      m(i, k) = e.get<double>();
    }
  }
  return m;
}

}  // namespace detail

struct OutputOptions {
  std::string directory;  // empty: nothing is written
  bool write_json = true;
  bool write_csv = true;
};

struct ExperimentConfig {
  std::string scenario;  // empty for hand-written configs
  NormedSpace space{1, 2.0};
  BaseProcess base;
  Generator gen;
  int head_dim = 0;  // 0: no declared head/tail split
  std::vector<int> n_grid;
  int n_samples = 8;
  int kmax = 1;
  double gap_threshold = 0.05;
  double epsilon = 0.0;  // 0: auto, 0.1 * smallest exponent gap
  OutputOptions outputs;
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.space.dim < 1) throw ConfigError("config:?: space.dim must be >= 1");
  check_base(cfg.base);
  check_generator(cfg.gen, cfg.base.alphabet);
  if (cfg.gen.space != cfg.space) throw ConfigError("config:?: generator space mismatch");
  if (cfg.head_dim < 0 || cfg.head_dim > cfg.space.dim)
    throw ConfigError("config:?: generator.head_dim out of range");
  SpectrumParams par;
  par.kmax = cfg.kmax;
  par.n_grid = cfg.n_grid;
  par.samples = cfg.n_samples;
  check_spectrum_params(par, cfg.space.dim);
  if (!(cfg.gap_threshold > 0)) throw ConfigError("config:?: run.gap_threshold must be positive");
  if (!(cfg.epsilon >= 0)) throw ConfigError("config:?: run.epsilon must be nonnegative");
}

// ---------------------------------------------------------------------------
// Scenario library

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::string oracle_type;
  std::string oracle_detail;
};

inline std::vector<ScenarioInfo> list_scenarios() {
  return {
      {"fixed-jordan",
       "Fixed 2x2 Jordan-type matrix [[2,1],[0,1]]: one expanding and one neutral direction",
       "eigen",
       "mu = (ln 2, 0) within 1e-3 at n=100; V2 and the splitting blocks match the "
       "eigendirections span{(1,0)}, span{(1,-1)}; direct-sum residual <= 1e-6"},
      {"iid-diagonal",
       "2x2 diagonal i.i.d. products: first entry uniform {2,4}, second uniform {1/3,1/5}",
       "birkhoff",
       "mu1 = (3/2) ln 2 ~ 1.0397 and mu2 = -(ln 15)/2 ~ -1.3540, each within 3 standard "
       "errors at n=10^4; dual-system exponents equal within the same tolerance"},
      {"upper-triangular-3d",
       "Fixed 3x3 upper-triangular matrix with eigenvalues 4, 2, 1",
       "eigen",
       "mu = (ln 4, ln 2, 0) within 2e-2 at n=50; the cocycle restricted to the declared "
       "slow space V2 reproduces the spectrum with the first group removed"},
      {"quasicompact-block",
       "Declared head/tail split: 1-dim i.i.d. head {2,4} and a constant 0.1-scaled "
       "rotation tail",
       "tail-norm",
       "kappa upper bound = ln 0.1 exactly (constant tail); the number of exponents above "
       "ln 0.1 + 0.1 equals the head dimension; head exponents match a head-only run"},
      {"lp-volume-suite",
       "Volume-growth inequality sweep over seeded random operators on l^p, p in {1,2,inf}",
       "enclosure",
       "every inequality of the suite holds in enclosure-consistent form (certified lower "
       "bound of the left side vs provable upper bound of the right side)"},
      {"identity",
       "Identity cocycle in 2 dimensions",
       "trivial",
       "all exponents exactly 0, a single exponent group, trivial filtration"},
  };
}

inline ExperimentConfig scenario_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.scenario = name;
  if (name == "fixed-jordan") {
    cfg.space = {2, 2.0};
    cfg.base.kind = BaseKind::Fixed;
    cfg.base.alphabet = 1;
    cfg.base.seed = 1;
    cfg.gen.space = cfg.space;
    Mat J(2, 2);
    J << 2, 1, 0, 1;
    cfg.gen.mats = {J};
    cfg.n_grid = {10, 20, 30, 40, 50, 60, 80, 100};
    cfg.n_samples = 2;
    cfg.kmax = 2;
  } else if (name == "iid-diagonal") {
    cfg.space = {2, 2.0};
    cfg.base.kind = BaseKind::Bernoulli;
    cfg.base.alphabet = 4;
    cfg.base.probs = Vec::Constant(4, 0.25);
    cfg.base.seed = 2026;
    cfg.gen.space = cfg.space;
    for (double a : {2.0, 4.0})
      for (double b : {1.0 / 3.0, 1.0 / 5.0}) {
        Mat m = Mat::Zero(2, 2);
        m(0, 0) = a;
        m(1, 1) = b;
        cfg.gen.mats.push_back(m);
      }
    cfg.n_grid = {1000, 2000, 3000, 4000, 5000, 6000, 8000, 10000};
    cfg.n_samples = 100;
    cfg.kmax = 2;
  } else if (name == "upper-triangular-3d") {
    cfg.space = {3, 2.0};
    cfg.base.kind = BaseKind::Fixed;
    cfg.base.alphabet = 1;
    cfg.base.seed = 1;
    cfg.gen.space = cfg.space;
    Mat m(3, 3);
    m << 4, 1, 0, 0, 2, 1, 0, 0, 1;
    cfg.gen.mats = {m};
    cfg.n_grid = {5, 10, 15, 20, 25, 30, 40, 50};
    cfg.n_samples = 2;
    cfg.kmax = 3;
  } else if (name == "quasicompact-block") {
    cfg.space = {3, 2.0};
    cfg.base.kind = BaseKind::Bernoulli;
    cfg.base.alphabet = 2;
    cfg.base.probs = Vec::Constant(2, 0.5);
    cfg.base.seed = 7;
    cfg.gen.space = cfg.space;
    cfg.head_dim = 1;
    auto block = [](double head, double angle) {
      Mat m = Mat::Zero(3, 3);
      m(0, 0) = head;
      m(1, 1) = 0.1 * std::cos(angle);
      m(1, 2) = -0.1 * std::sin(angle);
      m(2, 1) = 0.1 * std::sin(angle);
      m(2, 2) = 0.1 * std::cos(angle);
      return m;
    };
    cfg.gen.mats = {block(2.0, 0.7), block(4.0, 1.1)};
    cfg.n_grid = {100, 200, 300, 400, 500, 600};
    cfg.n_samples = 48;
    cfg.kmax = 3;
  } else if (name == "lp-volume-suite") {
    cfg.space = {3, infinity};
    cfg.base.kind = BaseKind::Fixed;
    cfg.base.alphabet = 1;
    cfg.base.seed = 1;
    cfg.gen.space = cfg.space;
    Mat m(3, 3);
    m << 1.5, 0.4, -0.2, 0.0, 0.8, 0.3, -0.1, 0.2, 0.6;
    cfg.gen.mats = {m};
    cfg.n_grid = {4, 8, 12, 16};
    cfg.n_samples = 2;
    cfg.kmax = 2;
  } else if (name == "identity") {
    cfg.space = {2, 2.0};
    cfg.base.kind = BaseKind::Fixed;
    cfg.base.alphabet = 1;
    cfg.base.seed = 1;
    cfg.gen.space = cfg.space;
    cfg.gen.mats = {Mat(Mat::Identity(2, 2))};
    cfg.n_grid = {5, 10, 15, 20};
    cfg.n_samples = 2;
    cfg.kmax = 2;
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Config file parsing

namespace detail {

inline void parse_run_section(const Json& run, ExperimentConfig& cfg, bool require_all,
                              const std::string& raw) {
  check_keys(run, "run", {"n_grid", "n_samples", "kmax", "gap_threshold", "epsilon"}, raw);
  if (require_all) {
    need(run, "run", "n_grid", raw);
    need(run, "run", "n_samples", raw);
    need(run, "run", "kmax", raw);
  }
  if (run.contains("n_grid")) {
    const Json& g = run.at("n_grid");
    if (!g.is_array() || g.empty()) config_fail(raw, "n_grid", "run.n_grid must be a nonempty array");
    cfg.n_grid.clear();
    for (const auto& e : g) {
      if (!e.is_number_integer() || e.get<long>() < 1)
        config_fail(raw, "n_grid", "run.n_grid entries must be positive integers");
      cfg.n_grid.push_back(e.get<int>());
    }
    for (size_t i = 1; i < cfg.n_grid.size(); ++i)
      if (cfg.n_grid[i] <= cfg.n_grid[i - 1])
        config_fail(raw, "n_grid", "run.n_grid must be strictly increasing");
  }
  if (run.contains("n_samples")) {
    if (!run.at("n_samples").is_number_integer() || run.at("n_samples").get<long>() < 1)
      config_fail(raw, "n_samples", "run.n_samples must be a positive integer");
    cfg.n_samples = run.at("n_samples").get<int>();
  }
  if (run.contains("kmax")) {
    if (!run.at("kmax").is_number_integer() || run.at("kmax").get<long>() < 1)
      config_fail(raw, "kmax", "run.kmax must be a positive integer");
    cfg.kmax = run.at("kmax").get<int>();
  }
  if (run.contains("gap_threshold")) {
    if (!run.at("gap_threshold").is_number() || !(run.at("gap_threshold").get<double>() > 0))
      config_fail(raw, "gap_threshold", "run.gap_threshold must be a positive number");
    cfg.gap_threshold = run.at("gap_threshold").get<double>();
  }
  if (run.contains("epsilon")) {
    if (!run.at("epsilon").is_number() || !(run.at("epsilon").get<double>() >= 0))
      config_fail(raw, "epsilon", "run.epsilon must be a nonnegative number");
    cfg.epsilon = run.at("epsilon").get<double>();
  }
}

inline void parse_outputs_section(const Json& out, ExperimentConfig& cfg, const std::string& raw) {
  check_keys(out, "outputs", {"directory", "formats"}, raw);
  if (out.contains("directory")) {
    if (!out.at("directory").is_string())
      config_fail(raw, "directory", "outputs.directory must be a string");
    cfg.outputs.directory = out.at("directory").get<std::string>();
  }
  if (out.contains("formats")) {
    const Json& fm = out.at("formats");
    if (!fm.is_array()) config_fail(raw, "formats", "outputs.formats must be an array");
    cfg.outputs.write_json = false;
    cfg.outputs.write_csv = false;
    for (const auto& f : fm) {
      if (!f.is_string()) config_fail(raw, "formats", "outputs.formats entries must be strings");
      const std::string s = f.get<std::string>();
      if (s == "json")
        cfg.outputs.write_json = true;
      else if (s == "csv")
        cfg.outputs.write_csv = true;
      else
        config_fail(raw, "formats", "unknown output format '" + s + "'");
    }
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& raw) {
  Json doc;
  try {
    doc = Json::parse(raw);
  } catch (const Json::parse_error& e) {
    const size_t byte = std::min(e.byte, raw.size());
    const int line =
        1 + static_cast<int>(std::count(raw.begin(), raw.begin() + static_cast<long>(byte), '\n'));
    throw ConfigError("config:" + std::to_string(line) + ": JSON parse error: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config:1: top level must be a JSON object");

  ExperimentConfig cfg;
  if (doc.contains("scenario")) {
    // Bundled scenario: only run knobs and outputs may be adjusted, so the
    // declared oracle always refers to the fixture it was derived for.
    detail::check_keys(doc, "top level", {"scenario", "run", "outputs"}, raw);
    if (!doc.at("scenario").is_string())
      detail::config_fail(raw, "scenario", "scenario must be a string");
    cfg = scenario_config(doc.at("scenario").get<std::string>());
    if (doc.contains("run")) detail::parse_run_section(doc.at("run"), cfg, false, raw);
    if (doc.contains("outputs")) detail::parse_outputs_section(doc.at("outputs"), cfg, raw);
    validate_config(cfg);
    return cfg;
  }

  detail::check_keys(doc, "top level", {"space", "base", "generator", "run", "outputs"}, raw);
  const Json& jspace = detail::need(doc, "top level", "space", raw);
  detail::check_keys(jspace, "space", {"dim", "p"}, raw);
  if (!detail::need(jspace, "space", "dim", raw).is_number_integer() ||
      jspace.at("dim").get<long>() < 1)
    detail::config_fail(raw, "dim", "space.dim must be a positive integer");
  cfg.space.dim = jspace.at("dim").get<int>();
  cfg.space.p = detail::parse_p(detail::need(jspace, "space", "p", raw), raw);

  const Json& jbase = detail::need(doc, "top level", "base", raw);
  detail::check_keys(jbase, "base", {"kind", "parameters", "seed"}, raw);
  const Json& jkind = detail::need(jbase, "base", "kind", raw);
  if (!jkind.is_string()) detail::config_fail(raw, "kind", "base.kind must be a string");
  const std::string kind = jkind.get<std::string>();
  Json params = jbase.contains("parameters") ? jbase.at("parameters") : Json::object();
  if (!params.is_object()) detail::config_fail(raw, "parameters", "base.parameters must be an object");
  if (kind == "fixed") {
    detail::check_keys(params, "base.parameters", {}, raw);
    cfg.base.kind = BaseKind::Fixed;
    cfg.base.alphabet = 1;
  } else if (kind == "bernoulli") {
    detail::check_keys(params, "base.parameters", {"probs"}, raw);
    const Json& jp = detail::need(params, "base.parameters", "probs", raw);
    if (!jp.is_array() || jp.empty())
      detail::config_fail(raw, "probs", "base.parameters.probs must be a nonempty array");
    cfg.base.kind = BaseKind::Bernoulli;
    cfg.base.alphabet = static_cast<int>(jp.size());
    cfg.base.probs = Vec(cfg.base.alphabet);
    for (int i = 0; i < cfg.base.alphabet; ++i) {
      if (!jp.at(static_cast<size_t>(i)).is_number())
        detail::config_fail(raw, "probs", "base.parameters.probs entries must be numbers");
      cfg.base.probs[i] = jp.at(static_cast<size_t>(i)).get<double>();
    }
  } else if (kind == "markov") {
    detail::check_keys(params, "base.parameters", {"transition", "start"}, raw);
    const Json& jt = detail::need(params, "base.parameters", "transition", raw);
    if (!jt.is_array() || jt.empty())
      detail::config_fail(raw, "transition", "base.parameters.transition must be a nonempty array");
    const int n = static_cast<int>(jt.size());
    cfg.base.kind = BaseKind::Markov;
    cfg.base.alphabet = n;
    cfg.base.transition = detail::parse_matrix(jt, n, n, "transition", raw);
    if (params.contains("start")) {
      if (!params.at("start").is_number_integer())
        detail::config_fail(raw, "start", "base.parameters.start must be an integer");
      cfg.base.start = params.at("start").get<int>();
    }
  } else {
    detail::config_fail(raw, "kind", "base.kind must be one of fixed, bernoulli, markov");
  }
  if (jbase.contains("seed")) {
    if (!jbase.at("seed").is_number_integer())
      detail::config_fail(raw, "seed", "base.seed must be an integer");
    cfg.base.seed = jbase.at("seed").get<std::uint64_t>();
  }

  const Json& jgen = detail::need(doc, "top level", "generator", raw);
  detail::check_keys(jgen, "generator", {"matrices", "head_dim"}, raw);
  const Json& jm = detail::need(jgen, "generator", "matrices", raw);
  if (!jm.is_array() || jm.empty())
    detail::config_fail(raw, "matrices", "generator.matrices must be a nonempty array");
  cfg.gen.space = cfg.space;
  for (const auto& one : jm)
    cfg.gen.mats.push_back(detail::parse_matrix(one, cfg.space.dim, cfg.space.dim,
                                                "generator matrix", raw));
  if (static_cast<int>(cfg.gen.mats.size()) != cfg.base.alphabet)
    detail::config_fail(raw, "matrices", "generator.matrices must have one matrix per symbol (" +
                                             std::to_string(cfg.base.alphabet) + ")");
  if (jgen.contains("head_dim")) {
    if (!jgen.at("head_dim").is_number_integer())
      detail::config_fail(raw, "head_dim", "generator.head_dim must be an integer");
    cfg.head_dim = jgen.at("head_dim").get<int>();
    if (cfg.head_dim < 1 || cfg.head_dim > cfg.space.dim)
      detail::config_fail(raw, "head_dim", "generator.head_dim out of range");
  }

  detail::parse_run_section(detail::need(doc, "top level", "run", raw), cfg, true, raw);
  if (doc.contains("outputs")) detail::parse_outputs_section(doc.at("outputs"), cfg, raw);
  validate_config(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Section-2 inequality sweep over seeded random operators

struct SweepFailure {
  int op_index = 0;
  std::string check;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string note;
};

struct SweepReport {
  std::uint64_t seed = 0;
  int operators = 0;
  int total_checks = 0;
  std::vector<SweepFailure> failures;
  bool all_pass = true;
};

// Runs the full volume-inequality suite on seeded random operators cycling
// p through {1, 2, inf} with dimensions up to max_dim. corrupt_tolerance is a
// test hook: a positive value tightens every inequality by that relative
// margin, which must produce reported failures (negative control for the
// detection machinery).
inline SweepReport section2_sweep(int n_ops, std::uint64_t seed, int max_dim, int kmax,
                                  double corrupt_tolerance = 0.0) {
  SweepReport out;
  out.seed = seed;
  out.operators = n_ops;
  std::vector<Section2Report> reports(static_cast<size_t>(n_ops));
  const double ps[3] = {1.0, 2.0, infinity};
  parallel_for(
      n_ops,
      [&](int i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const int d = 2 + rng.uniform_int(max_dim - 1);
        const double p = ps[i % 3];
        NormedSpace sp{d, p};
        auto draw = [&]() {
          Mat m(d, d);
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) m(r, c) = rng.normal();
          return m;
        };
        Mat tm = draw();
        if (i % 13 == 5) tm.col(d - 1) = tm.col(0);  // exercise rank-deficient paths
        const LinearMap T{sp, sp, tm};
        const LinearMap S{sp, sp, draw()};
        Mat vb(d, d - 1);
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d - 1; ++c) vb(r, c) = rng.normal();
        const Subspace V = make_subspace(sp, vb);
        OptOptions opt;
        opt.seed = seed ^ (0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(i));
        opt.starts = 16;
        opt.max_iters = 120;
        reports[static_cast<size_t>(i)] = verify_section2(T, S, V, std::min(kmax, d), opt);
      });
  for (int i = 0; i < n_ops; ++i) {
    for (const auto& c : reports[static_cast<size_t>(i)].checks) {
      ++out.total_checks;
      bool pass = c.pass;
      if (corrupt_tolerance != 0.0)
        pass = c.lhs <= c.rhs * (1.0 - corrupt_tolerance);
      if (!pass) {
        out.failures.push_back({i, c.name, c.lhs, c.rhs, c.note});
        out.all_pass = false;
      }
    }
  }
  return out;
}

namespace detail {

inline Json sweep_to_json(const SweepReport& s) {
  Json j;
  j["seed"] = s.seed;
  j["operators"] = s.operators;
  j["total_checks"] = s.total_checks;
  j["all_pass"] = s.all_pass;
  Json fails = Json::array();
  for (const auto& f : s.failures) {
    Json one;
    one["op_index"] = f.op_index;
    one["check"] = f.check;
    one["lhs"] = jnum(f.lhs);
    one["rhs"] = jnum(f.rhs);
    if (!f.note.empty()) one["note"] = f.note;
    fails.push_back(one);
  }
  j["failures"] = fails;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oracle checks and the run pipeline

struct OracleCheck {
  std::string name;
  std::string mode;  // "within": |value - expected| <= tolerance; "at-most": value <= expected
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

namespace detail {

inline void add_oracle(std::vector<OracleCheck>& out, const std::string& name, double value,
                       double expected, double tolerance, const std::string& mode = "within") {
  OracleCheck c;
  c.name = name;
  c.mode = mode;
  c.value = value;
  c.expected = expected;
  c.tolerance = tolerance;
  if (mode == "at-most")
    c.pass = value <= expected + tolerance;
  else
    c.pass = std::isfinite(value) && std::abs(value - expected) <= tolerance;
  out.push_back(c);
}

}  // namespace detail

struct RunReport {
  ExperimentConfig config;
  double epsilon_effective = 0.0;
  SpectrumEstimate spectrum;
  SpectrumGroups groups;
  bool has_filtration = false;
  Filtration filt;
  std::string filtration_error;
  bool has_splitting = false;
  Splitting split;
  std::string splitting_error;
  std::vector<Section2Report> section2;  // one per generator symbol
  TemperednessReport temperedness;
  bool has_kappa = false;
  double kappa = 0.0;
  bool has_head_spectrum = false;
  SpectrumEstimate head_spectrum;
  bool has_dual_spectrum = false;
  SpectrumEstimate dual_spectrum;
  bool has_reduced = false;
  ReducedCocycleReport reduced;
  bool has_sweep = false;
  SweepReport sweep;
  std::vector<OracleCheck> oracle_checks;
  bool all_oracles_pass = true;
};

namespace detail {

// Scenario-declared oracle comparisons; each one carries its tolerance.
inline void evaluate_oracles(RunReport& rep) {
  const ExperimentConfig& cfg = rep.config;
  std::vector<OracleCheck>& oc = rep.oracle_checks;
  const double ln2 = std::log(2.0);
  if (cfg.scenario == "fixed-jordan") {
    add_oracle(oc, "mu1", rep.spectrum.mu[0], ln2, 1e-3);
    add_oracle(oc, "mu2", rep.spectrum.mu[1], 0.0, 1e-3);
    Vec slow(2);
    slow << 1.0, -1.0;
    const Subspace target = make_subspace(cfg.space, slow);
    if (rep.has_filtration && !rep.filt.levels.empty()) {
      add_oracle(oc, "V2_distance",
                 grassmann_distance(rep.filt.levels[0].space, target), 0.0, 1e-3);
      add_oracle(oc, "cauchy_slope", rep.filt.levels[0].cauchy_slope, -(ln2 - 0.2), 0.0,
                 "at-most");
    } else {
      add_oracle(oc, "V2_distance", infinity, 0.0, 1e-3);
    }
    if (rep.has_splitting && rep.split.blocks.size() == 2) {
      Vec fast(2);
      fast << 1.0, 0.0;
      add_oracle(oc, "Z1_distance",
                 grassmann_distance(rep.split.blocks[0].space, make_subspace(cfg.space, fast)),
                 0.0, 1e-3);
      add_oracle(oc, "Z2_distance", grassmann_distance(rep.split.blocks[1].space, target), 0.0,
                 1e-3);
      add_oracle(oc, "direct_sum_residual", rep.split.direct_sum_residual, 0.0, 1e-6);
    } else {
      add_oracle(oc, "direct_sum_residual", infinity, 0.0, 1e-6);
    }
  } else if (cfg.scenario == "iid-diagonal") {
    const double mu1 = 1.5 * ln2;
    const double mu2 = -0.5 * std::log(15.0);
    add_oracle(oc, "mu1", rep.spectrum.mu[0], mu1, 3.0 * rep.spectrum.mu_se[0]);
    add_oracle(oc, "mu2", rep.spectrum.mu[1], mu2, 3.0 * rep.spectrum.mu_se[1]);
    if (rep.has_dual_spectrum) {
      for (int k = 0; k < 2; ++k)
        add_oracle(oc, "dual_mu" + std::to_string(k + 1), rep.dual_spectrum.mu[k],
                   rep.spectrum.mu[k],
                   3.0 * (rep.spectrum.mu_se[k] + rep.dual_spectrum.mu_se[k]));
    }
  } else if (cfg.scenario == "upper-triangular-3d") {
    add_oracle(oc, "mu1", rep.spectrum.mu[0], std::log(4.0), 2e-2);
    add_oracle(oc, "mu2", rep.spectrum.mu[1], ln2, 2e-2);
    add_oracle(oc, "mu3", rep.spectrum.mu[2], 0.0, 2e-2);
    if (rep.has_reduced && rep.reduced.mu.size() == 2) {
      add_oracle(oc, "reduced_mu1", rep.reduced.mu[0], ln2, 2e-2);
      add_oracle(oc, "reduced_mu2", rep.reduced.mu[1], 0.0, 2e-2);
    } else {
      add_oracle(oc, "reduced_mu1", infinity, ln2, 2e-2);
    }
  } else if (cfg.scenario == "quasicompact-block") {
    const double lnk = std::log(0.1);
    add_oracle(oc, "kappa_upper", rep.kappa, lnk, 1e-9);
    int above = 0;
    for (double m : rep.spectrum.mu)
      if (m > lnk + 0.1) ++above;
    add_oracle(oc, "exponents_above_kappa", static_cast<double>(above),
               static_cast<double>(cfg.head_dim), 0.1);
    if (rep.has_head_spectrum) {
      for (int k = 0; k < cfg.head_dim; ++k)
        add_oracle(oc, "head_mu" + std::to_string(k + 1), rep.spectrum.mu[k],
                   rep.head_spectrum.mu[k],
                   std::max(1e-12,
                            2.0 * (rep.spectrum.mu_se[k] + rep.head_spectrum.mu_se[k])));
    }
  } else if (cfg.scenario == "lp-volume-suite") {
    rep.sweep = section2_sweep(24, 17, 4, 3);
    rep.has_sweep = true;
    add_oracle(oc, "sweep_failures", static_cast<double>(rep.sweep.failures.size()), 0.0, 0.1);
  } else if (cfg.scenario == "identity") {
    add_oracle(oc, "group_count", static_cast<double>(rep.groups.lambda.size()), 1.0, 0.1);
    double worst = 0.0;
    for (double m : rep.spectrum.mu) worst = std::max(worst, std::abs(m));
    add_oracle(oc, "max_abs_mu", worst, 0.0, 1e-12);
    add_oracle(oc, "filtration_levels",
               static_cast<double>(rep.has_filtration ? rep.filt.levels.size() : 99), 0.0, 0.1);
  }
  for (const auto& c : oc) rep.all_oracles_pass = rep.all_oracles_pass && c.pass;
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  RunReport rep;
  rep.config = cfg;

  SpectrumParams par;
  par.kmax = cfg.kmax;
  par.n_grid = cfg.n_grid;
  par.samples = cfg.n_samples;
  rep.spectrum = estimate_spectrum(cfg.gen, cfg.base, par);
  rep.groups = group_exponents(rep.spectrum.mu, cfg.gap_threshold);

  double min_gap = infinity;
  for (size_t l = 1; l < rep.groups.lambda.size(); ++l)
    if (std::isfinite(rep.groups.lambda[l - 1]) && std::isfinite(rep.groups.lambda[l]))
      min_gap = std::min(min_gap, rep.groups.lambda[l - 1] - rep.groups.lambda[l]);
  rep.epsilon_effective =
      cfg.epsilon > 0 ? cfg.epsilon : (std::isfinite(min_gap) ? 0.1 * min_gap : 0.1);

  const Trajectory traj = sample_trajectory(cfg.base, cfg.n_grid.back() + 2, 0, true);

  FiltrationParams fpar;
  fpar.n_grid = cfg.n_grid;
  try {
    rep.filt = filtration(cfg.gen, traj, rep.groups, fpar);
    rep.has_filtration = true;
  } catch (const std::exception& e) {
    rep.filtration_error = e.what();
  }

  if (traj.two_sided) {
    SplittingParams spar;
    spar.n_grid = cfg.n_grid;
    try {
      rep.split = splitting(cfg.gen, traj, rep.groups, spar);
      rep.has_splitting = true;
    } catch (const std::exception& e) {
      rep.splitting_error = e.what();
    }
  }

  // Diagnostics: per-symbol inequality suite, temperedness of the one-step
  // log norms along the orbit, declared-split kappa bound, restricted run.
  {
    OptOptions opt;
    opt.starts = 8;
    opt.max_iters = 80;
    const int d = cfg.space.dim;
    Mat vb = Mat::Identity(d, d).rightCols(d > 1 ? d - 1 : d);
    const Subspace V = make_subspace(cfg.space, vb);
    rep.section2.resize(cfg.gen.mats.size());
    parallel_for(
        static_cast<int>(cfg.gen.mats.size()),
        [&](int s) {
          const LinearMap T{cfg.space, cfg.space, cfg.gen.mats[static_cast<size_t>(s)]};
          const LinearMap S{cfg.space, cfg.space,
                            cfg.gen.mats[static_cast<size_t>((s + 1) % cfg.gen.mats.size())]};
          rep.section2[static_cast<size_t>(s)] =
              verify_section2(T, S, V, std::min(2, d), opt);
        });
  }
  {
    std::vector<double> g;
    const int horizon = std::min(cfg.n_grid.back(), 2000);
    g.reserve(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      const Mat& m = cfg.gen.mats[static_cast<size_t>(traj.symbol(t))];
      const double nm = op_norm({cfg.space, cfg.space, m}).hi;
      g.push_back(std::abs(std::log(std::max(nm, 1e-300))));
    }
    rep.temperedness = temperedness_diagnostic(g, std::max(rep.epsilon_effective, 1e-6));
  }
  if (cfg.head_dim > 0) {
    rep.kappa = kappa_upper(cfg.gen, cfg.head_dim, cfg.base, par);
    rep.has_kappa = true;
    if (cfg.head_dim < cfg.space.dim) {
      Generator head{{cfg.head_dim, cfg.space.p}, {}};
      for (const Mat& m : cfg.gen.mats)
        head.mats.push_back(m.topLeftCorner(cfg.head_dim, cfg.head_dim));
      SpectrumParams hp = par;
      hp.kmax = cfg.head_dim;
      rep.head_spectrum = estimate_spectrum(head, cfg.base, hp);
      rep.has_head_spectrum = true;
    }
  }
  if (cfg.scenario == "iid-diagonal") {
    Generator dual{dual_space(cfg.space), {}};
    for (const Mat& m : cfg.gen.mats) dual.mats.push_back(m.transpose());
    BaseProcess dual_base = cfg.base;
    dual_base.seed = cfg.base.seed + 1;
    rep.dual_spectrum = estimate_spectrum(dual, dual_base, par);
    rep.has_dual_spectrum = true;
  }
  if (cfg.base.kind == BaseKind::Fixed && rep.has_filtration && !rep.filt.levels.empty()) {
    try {
      rep.reduced = verify_reduced_cocycle(cfg.gen, traj, rep.filt.levels[0].space, cfg.n_grid);
      rep.has_reduced = true;
    } catch (const std::exception&) {
      // Reported through its absence; the filtration diagnostics carry the cause.
    }
  }

  detail::evaluate_oracles(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization and file emission

namespace detail {

inline Json spectrum_to_json(const SpectrumEstimate& s) {
  Json j;
  j["n_grid"] = s.n_grid;
  j["kmax"] = s.kmax;
  j["samples"] = s.samples;
  j["delta"] = jnums(s.delta);
  j["delta_se"] = jnums(s.delta_se);
  j["mu"] = jnums(s.mu);
  j["mu_se"] = jnums(s.mu_se);
  j["fekete_violation"] = jnums(s.fekete_violation);
  j["mu_monotone_2se"] = s.mu_monotone_2se;
  return j;
}

inline Json subspace_to_json(const Subspace& s) { return mat_to_json(s.basis); }

}  // namespace detail

inline Json report_to_json(const RunReport& rep) {
  const ExperimentConfig& cfg = rep.config;
  Json j;
  j["format_version"] = 1;
  j["scenario"] = cfg.scenario;
  j["space"] = {{"dim", cfg.space.dim}, {"p", detail::p_to_json(cfg.space.p)}};
  j["base"] = {{"kind", cfg.base.kind == BaseKind::Fixed      ? "fixed"
                        : cfg.base.kind == BaseKind::Bernoulli ? "bernoulli"
                                                               : "markov"},
               {"alphabet", cfg.base.alphabet},
               {"seed", cfg.base.seed}};
  j["run"] = {{"n_grid", cfg.n_grid},       {"n_samples", cfg.n_samples},
              {"kmax", cfg.kmax},           {"gap_threshold", cfg.gap_threshold},
              {"epsilon", cfg.epsilon},     {"epsilon_effective", rep.epsilon_effective}};
  j["spectrum"] = detail::spectrum_to_json(rep.spectrum);
  j["groups"] = {{"lambda", detail::jnums(rep.groups.lambda)},
                 {"mult", rep.groups.mult},
                 {"dcum", rep.groups.dcum}};
  if (rep.has_filtration) {
    Json levels = Json::array();
    for (const auto& lv : rep.filt.levels) {
      Json one;
      one["level"] = lv.level;
      one["codim"] = lv.codim;
      one["ns"] = lv.ns;
      one["cauchy"] = detail::jnums(lv.cauchy);
      one["equiv_residual"] = detail::jnums(lv.equiv_residual);
      one["cauchy_slope"] = detail::jnum(lv.cauchy_slope);
      one["basis"] = detail::subspace_to_json(lv.space);
      levels.push_back(one);
    }
    j["filtration"] = {{"levels", levels}};
  } else {
    j["filtration"] = {{"error", rep.filtration_error}};
  }
  if (rep.has_splitting) {
    Json blocks = Json::array();
    for (const auto& b : rep.split.blocks) {
      Json one;
      one["lambda"] = detail::jnum(b.lambda);
      one["mult"] = b.mult;
      one["forward_rate"] = detail::jnum(b.forward_rate);
      one["basis"] = detail::subspace_to_json(b.space);
      blocks.push_back(one);
    }
    j["splitting"] = {{"blocks", blocks},
                      {"tail_dim", rep.split.tail.dim()},
                      {"level_residuals", detail::jnums(rep.split.level_residuals)},
                      {"direct_sum_residual", detail::jnum(rep.split.direct_sum_residual)},
                      {"stack_min_sv", detail::jnum(rep.split.stack_min_sv)}};
  } else if (!rep.splitting_error.empty()) {
    j["splitting"] = {{"error", rep.splitting_error}};
  } else {
    j["splitting"] = nullptr;
  }
  Json s2 = Json::array();
  for (size_t s = 0; s < rep.section2.size(); ++s) {
    Json one;
    one["symbol"] = s;
    one["all_pass"] = rep.section2[s].all_pass;
    one["checks"] = detail::checks_to_json(rep.section2[s]);
    s2.push_back(one);
  }
  j["section2"] = s2;
  j["temperedness"] = {{"max_ratio", detail::jnum(rep.temperedness.max_ratio)},
                       {"argmax", rep.temperedness.argmax},
                       {"pass", rep.temperedness.pass}};
  j["kappa_upper"] = rep.has_kappa ? detail::jnum(rep.kappa) : Json(nullptr);
  j["head_spectrum"] =
      rep.has_head_spectrum ? detail::spectrum_to_json(rep.head_spectrum) : Json(nullptr);
  j["dual_spectrum"] =
      rep.has_dual_spectrum ? detail::spectrum_to_json(rep.dual_spectrum) : Json(nullptr);
  if (rep.has_reduced) {
    j["reduced"] = {{"n_grid", rep.reduced.n_grid},
                    {"delta", detail::jnums(rep.reduced.delta)},
                    {"mu", detail::jnums(rep.reduced.mu)},
                    {"equiv_residual", detail::jnums(rep.reduced.equiv_residual)},
                    {"quotient_rate", detail::jnum(rep.reduced.quotient_rate)},
                    {"quotient_minus_inf", rep.reduced.quotient_minus_inf}};
  } else {
    j["reduced"] = nullptr;
  }
  j["sweep"] = rep.has_sweep ? detail::sweep_to_json(rep.sweep) : Json(nullptr);
  Json oc = Json::array();
  for (const auto& c : rep.oracle_checks) {
    Json one;
    one["name"] = c.name;
    one["mode"] = c.mode;
    one["value"] = detail::jnum(c.value);
    one["expected"] = detail::jnum(c.expected);
    one["tolerance"] = detail::jnum(c.tolerance);
    one["pass"] = c.pass;
    oc.push_back(one);
  }
  j["oracle_checks"] = oc;
  j["all_oracles_pass"] = rep.all_oracles_pass;
  return j;
}

inline std::string spectrum_csv(const SpectrumEstimate& s) {
  std::string out = "# spectrum-csv v1\nk,n,sample,value\n";
  for (int k = 1; k <= s.kmax; ++k)
    for (size_t gi = 0; gi < s.n_grid.size(); ++gi)
      for (int t = 0; t < s.samples; ++t) {
        out += std::to_string(k);
        out += ',';
        out += std::to_string(s.n_grid[gi]);
        out += ',';
        out += std::to_string(t);
        out += ',';
        out += detail::fmt_double(s.series[static_cast<size_t>(k - 1)][gi][static_cast<size_t>(t)]);
        out += '\n';
      }
  return out;
}

inline std::string filtration_csv(const RunReport& rep) {
  std::string out = "# filtration-csv v1\nlevel,n,cauchy_dist,equiv_residual\n";
  if (!rep.has_filtration) return out;
  for (const auto& lv : rep.filt.levels)
    for (size_t i = 0; i < lv.ns.size(); ++i) {
      out += std::to_string(lv.level);
      out += ',';
      out += std::to_string(lv.ns[i]);
      out += ',';
      out += i > 0 ? detail::fmt_double(lv.cauchy[i - 1]) : std::string("nan");
      out += ',';
      out += detail::fmt_double(lv.equiv_residual[i]);
      out += '\n';
    }
  return out;
}

inline void write_report_files(const RunReport& rep) {
  const OutputOptions& out = rep.config.outputs;
  if (out.directory.empty()) return;
  std::filesystem::create_directories(out.directory);
  const std::filesystem::path dir(out.directory);
  if (out.write_json) {
    std::ofstream f(dir / "report.json");
    f << report_to_json(rep).dump(2) << '\n';
  }
  if (out.write_csv) {
    std::ofstream fs(dir / "spectrum.csv");
    fs << spectrum_csv(rep.spectrum);
    std::ofstream ff(dir / "filtration.csv");
    ff << filtration_csv(rep);
  }
}

// ---------------------------------------------------------------------------
// Selfcheck: the inequality sweep plus cross-module invariants, all seeded

struct SelfcheckReport {
  std::uint64_t seed = 0;
  SweepReport sweep;
  double max_cocycle_defect = 0.0;
  bool cocycle_pass = true;
  double max_duality_defect = 0.0;
  bool duality_pass = true;
  int consistent_total = 0;
  int consistent_certified = 0;
  bool all_pass = true;
};

inline SelfcheckReport selfcheck(std::uint64_t seed = 0, double corrupt_tolerance = 0.0) {
  SelfcheckReport rep;
  rep.seed = seed;
  rep.sweep = section2_sweep(200, seed, 5, 3, corrupt_tolerance);

  // Cocycle law on random windows: product over a split window must equal the
  // two-stage composition after scale alignment.
  {
    std::vector<double> defects(100);
    parallel_for(
        100,
        [&](int i) {
          Rng rng(seed ^ 0x5bf03635ull, static_cast<std::uint64_t>(i));
          const int d = 2 + static_cast<int>(rng.uniform_int(3));
          const int a = 2 + static_cast<int>(rng.uniform_int(2));
          Generator gen{{d, 2.0}, {}};
          for (int s = 0; s < a; ++s) {
            Mat m(d, d);
            for (int r = 0; r < d; ++r)
              for (int c = 0; c < d; ++c) m(r, c) = rng.normal();
            gen.mats.push_back(m);
          }
          BaseProcess base;
          base.kind = BaseKind::Bernoulli;
          base.alphabet = a;
          base.probs = Vec::Constant(a, 1.0 / a);
          base.seed = seed + static_cast<std::uint64_t>(i);
          const long start = static_cast<long>(rng.uniform_int(8));
          const int n = 1 + static_cast<int>(rng.uniform_int(12));
          const int m = 1 + static_cast<int>(rng.uniform_int(12));
          const Trajectory traj = sample_trajectory(base, static_cast<int>(start) + n + m, 0);
          defects[static_cast<size_t>(i)] = cocycle_law_defect(gen, traj, start, n, m);
        });
    for (double d : defects) rep.max_cocycle_defect = std::max(rep.max_cocycle_defect, d);
    rep.cocycle_pass = rep.max_cocycle_defect <= 1e-12;
  }

  // Duality identity: pairing a random functional with the forward product
  // equals pairing through the dual product at the shifted anchor.
  {
    std::vector<double> defects(20);
    parallel_for(
        20,
        [&](int i) {
          Rng rng(seed ^ 0xd1b54a32ull, static_cast<std::uint64_t>(i));
          const int d = 2 + static_cast<int>(rng.uniform_int(3));
          const double ps[3] = {1.0, 2.0, infinity};
          const double p = ps[i % 3];
          Generator gen{{d, p}, {}};
          for (int s = 0; s < 2; ++s) {
            Mat m(d, d);
            for (int r = 0; r < d; ++r)
              for (int c = 0; c < d; ++c) m(r, c) = rng.normal();
            gen.mats.push_back(m);
          }
          BaseProcess base;
          base.kind = BaseKind::Bernoulli;
          base.alphabet = 2;
          base.probs = Vec::Constant(2, 0.5);
          base.seed = seed + 77 + static_cast<std::uint64_t>(i);
          const int n = 2 + static_cast<int>(rng.uniform_int(8));
          const Trajectory traj = sample_trajectory(base, n + 2, 0, true);
          const auto [dual_gen, dual_traj] = dual_system(gen, traj);
          const ScaledProduct P = cocycle_product(gen, traj, 0, n);
          const ScaledProduct Q = cocycle_product(dual_gen, dual_traj, -n, n);
          Vec x(d), th(d);
          for (int r = 0; r < d; ++r) {
            x[r] = rng.normal();
            th[r] = rng.normal();
          }
          // The renormalization schedules of a product and its transpose
          // differ, so compare the represented operators, scales included.
          const double lhs = th.dot(P.m * x) * std::exp(P.logscale);
          const double rhs = x.dot(Q.m * th) * std::exp(Q.logscale);
          const double scale = std::abs(lhs) + std::abs(rhs) + 1e-300;
          defects[static_cast<size_t>(i)] = std::abs(lhs - rhs) / scale;
        });
    for (double d : defects) rep.max_duality_defect = std::max(rep.max_duality_defect, d);
    rep.duality_pass = rep.max_duality_defect <= 1e-10;
  }

  // Consistent sequences: certify(build(T)) on random operators.
  {
    const int N = 16;
    std::vector<int> ok(N, 0);
    parallel_for(
        N,
        [&](int i) {
          Rng rng(seed ^ 0x94d049bbull, static_cast<std::uint64_t>(i));
          const int d = 2 + static_cast<int>(rng.uniform_int(3));
          const double ps[3] = {1.0, 2.0, infinity};
          NormedSpace sp{d, ps[i % 3]};
          Mat m(d, d);
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) m(r, c) = rng.normal();
          const LinearMap T{sp, sp, m};
          OptOptions opt;
          opt.seed = seed + static_cast<std::uint64_t>(i) * 131;
          opt.starts = 12;
          const ConsistentSeq seq = build_consistent(T, std::min(3, d), opt);
          const CertifyReport cert = certify_consistent(T, seq, opt);
          ok[static_cast<size_t>(i)] = cert.all_pass ? 1 : 0;
        });
    rep.consistent_total = N;
    for (int v : ok) rep.consistent_certified += v;
  }

  rep.all_pass = rep.sweep.all_pass && rep.cocycle_pass && rep.duality_pass &&
                 rep.consistent_certified == rep.consistent_total;
  return rep;
}

inline Json selfcheck_to_json(const SelfcheckReport& rep) {
  Json j;
  j["format_version"] = 1;
  j["seed"] = rep.seed;
  j["sweep"] = detail::sweep_to_json(rep.sweep);
  j["max_cocycle_defect"] = detail::jnum(rep.max_cocycle_defect);
  j["cocycle_pass"] = rep.cocycle_pass;
  j["max_duality_defect"] = detail::jnum(rep.max_duality_defect);
  j["duality_pass"] = rep.duality_pass;
  j["consistent_total"] = rep.consistent_total;
  j["consistent_certified"] = rep.consistent_certified;
  j["all_pass"] = rep.all_pass;
  return j;
}

}  // namespace oseledets
