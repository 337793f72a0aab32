#include <catch2/catch_amalgamated.hpp>

#include <oseledets/experiment.hpp>

#include <cstdlib>

using namespace oseledets;
using Catch::Matchers::ContainsSubstring;

namespace {

// minimal valid full-schema config, mutated per test case below
std::string full_config(const std::string& p = "2",
                        const std::string& extra_top = "") {
  return std::string(R"({
  "space": {"dim": 2, "p": )") +
         p + R"(},
  "base": {"kind": "fixed", "parameters": {}, "seed": 3},
  "generator": {"matrices": [[[2, 1], [0, 1]]]},
  "run": {"n_grid": [5, 10, 20], "n_samples": 1, "kmax": 2})" +
         extra_top + "\n}\n";
}

}  // namespace

TEST_CASE("full config parses with every section") {
  const ExperimentConfig cfg = parse_config(full_config());
  CHECK(cfg.scenario.empty());
  CHECK(cfg.space.dim == 2);
  CHECK(cfg.space.p == 2.0);
  CHECK(cfg.base.kind == BaseKind::Fixed);
  CHECK(cfg.base.seed == 3);
  CHECK(cfg.gen.mats.size() == 1);
  CHECK(cfg.gen.mats[0](0, 1) == 1.0);
  CHECK(cfg.n_grid == std::vector<int>{5, 10, 20});
  CHECK(cfg.kmax == 2);
  CHECK(cfg.n_samples == 1);
  CHECK(cfg.outputs.directory.empty());
}

TEST_CASE("p accepts the string inf and rejects bad values") {
  CHECK(parse_config(full_config("\"inf\"")).space.p == infinity);
  CHECK(parse_config(full_config("1")).space.p == 1.0);
  CHECK(parse_config(full_config("2.5")).space.p == 2.5);
  CHECK_THROWS_WITH(parse_config(full_config("0.5")),
                    ContainsSubstring("p must be >= 1"));
  CHECK_THROWS_WITH(parse_config(full_config("\"banana\"")),
                    ContainsSubstring("p must be a number >= 1 or the string \"inf\""));
  CHECK_THROWS_AS(parse_config(full_config("0.5")), ConfigError);
}

TEST_CASE("config errors carry line-numbered messages") {
  SECTION("json syntax errors") {
    CHECK_THROWS_WITH(parse_config("{nope"), ContainsSubstring("JSON parse error"));
    CHECK_THROWS_WITH(parse_config("[]"), ContainsSubstring("top level must be"));
  }

  SECTION("unknown keys are rejected with their line") {
    const std::string cfg = "{\n  \"scenario\": \"identity\",\n  \"frobnicate\": 1\n}\n";
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("config:3:"));
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("unknown key 'frobnicate'"));
  }

  SECTION("scenario configs may not redefine the fixture") {
    const std::string cfg =
        "{\"scenario\": \"identity\", \"space\": {\"dim\": 2, \"p\": 2}}";
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("unknown key 'space'"));
  }

  SECTION("unknown scenario") {
    CHECK_THROWS_WITH(parse_config("{\"scenario\": \"nope\"}"),
                      ContainsSubstring("unknown scenario 'nope'"));
  }

  SECTION("missing sections") {
    CHECK_THROWS_WITH(parse_config("{\"space\": {\"dim\": 2, \"p\": 2}}"),
                      ContainsSubstring("missing key 'base'"));
  }

  SECTION("grid must increase strictly") {
    std::string cfg = full_config();
    const auto pos = cfg.find("[5, 10, 20]");
    cfg.replace(pos, std::string("[5, 10, 20]").size(), "[5, 10, 10]");
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("strictly increasing"));
  }

  SECTION("matrix shape must match the declared dimension") {
    std::string cfg = full_config();
    const auto pos = cfg.find("\"dim\": 2");
    cfg.replace(pos, std::string("\"dim\": 2").size(), "\"dim\": 3");
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("generator matrix"));
  }

  SECTION("alphabet and matrix count must agree") {
    const std::string cfg = R"({
      "space": {"dim": 1, "p": 2},
      "base": {"kind": "bernoulli", "parameters": {"probs": [0.5, 0.5]}},
      "generator": {"matrices": [[[1]]]},
      "run": {"n_grid": [5], "n_samples": 1, "kmax": 1}
    })";
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("one matrix per symbol"));
  }

  SECTION("base law validation") {
    const std::string cfg = R"({
      "space": {"dim": 1, "p": 2},
      "base": {"kind": "bernoulli", "parameters": {"probs": [0.7, 0.7]}},
      "generator": {"matrices": [[[1]], [[2]]]},
      "run": {"n_grid": [5], "n_samples": 1, "kmax": 1}
    })";
    CHECK_THROWS(parse_config(cfg));
  }

  SECTION("markov transition rows are validated") {
    const std::string cfg = R"({
      "space": {"dim": 1, "p": 2},
      "base": {"kind": "markov", "parameters": {"transition": [[0.5, 0.6], [0.5, 0.5]], "start": 0}},
      "generator": {"matrices": [[[1]], [[2]]]},
      "run": {"n_grid": [5], "n_samples": 1, "kmax": 1}
    })";
    CHECK_THROWS(parse_config(cfg));
  }

  SECTION("head_dim must fit the space") {
    const std::string cfg = R"({
      "space": {"dim": 2, "p": 2},
      "base": {"kind": "fixed", "parameters": {}},
      "generator": {"matrices": [[[1, 0], [0, 1]]], "head_dim": 5},
      "run": {"n_grid": [5], "n_samples": 1, "kmax": 1}
    })";
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("head_dim"));
  }

  SECTION("output format names are checked") {
    const std::string cfg =
        "{\"scenario\": \"identity\", \"outputs\": {\"formats\": [\"xml\"]}}";
    CHECK_THROWS_WITH(parse_config(cfg), ContainsSubstring("unknown output format"));
  }

  SECTION("kmax larger than the dimension") {
    std::string cfg = full_config();
    const auto pos = cfg.find("\"kmax\": 2");
    cfg.replace(pos, std::string("\"kmax\": 2").size(), "\"kmax\": 7");
    CHECK_THROWS(parse_config(cfg));
  }
}

TEST_CASE("scenario catalog") {
  const auto scenarios = list_scenarios();
  CHECK(scenarios.size() >= 5);
  std::vector<std::string> names;
  for (const auto& s : scenarios) {
    names.push_back(s.name);
    CHECK_FALSE(s.description.empty());
    CHECK_FALSE(s.oracle_type.empty());
    // every catalog entry must produce a valid config
    const ExperimentConfig cfg = scenario_config(s.name);
    CHECK_NOTHROW(validate_config(cfg));
    CHECK(cfg.scenario == s.name);
  }
  for (const char* want : {"fixed-jordan", "iid-diagonal", "upper-triangular-3d",
                           "quasicompact-block", "lp-volume-suite", "identity"})
    CHECK(std::find(names.begin(), names.end(), want) != names.end());

  CHECK_THROWS_AS(scenario_config("missing"), ConfigError);
}

TEST_CASE("scenario run overrides only the run knobs") {
  const std::string cfg_text = R"({
    "scenario": "fixed-jordan",
    "run": {"n_grid": [10, 20], "n_samples": 1},
    "outputs": {"directory": "somewhere", "formats": ["json"]}
  })";
  const ExperimentConfig cfg = parse_config(cfg_text);
  CHECK(cfg.scenario == "fixed-jordan");
  CHECK(cfg.n_grid == std::vector<int>{10, 20});
  CHECK(cfg.n_samples == 1);
  CHECK(cfg.kmax == 2);  // inherited from the scenario
  CHECK(cfg.gen.mats[0](0, 0) == 2.0);
  CHECK(cfg.outputs.directory == "somewhere");
  CHECK(cfg.outputs.write_json);
  CHECK_FALSE(cfg.outputs.write_csv);
}

TEST_CASE("number formatting round-trips and encodes non-finite values") {
  CHECK(detail::fmt_double(0.1) == "0.1");
  CHECK(detail::fmt_double(1.0) == "1");
  CHECK(std::stod(detail::fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(detail::jnum(infinity) == Json("inf"));
  CHECK(detail::jnum(-infinity) == Json("-inf"));
  CHECK(detail::jnum(std::nan("")) == Json("nan"));
  CHECK(detail::jnum(2.5) == Json(2.5));
  CHECK(detail::p_to_json(infinity) == Json("inf"));
  CHECK(detail::p_to_json(2.0) == Json(2.0));
}

TEST_CASE("identity scenario runs end to end") {
  ExperimentConfig cfg = scenario_config("identity");
  cfg.outputs.directory.clear();
  const RunReport rep = run_experiment(cfg);

  CHECK(rep.all_oracles_pass);
  CHECK(rep.groups.lambda.size() == 1);
  CHECK(rep.groups.mult[0] == 2);
  CHECK(std::abs(rep.spectrum.mu[0]) <= 1e-12);
  CHECK(rep.has_filtration);
  CHECK(rep.filt.levels.empty());
  CHECK(rep.has_splitting);
  CHECK(rep.split.blocks.size() == 1);
  CHECK(rep.temperedness.pass);
  CHECK_FALSE(rep.has_kappa);
  CHECK_FALSE(rep.has_dual_spectrum);

  SECTION("report JSON carries the full structure") {
    const Json j = report_to_json(rep);
    CHECK(j.at("format_version") == 1);
    CHECK(j.at("scenario") == "identity");
    CHECK(j.at("space").at("p") == Json(2.0));
    CHECK(j.at("spectrum").contains("mu"));
    CHECK(j.at("spectrum").contains("delta_se"));
    CHECK(j.at("groups").at("mult").at(0) == 2);
    CHECK(j.at("kappa_upper").is_null());
    CHECK(j.at("reduced").is_null());
    CHECK(j.at("all_oracles_pass") == true);
    REQUIRE(j.at("section2").is_array());
    CHECK(j.at("section2").at(0).at("all_pass") == true);
    bool found_group_count = false;
    for (const auto& c : j.at("oracle_checks"))
      if (c.at("name") == "group_count") found_group_count = true;
    CHECK(found_group_count);
  }

  SECTION("csv outputs are versioned and complete") {
    const std::string sc = spectrum_csv(rep.spectrum);
    CHECK(sc.rfind("# spectrum-csv v1\nk,n,sample,value\n", 0) == 0);
    const long rows = std::count(sc.begin(), sc.end(), '\n');
    CHECK(rows == 2 + 2 * 4 * 2);  // headers + kmax * grid * samples

    const std::string fc = filtration_csv(rep);
    CHECK(fc.rfind("# filtration-csv v1\nlevel,n,cauchy_dist,equiv_residual\n", 0) == 0);
  }
}

TEST_CASE("reports are byte-identical across worker counts") {
  ExperimentConfig cfg = scenario_config("identity");
  cfg.outputs.directory.clear();

  setenv("OSELEDETS_WORKERS", "1", 1);
  const std::string one = report_to_json(run_experiment(cfg)).dump(2);
  setenv("OSELEDETS_WORKERS", "3", 1);
  const std::string three = report_to_json(run_experiment(cfg)).dump(2);
  unsetenv("OSELEDETS_WORKERS");
  const std::string def = report_to_json(run_experiment(cfg)).dump(2);

  CHECK(one == three);
  CHECK(one == def);
}

TEST_CASE("inequality sweep passes clean and fails under injected corruption") {
  const SweepReport clean = section2_sweep(12, 2024, 4, 2);
  CHECK(clean.total_checks > 100);
  CHECK(clean.failures.empty());

  const SweepReport corrupted = section2_sweep(12, 2024, 4, 2, 0.05);
  CHECK_FALSE(corrupted.failures.empty());
  // the injected tolerance shrinks every right-hand side, so the recorded
  // witnesses must name real checks
  CHECK_FALSE(corrupted.failures[0].check.empty());
}

TEST_CASE("fixed-jordan scenario passes its declared oracles") {
  ExperimentConfig cfg = scenario_config("fixed-jordan");
  cfg.outputs.directory.clear();
  const RunReport rep = run_experiment(cfg);
  CHECK(rep.all_oracles_pass);
  for (const auto& c : rep.oracle_checks) {
    INFO(c.name << " value=" << c.value << " expected=" << c.expected
                << " tol=" << c.tolerance);
    CHECK(c.pass);
  }
  // the jordan fixture exercises filtration, splitting, and the reduced
  // cocycle diagnostic
  CHECK(rep.has_filtration);
  CHECK(rep.has_splitting);
  CHECK(rep.has_reduced);
  CHECK(rep.reduced.equiv_residual.back() < 1e-9);
}

TEST_CASE("config loading reports missing files") {
  CHECK_THROWS_WITH(load_config("/nonexistent/path.json"),
                    ContainsSubstring("cannot open config file"));
}
