#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fbsvar/experiments.hpp"
#include "fbsvar/stats.hpp"

using namespace fbsvar;

namespace {

json minimal_clt_config() {
  return json{{"kind", "clt"},
              {"name", "clt_tiny"},
              {"seed", 991},
              {"hurst", {0.3, 0.6}},
              {"shape", {16, 16}},
              {"functional", "Pk:2"},
              {"replications", 200},
              {"t_points", {{1.0, 1.0}}},
              {"bootstrap_resamples", 200},
              {"tolerances", {{"z", 5.0}, {"var_rel", 0.5}}}};
}

}  // namespace

TEST_CASE("sample statistics", "[experiments]") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(sample_mean(x) == Catch::Approx(3.0));
  CHECK(sample_variance(x) == Catch::Approx(2.5));
  CHECK(sample_median(x) == Catch::Approx(3.0));
  CHECK(sample_skewness(x) == Catch::Approx(0.0).margin(1e-14));
  const std::vector<double> y = {2.0, 4.0, 6.0, 8.0, 10.0};
  CHECK(sample_correlation(x, y) == Catch::Approx(1.0));
  CHECK(sample_covariance(x, y) == Catch::Approx(5.0));
}

TEST_CASE("bootstrap is seeded and sane", "[experiments]") {
  CounterRng rng({5, 1});
  std::vector<double> data(400);
  for (auto& v : data) v = rng.next_gaussian();
  std::vector<double> tmp(data.size());
  const auto stat = [&](std::span<const std::int64_t> idx) {
    for (std::size_t k = 0; k < idx.size(); ++k) tmp[k] = data[idx[k]];
    return sample_mean(tmp);
  };
  const auto a = bootstrap(400, 500, {9, 9}, stat);
  const auto b = bootstrap(400, 500, {9, 9}, stat);
  CHECK(a.se == b.se);
  CHECK(a.lo == b.lo);
  // SE of the mean should be near sd/sqrt(n)
  const double expect = std::sqrt(sample_variance(data) / 400.0);
  CHECK(a.se == Catch::Approx(expect).epsilon(0.25));
  CHECK(a.lo < a.hi);
}

TEST_CASE("schema validates the bundled configs", "[experiments]") {
  int checked = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(FBSVAR_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream is(entry.path());
    REQUIRE(is.good());
    json doc = json::parse(is);
    CHECK_NOTHROW(validate_config(doc));
    CHECK_NOTHROW(parse_config(doc));
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("config validation points at the offending field", "[experiments]") {
  SECTION("missing required field") {
    json doc = minimal_clt_config();
    doc.erase("hurst");
    try {
      validate_config(doc);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.pointer == "/hurst");
    }
  }
  SECTION("out-of-range hurst component") {
    json doc = minimal_clt_config();
    doc["hurst"] = {1.2, 0.5};
    try {
      validate_config(doc);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.pointer == "/hurst/0");
    }
  }
  SECTION("unknown top-level field") {
    json doc = minimal_clt_config();
    doc["surprise"] = 1;
    CHECK_THROWS_AS(validate_config(doc), config_error);
  }
  SECTION("bad functional") {
    json doc = minimal_clt_config();
    doc["functional"] = "Pq:2";
    CHECK_THROWS_AS(parse_config(doc), config_error);
  }
}

TEST_CASE("experiment reports are thread-count invariant", "[experiments]") {
  const ExperimentConfig cfg = parse_config(minimal_clt_config());
  ExperimentReport r1 = run_experiment(cfg, 1);
  ExperimentReport r4 = run_experiment(cfg, 4);
  json a = r1.to_json();
  json b = r4.to_json();
  a.erase("wall_seconds");
  b.erase("wall_seconds");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("regime mismatches are rejected", "[experiments]") {
  json doc = minimal_clt_config();
  doc["hurst"] = {0.9, 0.95};
  CHECK_THROWS_AS(run_experiment(parse_config(doc), 1), inconsistency_error);

  json control = json{{"kind", "nclt"},
                      {"name", "bad_control"},
                      {"seed", 1},
                      {"hurst", {0.9}},
                      {"shape_grid", {{8}, {16}}},
                      {"functional", "Pk:2"},
                      {"replications", 50},
                      {"variant", "control"}};
  CHECK_THROWS_AS(run_experiment(parse_config(control), 1),
                  inconsistency_error);
}

TEST_CASE("small covariance experiment passes", "[experiments]") {
  const json doc = {{"kind", "covariance"},
                    {"name", "cov_tiny"},
                    {"seed", 31},
                    {"hurst", {0.4, 0.7}},
                    {"shape", {8, 8}},
                    {"replications", 4000},
                    {"t_points", {{1.0, 1.0}, {0.5, 0.5}}},
                    {"lags", {{0, 1}, {1, 1}}},
                    {"bootstrap_resamples", 300}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 2);
  CHECK(rep.all_pass);
  CHECK(rep.statistics.size() == 3 + 2);  // pairs + lags
}

TEST_CASE("beta explosion experiment is deterministic and passes",
          "[experiments]") {
  const json doc = {{"kind", "beta-explosion"},
                    {"name", "beta_tiny"},
                    {"seed", 8},
                    {"hurst", {0.5, 0.5}},
                    {"power", 2},
                    {"shape_grid", {{8, 8}, {16, 16}, {32, 32}}},
                    {"tolerances",
                     {{"ln_beta_tol", 1e-9}, {"fixed_point_tol", 1e-12}}}};
  const ExperimentReport a = run_experiment(parse_config(doc), 1);
  CHECK(a.all_pass);
  const ExperimentReport b = run_experiment(parse_config(doc), 3);
  json ja = a.to_json(), jb = b.to_json();
  ja.erase("wall_seconds");
  jb.erase("wall_seconds");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("flln experiment medians decrease", "[experiments]") {
  const json doc = {{"kind", "flln"},
                    {"name", "flln_tiny"},
                    {"seed", 77},
                    {"hurst", {0.6, 0.6}},
                    {"power", 2},
                    {"shape_grid", {{8, 8}, {16, 16}, {32, 32}}},
                    {"replications", 60}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 2);
  CHECK(rep.all_pass);
}

TEST_CASE("oracle agreement on a small grid", "[experiments]") {
  const json doc = {
      {"kind", "oracle-agreement"},
      {"name", "oracle_tiny"},
      {"seed", 5150},
      {"replications", 20000},
      {"bootstrap_resamples", 200},
      {"cases",
       {{{"hurst", {0.75}}, {"l", {3}}, {"functional", "Pk:2"}, {"p", 2}},
        {{"hurst", {0.3, 0.9}},
         {"l", {2, 3}},
         {"functional", "power:4"},
         {"p", 2}}}}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 2);
  CHECK(rep.all_pass);
}

TEST_CASE("nclt experiment on a reduced grid", "[experiments]") {
  const json doc = {{"kind", "nclt"},
                    {"name", "nclt_tiny"},
                    {"seed", 2718},
                    {"hurst", {0.9}},
                    {"shape_grid", {{64}, {128}, {256}, {512}}},
                    {"functional", "Pk:2"},
                    {"replications", 600},
                    {"bootstrap_resamples", 300},
                    {"tolerances",
                     {{"z", 4.5}, {"var_rel", 0.15}, {"kurt_floor", 0.5}}}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 2);
  for (const auto& s : rep.statistics) {
    INFO(s.name << " emp=" << s.empirical << " target=" << s.target
                << " z=" << s.z);
    CHECK(s.pass);
  }
}

TEST_CASE("rank-one non-central limit is the sheet itself", "[experiments]") {
  const json doc = {{"kind", "nclt"},
                    {"name", "nclt_rank1"},
                    {"seed", 161803},
                    {"hurst", {0.8}},
                    {"shape_grid", {{64}, {128}, {256}}},
                    {"functional", "Pk:1"},
                    {"replications", 400},
                    {"bootstrap_resamples", 200},
                    {"tolerances", {{"z", 4.5}, {"var_rel", 0.2}}}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 2);
  bool saw_corr = false;
  for (const auto& s : rep.statistics) {
    INFO(s.name << " emp=" << s.empirical << " target=" << s.target);
    CHECK(s.pass);
    saw_corr |= (s.name == "corr_Ubar_Z(1)");
  }
  CHECK(saw_corr);
}

TEST_CASE("interpolated fluctuation experiment", "[experiments]") {
  std::ifstream is(std::string(FBSVAR_CONFIG_DIR) + "/interpolation_smoke.json");
  REQUIRE(is.good());
  const ExperimentReport rep = run_experiment(parse_config(json::parse(is)), 2);
  for (const auto& s : rep.statistics) {
    INFO(s.name << " emp=" << s.empirical << " target=" << s.target
                << " z=" << s.z);
    CHECK(s.pass);
  }
}

TEST_CASE("moment bound experiment kind", "[experiments]") {
  const json doc = {
      {"kind", "moment-bound"},
      {"name", "bound_tiny"},
      {"seed", 0},
      {"cases",
       {{{"hurst", {0.9}}, {"l", {4}}, {"functional", "power:4"}, {"p", 4}},
        {{"hurst", {0.5, 0.5}}, {"l", {2, 2}}, {"functional", "Pk:2"}, {"p", 2}}}}};
  const ExperimentReport rep = run_experiment(parse_config(doc), 1);
  CHECK(rep.all_pass);
  CHECK(rep.statistics.size() == 4);  // exact + ratio per case
}

TEST_CASE("report serialization", "[experiments]") {
  const ExperimentConfig cfg = parse_config(minimal_clt_config());
  const ExperimentReport rep = run_experiment(cfg, 2);
  const json j = rep.to_json();
  CHECK(j.at("kind") == "clt");
  CHECK(j.at("config_hash").get<std::string>().size() == 16);
  CHECK(j.at("statistics").is_array());
  const std::string csv = rep.to_csv();
  std::size_t rows = 0;
  for (char c : csv) rows += (c == '\n');
  CHECK(rows == rep.statistics.size() + 1);
}
