#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "crnsim/crnsim.hpp"

using namespace crnsim;

namespace {

ScenarioConfig parse_text(const std::string& text) {
  std::stringstream ss(text);
  return parse_config(ss);
}

ScenarioConfig single_su_static(int horizon) {
  ScenarioConfig cfg;
  cfg.count_pu = 0;
  cfg.count_su = 1;
  cfg.horizon_steps = horizon;
  cfg.channel.fading = false;
  cfg.channel.shadowing_stddev_db = 0.0;
  cfg.noise_floor_w = 1e-2;  // lone user: the floor is the whole interference
  cfg.p_init_min_w = 0.01;
  cfg.p_init_max_w = 0.01;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("minimal config applies documented defaults") {
  const ScenarioConfig cfg = parse_text("count_pu = 2\ncount_su = 3\nseed = 9\n");
  CHECK(cfg.count_pu == 2);
  CHECK(cfg.count_su == 3);
  CHECK(cfg.seed == 9);
  CHECK(cfg.area_km == 9.0);
  CHECK(cfg.p_max_w == 2.0);
  CHECK(cfg.noise_floor_w == 1e-13);
  CHECK(cfg.targets.su_high == 0.1);
  CHECK(cfg.targets.pu == 0.1995);
  CHECK(cfg.targets.su_low == 0.01);
  CHECK(cfg.alpha_w == 1e-4);
  CHECK(cfg.basis_length == 3);
  CHECK(cfg.update_mode == UpdateMode::RoundRobin);
  CHECK(cfg.controller == ControllerKind::FhAodpa);
}

TEST_CASE("validation names the offending field") {
  CHECK_THROWS_WITH(parse_text("count_su = 1\nhorizon_steps = 10\nnoise_floor = -1\n"),
                    Catch::Matchers::ContainsSubstring("noise_floor"));
  CHECK_THROWS_WITH(parse_text("count_su = 1\nq_error = 0\n"),
                    Catch::Matchers::ContainsSubstring("q_error"));
  CHECK_THROWS_AS(parse_text("count_su = 1\nbogus_key = 3\n"), ConfigError);
  CHECK_THROWS_WITH(parse_text("count_su = 1\nbogus_key = 3\n"),
                    Catch::Matchers::ContainsSubstring("bogus_key"));
  CHECK_THROWS_WITH(parse_text("count_su = 1\nnot a kv line\n"),
                    Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("paper preset carries the published constants") {
  const ScenarioConfig cfg = parse_text("preset = paper-fig4\n");
  CHECK(cfg.count_pu == 8);
  CHECK(cfg.count_su == 20);
  CHECK(cfg.horizon_steps == 2000);
  CHECK(cfg.bandwidth_hz == 1e5);
  CHECK(cfg.alpha_w == 1e-4);
  REQUIRE(cfg.schedule.size() == 5);
  CHECK(cfg.schedule[1].start_s == 500.0);
  CHECK(cfg.schedule[1].activity == ActivityCase::Case1);
  CHECK(cfg.schedule[4].end_s == 2000.0);
  // Overrides after the preset key win.
  const ScenarioConfig tweaked = parse_text("preset = paper-fig4\nseed = 77\n");
  CHECK(tweaked.seed == 77);
}

TEST_CASE("schedule must cover the horizon") {
  CHECK_THROWS_WITH(
      parse_text("count_su = 1\nhorizon_steps = 100\nschedule = 0:50=case1\n"),
      Catch::Matchers::ContainsSubstring("schedule"));
  CHECK_NOTHROW(
      parse_text("count_su = 1\nhorizon_steps = 100\nschedule = 0:60=case1,60:100=case2\n"));
}

TEST_CASE("empty horizon produces an empty trace") {
  ScenarioConfig cfg = single_su_static(0);
  CHECK(run_scenario(cfg).empty());
}

TEST_CASE("identical seeds give identical traces") {
  ScenarioConfig cfg;
  cfg.count_pu = 2;
  cfg.count_su = 3;
  cfg.horizon_steps = 40;
  cfg.seed = 123;
  cfg.schedule = {Interval{0.0, 20.0, ActivityCase::Case2},
                  Interval{20.0, 40.0, ActivityCase::Case1}};
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_sir_su_db == b[i].mean_sir_su_db);
    CHECK(a[i].mean_power_su_w == b[i].mean_power_su_w);
    CHECK(a[i].cumulative_cost == b[i].cumulative_cost);
    CHECK(a[i].spectrum_efficiency == b[i].spectrum_efficiency);
  }
}

TEST_CASE("case masking and metric sanity over a schedule") {
  ScenarioConfig cfg;
  cfg.count_pu = 2;
  cfg.count_su = 4;
  cfg.horizon_steps = 60;
  cfg.seed = 5;
  cfg.schedule = {Interval{0.0, 20.0, ActivityCase::Case2},
                  Interval{20.0, 40.0, ActivityCase::Case1},
                  Interval{40.0, 60.0, ActivityCase::Case2}};
  const auto trace = run_scenario(cfg);
  REQUIRE(trace.size() == 60);
  double prev_cost = 0.0;
  for (const MetricsRecord& r : trace) {
    const bool case1 = r.step >= 20 && r.step < 40;
    if (case1) CHECK(r.mean_power_pu_w == 0.0);
    CHECK(r.mean_power_pu_w >= 0.0);
    CHECK(r.mean_power_pu_w <= cfg.p_max_w);
    CHECK(r.mean_power_su_w >= 0.0);
    CHECK(r.mean_power_su_w <= cfg.p_max_w);
    CHECK(r.spectrum_efficiency >= 0.0);
    CHECK(r.cumulative_cost >= prev_cost);
    prev_cost = r.cumulative_cost;
  }
}

TEST_CASE("single-user oracle run realizes the optimal cost") {
  ScenarioConfig cfg = single_su_static(120);
  cfg.controller = ControllerKind::Oracle;
  Simulation sim(cfg);
  const double own_gain = sim.network().gains.gain(0, 0);
  const double interference = cfg.noise_floor_w;
  const double r0 = own_gain * 0.01 / interference;

  const auto trace = sim.run();
  REQUIRE(trace.size() == 120);

  const ErrorSystem sys = error_system(0.0, own_gain);
  const OracleSolution sol = backward_riccati(sys.A, sys.B, cfg.q_matrix(), cfg.s_control,
                                              cfg.p_terminal_matrix(), 120);
  const Vec2 e0 = make_augmented_error(r0, cfg.targets.su_high).vec();
  const double expected = optimal_cost(e0, sol.cost_to_go[0]);
  CHECK_THAT(trace.back().cumulative_cost, Catch::Matchers::WithinRel(expected, 1e-8));
}

TEST_CASE("csv emission and round trip") {
  std::vector<MetricsRecord> trace;
  std::stringstream empty_out;
  write_metrics_csv(trace, empty_out);
  CHECK(empty_out.str() == std::string(kMetricsCsvHeader) + "\n");

  MetricsRecord a;
  a.step = 0;
  a.mean_sir_pu_db = -std::numeric_limits<double>::infinity();
  a.mean_sir_su_db = -10.123456789;
  a.mean_power_su_w = 0.1;
  a.cumulative_cost = 1.5;
  MetricsRecord b = a;
  b.step = 1;
  b.cumulative_cost = 2.25;
  b.saturation_count = 3;
  trace = {a, b};

  std::stringstream out;
  write_metrics_csv(trace, out);
  std::string line;
  int lines = 0;
  std::stringstream count(out.str());
  while (std::getline(count, line)) ++lines;
  CHECK(lines == 3);

  std::stringstream in(out.str());
  const auto parsed = read_metrics_csv(in);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].mean_sir_pu_db == a.mean_sir_pu_db);
  CHECK(parsed[0].mean_sir_su_db == a.mean_sir_su_db);
  CHECK(parsed[1].cumulative_cost == b.cumulative_cost);
  CHECK(parsed[1].saturation_count == 3);
}

TEST_CASE("jsonl emission writes one object per record") {
  MetricsRecord a;
  a.step = 7;
  a.mean_sir_pu_db = -std::numeric_limits<double>::infinity();
  a.spectrum_efficiency = 1.25;
  std::stringstream out;
  write_metrics_jsonl({a}, out);
  const std::string s = out.str();
  CHECK(s.find("\"step\":7") != std::string::npos);
  CHECK(s.find("\"mean_sir_pu_db\":null") != std::string::npos);
  CHECK(s.find("\"spectrum_efficiency\":1.25") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1);
}

TEST_CASE("emit_metrics surfaces io failures with path context") {
  CHECK_THROWS_WITH(emit_metrics({}, "/nonexistent-dir/trace.csv", TraceFormat::Csv),
                    Catch::Matchers::ContainsSubstring("/nonexistent-dir/trace.csv"));
}

TEST_CASE("load_config reads files and reports missing ones") {
  const std::string path = "tmp_test_config.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\ncount_pu = 1\ncount_su = 2\nhorizon_steps = 5\nseed = 3\n";
  }
  const ScenarioConfig cfg = load_config(path);
  CHECK(cfg.count_pu == 1);
  CHECK(cfg.horizon_steps == 5);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config("does_not_exist.cfg"), IoError);
}

TEST_CASE("synchronous update mode applies every command") {
  ScenarioConfig cfg;
  cfg.count_pu = 0;
  cfg.count_su = 3;
  cfg.horizon_steps = 30;
  cfg.seed = 21;
  cfg.update_mode = UpdateMode::Synchronous;
  cfg.controller = ControllerKind::Baseline;
  cfg.channel.fading = false;
  cfg.channel.shadowing_stddev_db = 0.0;
  const auto trace = run_scenario(cfg);
  REQUIRE(trace.size() == 30);
  // Classical balancing applied synchronously on a static channel converges.
  const double final_db = trace.back().mean_sir_su_db;
  CHECK(std::abs(final_db - 10.0 * std::log10(cfg.targets.su_high)) < 0.5);
}
