#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <numeric>

#include "crtlab/experiment.hpp"
#include "crtlab/io.hpp"
#include "crtlab/replicate.hpp"

using namespace crtlab;

namespace {

ExperimentSpec small_rt_spec() {
  ExperimentSpec spec;
  spec.task = Task::rt;
  spec.scenario = "random";
  spec.statistic = StatisticKind::mean_rt;
  spec.n_sessions = 40;
  spec.n_resamples = 99;
  spec.alpha_levels = {0.01, 0.05, 0.1, 0.5};
  spec.master_seed = 123;
  spec.rt_config.n_trials = 30;
  return spec;
}

ExperimentSpec small_choice_spec() {
  ExperimentSpec spec;
  spec.task = Task::choice;
  spec.scenario = "blind";
  spec.resampler = ChoiceResampler::tangent;
  spec.statistic = StatisticKind::delayed;
  spec.n_sessions = 30;
  spec.n_resamples = 99;
  spec.alpha_levels = {0.05, 0.2};
  spec.master_seed = 77;
  spec.choice_config.n_trials = 100;
  return spec;
}

void check_consistency(const ExperimentReport& r) {
  REQUIRE(r.sessions.size() == r.spec.n_sessions);
  REQUIRE(r.rejections.size() == r.spec.alpha_levels.size());
  for (const auto& rc : r.rejections) {
    std::size_t count = 0;
    for (const auto& s : r.sessions) count += s.p.value() <= rc.alpha;
    REQUIRE(rc.rejections == count);
    REQUIRE(rc.n_sessions == r.spec.n_sessions);
  }
  REQUIRE(std::accumulate(r.histogram.begin(), r.histogram.end(), std::size_t{0}) ==
          r.spec.n_sessions);
  for (std::size_t i = 0; i < r.sessions.size(); ++i) {
    REQUIRE(r.sessions[i].index == i);
    REQUIRE(r.sessions[i].simulate_seed == SeedSpec{r.spec.master_seed, 2 * i});
    REQUIRE(r.sessions[i].test_seed == SeedSpec{r.spec.master_seed, 2 * i + 1});
    REQUIRE(r.sessions[i].p.denominator == r.spec.n_resamples + 1);
  }
}

}  // namespace

TEST_CASE("spec validation rejects inconsistent combinations", "[experiment][config]") {
  ExperimentSpec ok = small_rt_spec();
  REQUIRE_NOTHROW(ok.validate());

  auto bad = ok;
  bad.statistic = StatisticKind::same_trial;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.resampler = ChoiceResampler::tangent;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.scenario = "blind";
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = small_choice_spec();
  bad.statistic = StatisticKind::mean_rt;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.n_sessions = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.n_resamples = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.alpha_levels = {1.5};
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  bad = small_choice_spec();
  bad.choice_config.beta = 2.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  REQUIRE_THROWS_AS(run_experiment(bad), ConfigError);
}

TEST_CASE("histogram_bin splits [0, 1] into 20 bins", "[experiment]") {
  REQUIRE(histogram_bin(PValue{1, 1000}) == 0);
  REQUIRE(histogram_bin(PValue{49, 1000}) == 0);
  REQUIRE(histogram_bin(PValue{50, 1000}) == 1);
  REQUIRE(histogram_bin(PValue{999, 1000}) == 19);
  REQUIRE(histogram_bin(PValue{1000, 1000}) == 19);
}

TEST_CASE("reports are internally consistent", "[experiment]") {
  check_consistency(run_experiment(small_rt_spec()));
  check_consistency(run_experiment(small_choice_spec()));
}

TEST_CASE("reports do not depend on the number of workers", "[experiment]") {
  const auto spec = small_choice_spec();
  const auto one = run_experiment(spec, 1);
  const auto four = run_experiment(spec, 4);
  REQUIRE(one == four);
  REQUIRE(report_json_text(one) == report_json_text(four));
}

TEST_CASE("session results match direct simulation", "[experiment]") {
  const auto spec = small_rt_spec();
  const auto report = run_experiment(spec);
  Stream rng = derive_stream({spec.master_seed, 2 * 5});
  const auto session = rt::simulate_rt_session(rt::RandomPresser{}, spec.rt_config, rng);
  const auto outcome = rt::rt_crt(session, spec.n_resamples, {spec.master_seed, 11});
  REQUIRE(report.sessions[5].t_obs == outcome.t_obs);
  REQUIRE(report.sessions[5].p == outcome.p);
}

TEST_CASE("changing the master seed changes p-values but not structure", "[experiment]") {
  auto spec = small_rt_spec();
  const auto a = run_experiment(spec);
  spec.master_seed += 1;
  const auto b = run_experiment(spec);
  REQUIRE(a.sessions.size() == b.sessions.size());
  REQUIRE(a.rejections.size() == b.rejections.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.sessions.size(); ++i) {
    REQUIRE(a.sessions[i].index == b.sessions[i].index);
    REQUIRE(a.sessions[i].p.denominator == b.sessions[i].p.denominator);
    any_diff = any_diff || !(a.sessions[i].p == b.sessions[i].p);
  }
  REQUIRE(any_diff);
}

TEST_CASE("adding resamples does not change simulated data", "[experiment]") {
  auto spec = small_choice_spec();
  const auto a = run_experiment(spec);
  spec.n_resamples = 199;
  const auto b = run_experiment(spec);
  for (std::size_t i = 0; i < a.sessions.size(); ++i) REQUIRE(a.sessions[i].t_obs == b.sessions[i].t_obs);
}

TEST_CASE("replicate grid has eight documented cases", "[experiment][replicate]") {
  const auto grid = replicate_grid();
  REQUIRE(grid.size() == 8);
  const int refs[] = {48, 997, 45, 41, 948, 32, 40, 303};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    REQUIRE(grid[k].reference_per_1000 == refs[k]);
    REQUIRE(grid[k].spec.master_seed == kDefaultReplicateSeed + k);
    REQUIRE(grid[k].spec.n_sessions == 1000);
    REQUIRE(grid[k].spec.n_resamples == 999);
    REQUIRE_NOTHROW(grid[k].spec.validate());
  }
}

TEST_CASE("replicate smoke mode completes quickly with an 8-row table", "[experiment][replicate]") {
  const auto start = std::chrono::steady_clock::now();
  const auto results = run_reference_grid(50, 999);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(results.size() == 8);
  REQUIRE(seconds < 30.0);

  std::ostringstream table;
  print_summary_table(results, table);
  std::size_t lines = 0;
  for (char ch : table.str()) lines += ch == '\n';
  REQUIRE(lines == 9);  // header + 8 rows
  for (const auto& r : results) check_consistency(r.report);
}
