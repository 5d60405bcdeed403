#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "crtlab/rt_task.hpp"
#include "oracles.hpp"

using namespace crtlab;
using namespace crtlab::rt;
using Catch::Approx;

namespace {

/// Returns the scripted values in order, ignoring the requested mean and sd.
struct Script {
  std::vector<double> values;
  std::size_t next = 0;
  double operator()(double, double) { return values.at(next++); }
};

RtSession single_trial_session(std::vector<double> gaps, double q) {
  RtSession s;
  s.config.n_trials = 1;
  s.trials.push_back(RtTrial{std::move(gaps), q});
  return s;
}

/// Decile edges of Uniform[lo, hi].
std::vector<std::size_t> decile_counts(const std::vector<double>& xs, double lo, double hi) {
  std::vector<std::size_t> counts(10, 0);
  for (double x : xs) {
    auto bin = static_cast<std::size_t>((x - lo) / (hi - lo) * 10.0);
    ++counts[std::min<std::size_t>(bin, 9)];
  }
  return counts;
}

}  // namespace

TEST_CASE("feasible_range: rule application", "[rt][feasible_range]") {
  const RtConfig cfg;
  SECTION("bounded by a previous gap and the final gap") {
    const auto r = feasible_range(RtTrial{{600, 700, 400, 900}, 800}, cfg);
    REQUIRE(r.lo == 700);
    REQUIRE(r.hi == 900);
    REQUIRE_FALSE(r.lo_inclusive);
    REQUIRE_FALSE(r.contains(700));
    REQUIRE(r.contains(900));
  }
  SECTION("single press is bounded by q_low") {
    const auto r = feasible_range(RtTrial{{850}, 600}, cfg);
    REQUIRE(r.lo == 500);
    REQUIRE(r.hi == 850);
  }
  SECTION("both bounds from gaps") {
    const auto r = feasible_range(RtTrial{{950, 980}, 960}, cfg);
    REQUIRE(r.lo == 950);
    REQUIRE(r.hi == 980);
  }
  SECTION("long final gap is capped at q_high") {
    const auto r = feasible_range(RtTrial{{1200}, 700}, cfg);
    REQUIRE(r.lo == 500);
    REQUIRE(r.hi == 1000);
    REQUIRE(r.lo_inclusive);
  }
}

TEST_CASE("feasible_range: invalid trials", "[rt][feasible_range]") {
  const RtConfig cfg;
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{}, 600}, cfg), InvalidInput);
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{0.0, 900}, 600}, cfg), InvalidInput);
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{-5, 900}, 600}, cfg), InvalidInput);
  // q below an earlier gap: the earlier press would have been rewarded
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{700, 900}, 650}, cfg), InvalidInput);
  // q above the final gap: no stimulus before the final press
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{900}, 950}, cfg), InvalidInput);
  // q outside the prior range
  REQUIRE_THROWS_AS(feasible_range(RtTrial{{1200}, 1100}, cfg), InvalidInput);
}

TEST_CASE("play_trial: deceleration mechanics", "[rt][simulate]") {
  Script draws{{150, 200, 300, 400}};
  const RtTrial t = play_trial(Decelerator{}, 900, draws);
  REQUIRE(t.gaps.size() == 4);
  REQUIRE(t.gaps[0] == Approx(150));
  REQUIRE(t.gaps[1] == Approx(350));
  REQUIRE(t.gaps[2] == Approx(650));
  REQUIRE(t.gaps[3] == Approx(1050));
  REQUIRE(rewarded_press(t.gaps, t.q) == 3);
  REQUIRE(t.final_gap() - t.q == Approx(150));
}

TEST_CASE("play_trial: random presser stops at the first gap >= q", "[rt][simulate]") {
  Script draws{{300, 450, 700, 1200}};
  const RtTrial t = play_trial(RandomPresser{}, 700, draws);
  REQUIRE(t.gaps == std::vector<double>{300, 450, 700});
}

TEST_CASE("play_trial: responder waits for the shorter of baseline and stimulus + delay",
          "[rt][simulate]") {
  SECTION("stimulus-driven press") {
    Script draws{{900, 150}};
    const RtTrial t = play_trial(StimulusResponder{}, 600, draws);
    REQUIRE(t.gaps == std::vector<double>{750});
  }
  SECTION("baseline press before the stimulus, then a baseline press after it") {
    Script draws{{500, 650, 200}};
    const RtTrial t = play_trial(StimulusResponder{}, 600, draws);
    REQUIRE(t.gaps == std::vector<double>{500, 650});
  }
}

TEST_CASE("play_trial: runaway trials overflow", "[rt][simulate]") {
  auto tiny = [](double, double) { return 1.0; };
  REQUIRE_THROWS_AS(play_trial(RandomPresser{}, 600, tiny), SimulationOverflow);
}

TEST_CASE("simulated sessions satisfy trial invariants and replay", "[rt][simulate][property]") {
  const RtStrategy strategies[] = {RandomPresser{}, StimulusResponder{}, Decelerator{}};
  RtConfig cfg;
  cfg.n_trials = 200;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::uint64_t i = 0; i < 20; ++i) {
      Stream rng = derive_stream({100 + k, i});
      const RtSession s = simulate_rt_session(strategies[k], cfg, rng);
      REQUIRE(s.trials.size() == cfg.n_trials);
      for (const auto& t : s.trials) {
        REQUIRE(t.q >= cfg.q_low);
        REQUIRE(t.q <= cfg.q_high);
        REQUIRE(std::all_of(t.gaps.begin(), t.gaps.end(), [](double g) { return g >= kMinGapMs; }));
        REQUIRE(feasible_range(t, cfg).contains(t.q));
      }
      REQUIRE(replay_rewards(s, s.quiescence()) == recorded_rewards(s));
      Stream rs = derive_stream({200 + k, i});
      const auto q2 = resample_quiescence(s, rs);
      for (std::size_t t = 0; t < q2.size(); ++t)
        REQUIRE(feasible_range(s.trials[t], cfg).contains(q2[t]));
      REQUIRE(replay_rewards(s, q2) == recorded_rewards(s));
    }
  }
}

TEST_CASE("simulate_rt_session rejects bad configuration", "[rt][simulate]") {
  Stream rng = derive_stream({1, 1});
  RtConfig cfg;
  cfg.q_low = 1000;
  cfg.q_high = 500;
  REQUIRE_THROWS_AS(simulate_rt_session(RandomPresser{}, cfg, rng), InvalidInput);
  REQUIRE_THROWS_AS(simulate_rt_session(RandomPresser{800, 0}, RtConfig{}, rng), InvalidInput);
}

TEST_CASE("mean_reaction_time: direct values", "[rt][statistic]") {
  const auto one = single_trial_session({900}, 600);
  REQUIRE(mean_reaction_time(one, std::vector<double>{600}) == Approx(300));

  RtSession two;
  two.config.n_trials = 2;
  two.trials = {RtTrial{{600, 800}, 700}, RtTrial{{950}, 500}};
  REQUIRE(mean_reaction_time(two, std::vector<double>{700, 500}) == Approx(275));
}

TEST_CASE("mean_reaction_time: rejects q outside the feasible range", "[rt][statistic]") {
  RtSession s;
  s.config.n_trials = 2;
  s.trials = {RtTrial{{600, 800}, 700}, RtTrial{{950}, 500}};
  REQUIRE_THROWS_AS(mean_reaction_time(s, std::vector<double>{550, 500}), InvalidInput);
  REQUIRE_THROWS_AS(mean_reaction_time(s, std::vector<double>{700, 960}), InvalidInput);
  REQUIRE_THROWS_AS(mean_reaction_time(s, std::vector<double>{700}), InvalidInput);
}

TEST_CASE("mean_reaction_time: shifting every final gap shifts the mean", "[rt][statistic][property]") {
  Stream rng = derive_stream({31, 0});
  RtConfig cfg;
  cfg.n_trials = 50;
  const RtSession s = simulate_rt_session(RandomPresser{}, cfg, rng);
  const auto q = s.quiescence();
  RtSession shifted = s;
  for (auto& t : shifted.trials) t.gaps.back() += 37.5;
  REQUIRE(mean_reaction_time(shifted, q) == Approx(mean_reaction_time(s, q) + 37.5));
}

TEST_CASE("resample_quiescence: truncated-uniform moments", "[rt][resample]") {
  const auto s = single_trial_session({600, 700, 400, 900}, 800);
  Stream rng = derive_stream({40, 0});
  constexpr int n = 100000;
  double sum = 0, lo = 1e9, hi = -1e9;
  for (int i = 0; i < n; ++i) {
    const double q = resample_quiescence(s, rng)[0];
    sum += q;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  const double se = 200.0 / std::sqrt(12.0) / std::sqrt(double(n));
  REQUIRE(std::abs(sum / n - 800.0) < 3 * se);
  REQUIRE(lo > 700.0);
  REQUIRE(hi <= 900.0);
}

TEST_CASE("resample_quiescence: untruncated trial matches the prior", "[rt][resample]") {
  const auto s = single_trial_session({1200}, 750);
  Stream rng = derive_stream({41, 1});
  constexpr int n = 100000;
  std::vector<double> resampled, prior;
  for (int i = 0; i < n; ++i) {
    resampled.push_back(resample_quiescence(s, rng)[0]);
    prior.push_back(rng.uniform(500.0, 1000.0));
  }
  const auto a = decile_counts(resampled, 500, 1000);
  const auto b = decile_counts(prior, 500, 1000);
  const double sd_diff = std::sqrt(2.0 * n * 0.1 * 0.9);
  const double z = oracle::family_z(10);
  for (int k = 0; k < 10; ++k) REQUIRE(std::abs(double(a[k]) - double(b[k])) < z * sd_diff);
}

TEST_CASE("resample_quiescence: rejection path matches truncated-uniform path", "[rt][resample]") {
  const auto s = single_trial_session({600, 700, 400, 900}, 800);
  Stream r1 = derive_stream({42, 0});
  Stream r2 = derive_stream({42, 1});
  constexpr int n = 100000;
  std::vector<double> direct, rejected;
  for (int i = 0; i < n; ++i) {
    direct.push_back(resample_quiescence(s, r1, QuiescenceSampler::truncated_uniform)[0]);
    rejected.push_back(resample_quiescence(s, r2, QuiescenceSampler::rejection)[0]);
  }
  for (double q : rejected) REQUIRE((q > 700 && q <= 900));
  const auto a = decile_counts(direct, 700, 900);
  const auto b = decile_counts(rejected, 700, 900);
  const double sd_diff = std::sqrt(2.0 * n * 0.1 * 0.9);
  const double z = oracle::family_z(10);
  for (int k = 0; k < 10; ++k) REQUIRE(std::abs(double(a[k]) - double(b[k])) < z * sd_diff);
}

TEST_CASE("response strategy has shorter mean reaction time than random", "[rt][simulate]") {
  RtConfig cfg;
  double random_total = 0, response_total = 0;
  constexpr int sessions = 1000;
  for (std::uint64_t i = 0; i < sessions; ++i) {
    Stream a = derive_stream({50, i});
    Stream b = derive_stream({51, i});
    const auto rs = simulate_rt_session(RandomPresser{}, cfg, a);
    const auto ss = simulate_rt_session(StimulusResponder{}, cfg, b);
    random_total += mean_reaction_time(rs, rs.quiescence());
    response_total += mean_reaction_time(ss, ss.quiescence());
  }
  REQUIRE(response_total / sessions < random_total / sessions);
}

TEST_CASE("rt_crt: lower tail, lattice and determinism", "[rt][crt]") {
  Stream rng = derive_stream({60, 0});
  const auto s = simulate_rt_session(StimulusResponder{}, RtConfig{}, rng);
  const auto a = rt_crt(s, 199, {60, 1});
  const auto b = rt_crt(s, 199, {60, 1});
  REQUIRE(a.tail == TailDirection::lower);
  REQUIRE(a.p.denominator == 200);
  REQUIRE(a.p == b.p);
  REQUIRE(a.ensemble == b.ensemble);
  REQUIRE(a.t_obs == Approx(mean_reaction_time(s, s.quiescence())));
  // a responding subject is far faster than the null ensemble
  REQUIRE(a.p.numerator == 1);
}

TEST_CASE("rt_crt: random strategy p-values are roughly uniform", "[rt][crt]") {
  constexpr int sessions = 400;
  int below_half = 0;
  for (std::uint64_t i = 0; i < sessions; ++i) {
    Stream rng = derive_stream({61, 2 * i});
    const auto s = simulate_rt_session(RandomPresser{}, RtConfig{}, rng);
    below_half += rt_crt(s, 99, {61, 2 * i + 1}).p.value() <= 0.5;
  }
  const double se = std::sqrt(0.25 / sessions);
  REQUIRE(std::abs(below_half / double(sessions) - 0.5) < 3 * se);
}
