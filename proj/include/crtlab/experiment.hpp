/**
 * @file experiment.hpp
 * @brief Batch driver: simulate many sessions, test each, aggregate.
 *
 * Session i is simulated from stream (master_seed, 2i) and tested with
 * stream (master_seed, 2i + 1), so the report does not depend on how
 * sessions are scheduled across workers, and changing the number of
 * resamples never perturbs the simulated data.
 */

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "crtlab/choice_task.hpp"
#include "crtlab/crt.hpp"
#include "crtlab/errors.hpp"
#include "crtlab/random.hpp"
#include "crtlab/rt_task.hpp"

namespace crtlab {

enum class Task { rt, choice };
enum class StatisticKind { mean_rt, same_trial, delayed };
using choice::ChoiceResampler;

inline const char* to_string(Task t) noexcept { return t == Task::rt ? "rt" : "choice"; }
inline const char* to_string(StatisticKind s) noexcept {
  switch (s) {
    case StatisticKind::mean_rt: return "mean_rt";
    case StatisticKind::same_trial: return "same_trial";
    case StatisticKind::delayed: return "delayed";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  if (s == "rt") return Task::rt;
  if (s == "choice") return Task::choice;
  throw ConfigError("unknown task '" + s + "' (expected rt or choice)");
}

inline StatisticKind parse_statistic(const std::string& s) {
  if (s == "mean_rt") return StatisticKind::mean_rt;
  if (s == "same_trial") return StatisticKind::same_trial;
  if (s == "delayed") return StatisticKind::delayed;
  throw ConfigError("unknown statistic '" + s + "' (expected mean_rt, same_trial or delayed)");
}

inline ChoiceResampler parse_resampler(const std::string& s) {
  if (s == "conditional") return ChoiceResampler::conditional;
  if (s == "tangent") return ChoiceResampler::tangent;
  throw ConfigError("unknown resampler '" + s + "' (expected conditional or tangent)");
}

/// Named press strategy for the reaction-time task.
inline rt::RtStrategy rt_strategy_named(const std::string& name) {
  if (name == "random") return rt::RandomPresser{};
  if (name == "response") return rt::StimulusResponder{};
  if (name == "deceleration") return rt::Decelerator{};
  throw ConfigError("unknown rt scenario '" + name +
                    "' (expected random, response or deceleration)");
}

/// Named agent for the choice task.
inline choice::AgentParams agent_named(const std::string& name) {
  if (name == "blind") return choice::AgentParams::blind();
  if (name == "sighted") return choice::AgentParams::sighted();
  throw ConfigError("unknown choice scenario '" + name + "' (expected blind or sighted)");
}

struct ExperimentSpec {
  Task task = Task::rt;
  std::string scenario = "random";
  ChoiceResampler resampler = ChoiceResampler::conditional;
  StatisticKind statistic = StatisticKind::mean_rt;
  std::size_t n_sessions = 1000;
  std::size_t n_resamples = 999;
  std::vector<double> alpha_levels{0.05};
  std::uint64_t master_seed = 0;
  rt::RtConfig rt_config;
  choice::ChoiceConfig choice_config;

  /// Throws ConfigError for inconsistent or out-of-range settings.
  void validate() const {
    if (n_sessions < 1) throw ConfigError("n_sessions must be >= 1");
    if (n_resamples < 1) throw ConfigError("n_resamples must be >= 1");
    if (alpha_levels.empty()) throw ConfigError("at least one alpha level is required");
    for (double a : alpha_levels)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha levels must lie in (0, 1)");
    if (task == Task::rt) {
      if (statistic != StatisticKind::mean_rt)
        throw ConfigError("the rt task supports only the mean_rt statistic");
      if (resampler != ChoiceResampler::conditional)
        throw ConfigError("the tangent resampler applies only to the choice task");
      rt_strategy_named(scenario);
    } else {
      if (statistic == StatisticKind::mean_rt)
        throw ConfigError("mean_rt applies only to the rt task");
      agent_named(scenario);
    }
    try {
      rt_config.validate();
      choice_config.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
    if (task == Task::choice && statistic == StatisticKind::delayed &&
        choice_config.n_trials < 2)
      throw ConfigError("the delayed statistic needs at least 2 trials per session");
  }

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

inline constexpr std::size_t kHistogramBins = 20;
inline constexpr const char* kRejectionRule = "p <= alpha";

struct SessionResult {
  std::size_t index = 0;
  SeedSpec simulate_seed;
  SeedSpec test_seed;
  double t_obs = 0.0;
  PValue p;

  friend bool operator==(const SessionResult&, const SessionResult&) = default;
};

struct RejectionCount {
  double alpha = 0.05;
  std::size_t rejections = 0;
  std::size_t n_sessions = 0;

  double rate() const noexcept {
    return n_sessions == 0 ? 0.0 : static_cast<double>(rejections) / static_cast<double>(n_sessions);
  }

  friend bool operator==(const RejectionCount&, const RejectionCount&) = default;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<SessionResult> sessions;
  std::vector<RejectionCount> rejections;
  std::array<std::size_t, kHistogramBins> histogram{};
  double wall_time_s = 0.0;  ///< informational; not serialized, ignored by ==

  const RejectionCount* at_alpha(double alpha) const {
    for (const auto& r : rejections)
      if (r.alpha == alpha) return &r;
    return nullptr;
  }

  friend bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
    return a.spec == b.spec && a.sessions == b.sessions && a.rejections == b.rejections &&
           a.histogram == b.histogram;
  }
};

/// Bin of [0, 1] split into kHistogramBins equal bins; p = 1 falls in the last bin.
inline std::size_t histogram_bin(const PValue& p) {
  const std::size_t bin = p.numerator * kHistogramBins / p.denominator;
  return std::min(bin, kHistogramBins - 1);
}

/// Rejection counts and histogram recomputed from the stored per-session p-values.
inline void aggregate(ExperimentReport& report) {
  report.rejections.clear();
  for (double alpha : report.spec.alpha_levels) {
    RejectionCount rc{alpha, 0, report.sessions.size()};
    for (const auto& s : report.sessions)
      if (s.p.value() <= alpha) ++rc.rejections;
    report.rejections.push_back(rc);
  }
  report.histogram.fill(0);
  for (const auto& s : report.sessions) ++report.histogram[histogram_bin(s.p)];
}

/// Simulates and tests session `index` of the experiment.
inline SessionResult run_session(const ExperimentSpec& spec, std::size_t index) {
  SessionResult result;
  result.index = index;
  result.simulate_seed = SeedSpec{spec.master_seed, 2 * static_cast<std::uint64_t>(index)};
  result.test_seed = SeedSpec{spec.master_seed, 2 * static_cast<std::uint64_t>(index) + 1};
  Stream sim_rng = derive_stream(result.simulate_seed);

  TestOutcome outcome;
  if (spec.task == Task::rt) {
    const auto session =
        rt::simulate_rt_session(rt_strategy_named(spec.scenario), spec.rt_config, sim_rng);
    outcome = rt::rt_crt(session, spec.n_resamples, result.test_seed);
  } else {
    const auto session =
        choice::simulate_choice_session(agent_named(spec.scenario), spec.choice_config, sim_rng);
    const auto stat = spec.statistic == StatisticKind::same_trial
                          ? choice::ChoiceStatistic::same_trial
                          : choice::ChoiceStatistic::delayed;
    outcome = choice::choice_crt(session, spec.choice_config, stat, spec.resampler,
                                 spec.n_resamples, result.test_seed);
  }
  result.t_obs = outcome.t_obs;
  result.p = outcome.p;
  return result;
}

/**
 * @brief Runs every session of an experiment on `n_threads` workers
 *        (0 = hardware concurrency).
 *
 * The report is identical for any worker count. The first failing session
 * (lowest index) is rethrown as SessionError.
 */
inline ExperimentReport run_experiment(const ExperimentSpec& spec, unsigned n_threads = 0) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.spec = spec;
  report.sessions.resize(spec.n_sessions);

  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, spec.n_sessions));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<std::size_t> error_index;
  std::string error_message;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= spec.n_sessions || failed.load()) return;
      try {
        report.sessions[i] = run_session(spec, i);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!error_index || i < *error_index) {
          error_index = i;
          error_message = e.what();
        }
        failed.store(true);
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  }
  if (error_index) throw SessionError(*error_index, error_message);

  aggregate(report);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace crtlab
