/**
 * @file rt_task.hpp
 * @brief Reaction-time task with a randomized quiescence interval.
 *
 * On each trial a quiescence interval q is drawn uniformly from
 * [q_low, q_high]. The stimulus appears once the subject has gone q without
 * pressing, measured from trial start or the latest press. The first press
 * after the stimulus is rewarded and ends the trial. All durations are in
 * milliseconds.
 *
 * Under the null hypothesis (the subject perceives rewards but not
 * stimuli) the quiescence intervals can be resampled, independently per
 * trial, from their prior truncated to the range that would have rewarded
 * the same press.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "crtlab/crt.hpp"
#include "crtlab/errors.hpp"
#include "crtlab/random.hpp"

namespace crtlab::rt {

/// Floor applied to every Gaussian gap draw.
inline constexpr double kMinGapMs = 1.0;
/// Presses allowed in one trial before the simulator gives up.
inline constexpr std::size_t kMaxPressesPerTrial = 10000;

struct RtConfig {
  double q_low = 500.0;
  double q_high = 1000.0;
  std::size_t n_trials = 100;

  void validate() const {
    if (!(q_low > 0.0) || !(q_low < q_high) || !std::isfinite(q_high))
      throw InvalidInput("RtConfig: require 0 < q_low < q_high");
    if (n_trials < 1) throw InvalidInput("RtConfig: n_trials must be >= 1");
  }

  friend bool operator==(const RtConfig&, const RtConfig&) = default;
};

/// One trial: inter-press gaps (the last press is rewarded) and its quiescence interval.
struct RtTrial {
  std::vector<double> gaps;
  double q = 0.0;

  double final_gap() const { return gaps.back(); }

  /// Longest gap before the rewarded press, 0 for single-press trials.
  double longest_unrewarded_gap() const {
    return gaps.size() < 2 ? 0.0 : *std::max_element(gaps.begin(), gaps.end() - 1);
  }

  friend bool operator==(const RtTrial&, const RtTrial&) = default;
};

struct RtSession {
  RtConfig config;
  std::vector<RtTrial> trials;

  std::vector<double> quiescence() const {
    std::vector<double> q;
    q.reserve(trials.size());
    for (const auto& t : trials) q.push_back(t.q);
    return q;
  }

  friend bool operator==(const RtSession&, const RtSession&) = default;
};

// ---------------------------------------------------------------------------
// Strategies

/// Presses at Gaussian intervals, ignoring stimuli and rewards.
struct RandomPresser {
  double mean = 800.0;
  double sd = 300.0;
};

/// Waits for the shorter of a baseline interval and stimulus onset plus a response delay.
struct StimulusResponder {
  double mean = 800.0;
  double sd = 300.0;
  double response_mean = 150.0;
  double response_sd = 50.0;
};

/// Presses at progressively longer intervals until rewarded.
struct Decelerator {
  double mean = 150.0;
  double sd = 50.0;
};

using RtStrategy = std::variant<RandomPresser, StimulusResponder, Decelerator>;

inline void validate(const RtStrategy& strategy) {
  const bool ok = std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        bool valid = s.mean > 0.0 && s.sd > 0.0;
        if constexpr (std::is_same_v<S, StimulusResponder>)
          valid = valid && s.response_mean > 0.0 && s.response_sd > 0.0;
        return valid;
      },
      strategy);
  if (!ok) throw InvalidInput("RtStrategy: all means and standard deviations must be > 0");
}

/**
 * @brief Plays one trial against a fixed quiescence interval.
 *
 * `draw(mean, sd)` supplies each Gaussian gap sample; the simulator passes a
 * truncated-normal draw, tests pass scripted values. The stimulus appears
 * within the first gap of length >= q, and the press closing that gap is
 * rewarded.
 */
template <class NormalDraw>
RtTrial play_trial(const RtStrategy& strategy, double q, NormalDraw&& draw) {
  RtTrial trial;
  trial.q = q;
  double previous = 0.0;
  for (std::size_t press = 0; press < kMaxPressesPerTrial; ++press) {
    const double gap = std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, RandomPresser>) {
            return draw(s.mean, s.sd);
          } else if constexpr (std::is_same_v<S, StimulusResponder>) {
            const double baseline = draw(s.mean, s.sd);
            if (q > baseline) return baseline;
            return std::min(baseline, q + draw(s.response_mean, s.response_sd));
          } else {
            return previous + draw(s.mean, s.sd);
          }
        },
        strategy);
    trial.gaps.push_back(gap);
    previous = gap;
    if (gap >= q) return trial;
  }
  throw SimulationOverflow("rt trial exceeded " + std::to_string(kMaxPressesPerTrial) +
                           " presses");
}

/// Simulates a session of config.n_trials trials.
inline RtSession simulate_rt_session(const RtStrategy& strategy, const RtConfig& config,
                                     Stream& rng) {
  config.validate();
  validate(strategy);
  RtSession session;
  session.config = config;
  session.trials.reserve(config.n_trials);
  auto draw = [&rng](double mean, double sd) {
    return rng.normal_truncated_below(mean, sd, kMinGapMs);
  };
  for (std::size_t t = 0; t < config.n_trials; ++t) {
    const double q = rng.uniform(config.q_low, config.q_high);
    session.trials.push_back(play_trial(strategy, q, draw));
  }
  return session;
}

// ---------------------------------------------------------------------------
// Feasible range and resampling

/**
 * Quiescence values that reward the same press: above every unrewarded gap,
 * at most the final gap, and inside [q_low, q_high]. The lower end is open
 * when it comes from a gap and closed when it is q_low itself.
 */
struct FeasibleRange {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_inclusive = false;

  bool contains(double q) const noexcept {
    return (lo_inclusive ? q >= lo : q > lo) && q <= hi;
  }
  double width() const noexcept { return hi - lo; }
};

namespace detail {

inline FeasibleRange range_of(const RtTrial& trial, const RtConfig& config) {
  if (trial.gaps.empty()) throw InvalidInput("rt trial has no presses");
  for (double g : trial.gaps) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidInput("rt trial has a non-positive gap");
  }
  const double prior_max = trial.longest_unrewarded_gap();
  FeasibleRange r;
  r.lo_inclusive = config.q_low > prior_max;
  r.lo = std::max(config.q_low, prior_max);
  r.hi = std::min(config.q_high, trial.final_gap());
  return r;
}

}  // namespace detail

/// Feasible range of a trial; throws InvalidInput if the trial's own q is outside it.
inline FeasibleRange feasible_range(const RtTrial& trial, const RtConfig& config) {
  const FeasibleRange r = detail::range_of(trial, config);
  if (!r.contains(trial.q))
    throw InvalidInput("rt trial quiescence interval is inconsistent with its presses");
  return r;
}

/// Uniform draw on the range, never returning the excluded lower end.
inline double sample_uniform(const FeasibleRange& range, Stream& rng) {
  for (;;) {
    const double q = range.hi - range.width() * rng.uniform01();
    if (range.contains(q)) return q;
  }
}

enum class QuiescenceSampler { truncated_uniform, rejection };

/**
 * @brief Rejection path: draws from `prior(rng)` until the value is feasible.
 *
 * Works for any quiescence prior; with the uniform prior it matches the
 * truncated-uniform path in distribution.
 */
template <class Prior>
std::vector<double> resample_quiescence_rejection(const RtSession& session, Stream& rng,
                                                  Prior&& prior) {
  std::vector<double> out;
  out.reserve(session.trials.size());
  for (const auto& trial : session.trials) {
    const FeasibleRange r = feasible_range(trial, session.config);
    double q;
    do {
      q = prior(rng);
    } while (!r.contains(q));
    out.push_back(q);
  }
  return out;
}

/// Resamples every trial's q independently from the prior truncated to its feasible range.
inline std::vector<double> resample_quiescence(
    const RtSession& session, Stream& rng,
    QuiescenceSampler method = QuiescenceSampler::truncated_uniform) {
  if (method == QuiescenceSampler::rejection) {
    const RtConfig& c = session.config;
    return resample_quiescence_rejection(
        session, rng, [&c](Stream& s) { return s.uniform(c.q_low, c.q_high); });
  }
  std::vector<double> out;
  out.reserve(session.trials.size());
  for (const auto& trial : session.trials)
    out.push_back(sample_uniform(feasible_range(trial, session.config), rng));
  return out;
}

// ---------------------------------------------------------------------------
// Replay and statistic

/// Index of the press that a stimulus with quiescence q would reward, or gaps.size() if none.
inline std::size_t rewarded_press(std::span<const double> gaps, double q) {
  for (std::size_t i = 0; i < gaps.size(); ++i)
    if (gaps[i] >= q) return i;
  return gaps.size();
}

/// Per-press reward flags obtained by replaying the session's presses against `q_values`.
inline std::vector<std::uint8_t> replay_rewards(const RtSession& session,
                                                std::span<const double> q_values) {
  if (q_values.size() != session.trials.size())
    throw InvalidInput("replay_rewards: q_values length differs from trial count");
  std::vector<std::uint8_t> rewards;
  for (std::size_t t = 0; t < session.trials.size(); ++t) {
    const auto& gaps = session.trials[t].gaps;
    const std::size_t hit = rewarded_press(gaps, q_values[t]);
    for (std::size_t i = 0; i < gaps.size(); ++i) rewards.push_back(i == hit ? 1 : 0);
  }
  return rewards;
}

/// Reward flags as recorded: the final press of every trial.
inline std::vector<std::uint8_t> recorded_rewards(const RtSession& session) {
  std::vector<std::uint8_t> rewards;
  for (const auto& trial : session.trials) {
    rewards.insert(rewards.end(), trial.gaps.size() - 1, 0);
    rewards.push_back(1);
  }
  return rewards;
}

/// Mean over trials of (final gap - q_t): time from stimulus onset to the rewarded press.
inline double mean_reaction_time(const RtSession& session, std::span<const double> q_values) {
  if (q_values.size() != session.trials.size() || session.trials.empty())
    throw InvalidInput("mean_reaction_time: q_values length differs from trial count");
  double total = 0.0;
  for (std::size_t t = 0; t < session.trials.size(); ++t) {
    const RtTrial& trial = session.trials[t];
    if (!detail::range_of(trial, session.config).contains(q_values[t]))
      throw InvalidInput("mean_reaction_time: q outside feasible range on trial " +
                         std::to_string(t));
    total += trial.final_gap() - q_values[t];
  }
  return total / static_cast<double>(session.trials.size());
}

/// Lower-tail test of mean reaction time against resampled quiescence intervals.
inline TestOutcome rt_crt(const RtSession& session, std::size_t n_resamples, SeedSpec seed) {
  session.config.validate();
  for (const auto& trial : session.trials) feasible_range(trial, session.config);
  return run_crt(
      session.quiescence(),
      [&session](const std::vector<double>& q) { return mean_reaction_time(session, q); },
      [&session](const std::vector<double>&, Stream& rng) {
        return resample_quiescence(session, rng);
      },
      n_resamples, TailDirection::lower, seed);
}

}  // namespace crtlab::rt
