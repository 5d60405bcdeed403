/**
 * @file choice_task.hpp
 * @brief Block-structured probabilistic choice task.
 *
 * Trial t has a block side b, a stimulus s (equal to b with probability
 * alpha), a choice c, and a reward r (probability beta when c == s, gamma
 * otherwise). Under the null hypothesis that the subject cannot see the
 * stimulus, {b, c, r} is the Markov boundary of s, so stimuli can be
 * resampled independently per trial from P[s | b, c, r].
 */

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crtlab/crt.hpp"
#include "crtlab/errors.hpp"
#include "crtlab/random.hpp"

namespace crtlab::choice {

enum class Side : std::int8_t { left = -1, right = 1 };

constexpr int sign(Side s) noexcept { return static_cast<int>(s); }
constexpr Side opposite(Side s) noexcept { return s == Side::left ? Side::right : Side::left; }
constexpr std::size_t index_of(Side s) noexcept { return s == Side::left ? 0 : 1; }

inline Side side_from_int(long long v) {
  if (v == -1) return Side::left;
  if (v == 1) return Side::right;
  throw InvalidInput("side must be -1 or +1, got " + std::to_string(v));
}

struct ChoiceConfig {
  double alpha = 0.8;  ///< P(stimulus on the block side)
  double beta = 0.8;   ///< P(reward | choice matches stimulus)
  double gamma = 0.2;  ///< P(reward | choice does not match)
  std::size_t n_trials = 500;
  std::size_t block_len_min = 20;
  std::size_t block_len_max = 100;

  void validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(alpha) || !prob(beta) || !prob(gamma))
      throw InvalidInput("ChoiceConfig: alpha, beta, gamma must lie in [0, 1]");
    if (n_trials < 1) throw InvalidInput("ChoiceConfig: n_trials must be >= 1");
    if (block_len_min < 1 || block_len_min > block_len_max)
      throw InvalidInput("ChoiceConfig: require 1 <= block_len_min <= block_len_max");
  }

  friend bool operator==(const ChoiceConfig&, const ChoiceConfig&) = default;
};

struct ChoiceSession {
  std::vector<Side> blocks;
  std::vector<Side> stimuli;
  std::vector<Side> choices;
  std::vector<std::uint8_t> rewards;

  std::size_t size() const noexcept { return blocks.size(); }

  void validate() const {
    const std::size_t n = blocks.size();
    if (stimuli.size() != n || choices.size() != n || rewards.size() != n)
      throw InvalidInput("ChoiceSession: sequences have different lengths");
    for (auto r : rewards)
      if (r > 1) throw InvalidInput("ChoiceSession: rewards must be 0 or 1");
  }

  friend bool operator==(const ChoiceSession&, const ChoiceSession&) = default;
};

// ---------------------------------------------------------------------------
// Blocks

/// Alternating blocks with lengths uniform on {block_len_min..block_len_max}, starting at `first`.
inline std::vector<Side> generate_blocks(const ChoiceConfig& config, Side first, Stream& rng) {
  config.validate();
  std::vector<Side> blocks;
  blocks.reserve(config.n_trials);
  Side side = first;
  while (blocks.size() < config.n_trials) {
    const auto len = rng.uniform_int(config.block_len_min, config.block_len_max);
    for (std::uint64_t i = 0; i < len && blocks.size() < config.n_trials; ++i)
      blocks.push_back(side);
    side = opposite(side);
  }
  return blocks;
}

/// As above with a fair draw for the first block's side.
inline std::vector<Side> generate_blocks(const ChoiceConfig& config, Stream& rng) {
  const Side first = rng.bernoulli(0.5) ? Side::right : Side::left;
  return generate_blocks(config, first, rng);
}

// ---------------------------------------------------------------------------
// Agent

/// Mixture of a reward-driven value learner and a reward-independent habit.
struct AgentParams {
  double rl_rate = 0.3;
  double habit_rate = 0.2;
  double rl_weight = 3.0;
  double habit_weight = 1.0;
  double stim_weight = 0.0;

  static AgentParams blind() { return AgentParams{}; }
  static AgentParams sighted() {
    AgentParams p;
    p.stim_weight = 2.0;
    return p;
  }

  bool is_blind() const noexcept { return stim_weight == 0.0; }

  void validate() const {
    if (!(rl_rate > 0.0 && rl_rate <= 1.0) || !(habit_rate > 0.0 && habit_rate <= 1.0))
      throw InvalidInput("AgentParams: learning rates must lie in (0, 1]");
    if (!(rl_weight >= 0.0) || !(habit_weight >= 0.0) || !(stim_weight >= 0.0))
      throw InvalidInput("AgentParams: weights must be >= 0");
  }

  friend bool operator==(const AgentParams&, const AgentParams&) = default;
};

/// Values and habits indexed by side (left = 0, right = 1).
struct AgentState {
  std::array<double, 2> value{0.5, 0.5};
  std::array<double, 2> habit{0.5, 0.5};
};

/// Probability of choosing right given the state and, for a sighted agent, the stimulus.
inline double p_choose_right(const AgentState& state, const AgentParams& params,
                             std::optional<Side> stimulus) {
  double logit = params.rl_weight * (state.value[1] - state.value[0]) +
                 params.habit_weight * (state.habit[1] - state.habit[0]);
  if (!params.is_blind()) {
    if (!stimulus) throw InvalidInput("sighted agent needs the stimulus");
    logit += params.stim_weight * sign(*stimulus);
  }
  return 1.0 / (1.0 + std::exp(-logit));
}

/// A choice awaiting its reward; update() returns the post-feedback state.
struct AgentDecision {
  Side choice;
  AgentState before;
  AgentParams params;

  AgentState update(bool rewarded) const {
    AgentState next = before;
    const std::size_t c = index_of(choice);
    next.value[c] += params.rl_rate * ((rewarded ? 1.0 : 0.0) - next.value[c]);
    for (std::size_t side = 0; side < 2; ++side)
      next.habit[side] += params.habit_rate * ((side == c ? 1.0 : 0.0) - next.habit[side]);
    return next;
  }
};

/**
 * Draws a choice from the logistic rule. Callers simulating a blind agent
 * pass std::nullopt for the stimulus; the blind rule never reads it.
 */
inline AgentDecision agent_step(const AgentState& state, const AgentParams& params,
                                std::optional<Side> stimulus, Stream& rng) {
  const double p_right = p_choose_right(state, params, stimulus);
  return AgentDecision{rng.bernoulli(p_right) ? Side::right : Side::left, state, params};
}

/// Simulates blocks, stimuli, choices and rewards for one session.
inline ChoiceSession simulate_choice_session(const AgentParams& params, const ChoiceConfig& config,
                                             Stream& rng) {
  params.validate();
  config.validate();
  ChoiceSession session;
  session.blocks = generate_blocks(config, rng);
  const std::size_t n = config.n_trials;
  session.stimuli.reserve(n);
  session.choices.reserve(n);
  session.rewards.reserve(n);

  AgentState state;
  for (std::size_t t = 0; t < n; ++t) {
    const Side b = session.blocks[t];
    const Side s = rng.bernoulli(config.alpha) ? b : opposite(b);
    const auto visible = params.is_blind() ? std::nullopt : std::optional<Side>(s);
    const AgentDecision decision = agent_step(state, params, visible, rng);
    const bool rewarded = rng.bernoulli(decision.choice == s ? config.beta : config.gamma);
    state = decision.update(rewarded);
    session.stimuli.push_back(s);
    session.choices.push_back(decision.choice);
    session.rewards.push_back(rewarded ? 1 : 0);
  }
  return session;
}

inline ChoiceSession simulate_choice_session(const AgentParams& params, const ChoiceConfig& config,
                                             SeedSpec seed) {
  Stream rng = derive_stream(seed);
  return simulate_choice_session(params, config, rng);
}

// ---------------------------------------------------------------------------
// Resamplers

/// P(s = b | b, c, r) under the null: prior alpha times the reward likelihood, normalized.
inline double posterior_stimulus(Side b, Side c, bool rewarded, const ChoiceConfig& config) {
  auto likelihood = [&](Side s) {
    const double p_reward = (c == s) ? config.beta : config.gamma;
    return rewarded ? p_reward : 1.0 - p_reward;
  };
  const double on_block = config.alpha * likelihood(b);
  const double off_block = (1.0 - config.alpha) * likelihood(opposite(b));
  const double total = on_block + off_block;
  if (!(total > 0.0))
    throw InconsistentObservation("observed (choice, reward) is impossible under either stimulus");
  return on_block / total;
}

/// Per-trial posterior P(s_t = b_t | b_t, c_t, r_t) for a whole session.
inline std::vector<double> stimulus_posteriors(const ChoiceSession& session,
                                               const ChoiceConfig& config) {
  session.validate();
  std::vector<double> p(session.size());
  for (std::size_t t = 0; t < session.size(); ++t)
    p[t] = posterior_stimulus(session.blocks[t], session.choices[t], session.rewards[t] != 0, config);
  return p;
}

/// Draws s_t' = b_t with the given per-trial probabilities, otherwise the opposite side.
inline std::vector<Side> draw_stimuli(std::span<const Side> blocks, std::span<const double> p_block,
                                      Stream& rng) {
  std::vector<Side> out(blocks.size());
  for (std::size_t t = 0; t < blocks.size(); ++t)
    out[t] = rng.bernoulli(p_block[t]) ? blocks[t] : opposite(blocks[t]);
  return out;
}

/// Conditional resampling from P[s_t | b_t, c_t, r_t]; consistent with every observed reward.
inline std::vector<Side> conditional_resample_stimuli(const ChoiceSession& session,
                                                      const ChoiceConfig& config, Stream& rng) {
  const auto p = stimulus_posteriors(session, config);
  return draw_stimuli(session.blocks, p, rng);
}

/// Tangent resampling from P[s_t | b_t], ignoring choices and rewards.
inline std::vector<Side> tangent_resample_stimuli(const ChoiceSession& session,
                                                  const ChoiceConfig& config, Stream& rng) {
  session.validate();
  const std::vector<double> p(session.size(), config.alpha);
  return draw_stimuli(session.blocks, p, rng);
}

// ---------------------------------------------------------------------------
// Statistics

/// Sum over t of s_t * c_t.
inline double stat_same_trial(std::span<const Side> stimuli, std::span<const Side> choices) {
  if (stimuli.size() != choices.size())
    throw InvalidInput("stat_same_trial: stimuli and choices differ in length");
  long long sum = 0;
  for (std::size_t t = 0; t < stimuli.size(); ++t) sum += sign(stimuli[t]) * sign(choices[t]);
  return static_cast<double>(sum);
}

/// Sum over t < T of s_t * c_{t+1}; the last stimulus has no successor choice.
inline double stat_delayed(std::span<const Side> stimuli, std::span<const Side> choices) {
  if (stimuli.size() != choices.size())
    throw InvalidInput("stat_delayed: stimuli and choices differ in length");
  if (stimuli.size() < 2) throw InvalidInput("stat_delayed: need at least 2 trials");
  long long sum = 0;
  for (std::size_t t = 0; t + 1 < stimuli.size(); ++t)
    sum += sign(stimuli[t]) * sign(choices[t + 1]);
  return static_cast<double>(sum);
}

enum class ChoiceStatistic { same_trial, delayed };
enum class ChoiceResampler { conditional, tangent };

inline const char* to_string(ChoiceStatistic s) noexcept {
  return s == ChoiceStatistic::same_trial ? "same_trial" : "delayed";
}
inline const char* to_string(ChoiceResampler r) noexcept {
  return r == ChoiceResampler::conditional ? "conditional" : "tangent";
}

/// Upper-tail test of the selected statistic against the selected stimulus resampler.
inline TestOutcome choice_crt(const ChoiceSession& session, const ChoiceConfig& config,
                              ChoiceStatistic statistic, ChoiceResampler resampler,
                              std::size_t n_resamples, SeedSpec seed) {
  session.validate();
  config.validate();
  const std::vector<double> p_block =
      resampler == ChoiceResampler::conditional
          ? stimulus_posteriors(session, config)
          : std::vector<double>(session.size(), config.alpha);
  const auto stat = [&](const std::vector<Side>& stimuli) {
    return statistic == ChoiceStatistic::same_trial ? stat_same_trial(stimuli, session.choices)
                                                    : stat_delayed(stimuli, session.choices);
  };
  return run_crt(
      session.stimuli, stat,
      [&](const std::vector<Side>&, Stream& rng) {
        return draw_stimuli(session.blocks, p_block, rng);
      },
      n_resamples, TailDirection::upper, seed);
}

}  // namespace crtlab::choice
