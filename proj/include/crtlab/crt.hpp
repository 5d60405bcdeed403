/**
 * @file crt.hpp
 * @brief Generic conditional randomization test engine.
 *
 * A test compares the statistic of the observed dataset against a null
 * ensemble of statistics computed on datasets drawn from the null
 * conditional distribution. The caller supplies the resampler and is
 * responsible for it sampling from that conditional distribution.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <exception>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crtlab/errors.hpp"
#include "crtlab/random.hpp"

namespace crtlab {

/// Which end of the null ensemble counts as evidence against the null.
enum class TailDirection { upper, lower };

inline const char* to_string(TailDirection tail) noexcept {
  return tail == TailDirection::upper ? "upper" : "lower";
}

/// Exact p-value k / (N + 1), kept as a rational so thresholds stay exact.
struct PValue {
  std::size_t numerator = 1;
  std::size_t denominator = 1;

  double value() const noexcept {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }

  friend bool operator==(const PValue&, const PValue&) = default;
};

struct TestOutcome {
  double t_obs = 0.0;
  std::vector<double> ensemble;
  PValue p;
  TailDirection tail = TailDirection::upper;
  SeedSpec seed;
};

/**
 * @brief Rank-based p-value with random tie-breaking.
 *
 * Every value gets an independent uniform jitter that only acts as a
 * secondary sort key, i.e. the limit of an additive jitter smaller than
 * any gap between distinct values. For the upper tail, M counts ensemble
 * values ranked strictly below t_obs and p = (1 + N - M) / (1 + N); the
 * lower tail mirrors this. Jitter is drawn for t_obs first, then for each
 * tied ensemble value in order.
 */
template <class Rng>
PValue p_value(double t_obs, std::span<const double> ensemble, TailDirection tail, Rng& rng) {
  if (ensemble.empty()) throw InvalidInput("p_value: empty null ensemble");
  if (!std::isfinite(t_obs)) throw InvalidInput("p_value: observed statistic is not finite");
  for (double v : ensemble) {
    if (!std::isfinite(v)) throw InvalidInput("p_value: ensemble statistic is not finite");
  }

  const double obs_jitter = rng.uniform01();
  std::size_t m = 0;
  for (double v : ensemble) {
    if (v == t_obs) {
      const double jitter = rng.uniform01();
      if (tail == TailDirection::upper ? jitter < obs_jitter : jitter > obs_jitter) ++m;
    } else if (tail == TailDirection::upper ? v < t_obs : v > t_obs) {
      ++m;
    }
  }
  const std::size_t n = ensemble.size();
  return PValue{1 + n - m, 1 + n};
}

/// Stream used for tie-breaking in a test seeded with `seed`.
inline Stream tie_break_stream(SeedSpec seed) noexcept { return derive_stream(seed.child(0)); }

/// Stream driving the j-th resample (0-based) of a test seeded with `seed`.
inline Stream resample_stream(SeedSpec seed, std::size_t j) noexcept {
  return derive_stream(seed.child(j + 1));
}

/// Recomputes the p-value of an outcome from its stored fields and seed.
inline PValue recompute_p_value(const TestOutcome& outcome) {
  Stream rng = tie_break_stream(outcome.seed);
  return p_value(outcome.t_obs, outcome.ensemble, outcome.tail, rng);
}

/**
 * @brief Runs a conditional randomization test.
 *
 * @param data       observed dataset
 * @param statistic  callable `double(const Data&)`
 * @param resample   callable `Data(const Data&, Stream&)` sampling from the
 *                   null conditional distribution given the conditioning set
 * @param n_resamples size of the null ensemble (N)
 *
 * Resample j draws from resample_stream(seed, j); tie-breaking uses
 * tie_break_stream(seed). Errors from a resample or its statistic are
 * rethrown as ResampleError carrying the resample index.
 */
template <class Data, class Statistic, class Resampler>
TestOutcome run_crt(const Data& data, Statistic&& statistic, Resampler&& resample,
                    std::size_t n_resamples, TailDirection tail, SeedSpec seed) {
  if (n_resamples < 1) throw InvalidInput("run_crt: n_resamples must be >= 1");

  TestOutcome out;
  out.tail = tail;
  out.seed = seed;
  out.t_obs = static_cast<double>(statistic(data));
  out.ensemble.reserve(n_resamples);

  for (std::size_t j = 0; j < n_resamples; ++j) {
    try {
      Stream rng = resample_stream(seed, j);
      const auto resampled = resample(data, rng);
      out.ensemble.push_back(static_cast<double>(statistic(resampled)));
    } catch (const std::exception& e) {
      throw ResampleError(j, e.what());
    }
  }

  Stream tie_rng = tie_break_stream(seed);
  out.p = p_value(out.t_obs, out.ensemble, tail, tie_rng);
  return out;
}

}  // namespace crtlab
