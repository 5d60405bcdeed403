/**
 * @file replicate.hpp
 * @brief The fixed grid of eight reference experiments and their acceptance bands.
 *
 * Reaction-time task: random, response and deceleration strategies.
 * Choice task: blind and sighted agents with conditional resampling and the
 * same-trial statistic, plus the blind agent under the remaining
 * {conditional, tangent} x {same_trial, delayed} combinations.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "crtlab/experiment.hpp"
#include "crtlab/io.hpp"

namespace crtlab {

inline constexpr std::uint64_t kDefaultReplicateSeed = 20231101;
inline constexpr double kReplicateAlpha = 0.05;

/// Closed interval a rejection rate must fall in.
struct RateBand {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double rate) const noexcept { return rate >= lo && rate <= hi; }
};

struct ReplicateCase {
  std::string name;
  ExperimentSpec spec;
  int reference_per_1000 = 0;  ///< expected rejections per 1000 sessions
  RateBand band;
};

struct ReplicateResult {
  ReplicateCase config;
  ExperimentReport report;

  double rate() const { return report.at_alpha(kReplicateAlpha)->rate(); }
  bool passed() const { return config.band.contains(rate()); }
};

/**
 * The eight cases. Case k uses master seed base_seed + k, so each case is
 * reproducible on its own.
 */
inline std::vector<ReplicateCase> replicate_grid(std::size_t n_sessions = 1000,
                                                 std::size_t n_resamples = 999,
                                                 std::uint64_t base_seed = kDefaultReplicateSeed) {
  const RateBand nominal{0.032, 0.068};
  auto make = [&](std::string name, Task task, std::string scenario, ChoiceResampler resampler,
                  StatisticKind stat, int reference, RateBand band) {
    ExperimentSpec spec;
    spec.task = task;
    spec.scenario = std::move(scenario);
    spec.resampler = resampler;
    spec.statistic = stat;
    spec.n_sessions = n_sessions;
    spec.n_resamples = n_resamples;
    spec.alpha_levels = {0.01, kReplicateAlpha, 0.1};
    return ReplicateCase{std::move(name), spec, reference, band};
  };
  using CR = ChoiceResampler;
  using SK = StatisticKind;
  std::vector<ReplicateCase> grid{
      make("rt_random", Task::rt, "random", CR::conditional, SK::mean_rt, 48, nominal),
      make("rt_response", Task::rt, "response", CR::conditional, SK::mean_rt, 997, {0.95, 1.0}),
      make("rt_deceleration", Task::rt, "deceleration", CR::conditional, SK::mean_rt, 45, nominal),
      make("choice_blind_conditional_same_trial", Task::choice, "blind", CR::conditional,
           SK::same_trial, 41, nominal),
      make("choice_sighted_conditional_same_trial", Task::choice, "sighted", CR::conditional,
           SK::same_trial, 948, {0.80, 1.0}),
      make("choice_blind_tangent_same_trial", Task::choice, "blind", CR::tangent, SK::same_trial,
           32, {0.0, 0.068}),
      make("choice_blind_conditional_delayed", Task::choice, "blind", CR::conditional,
           SK::delayed, 40, nominal),
      make("choice_blind_tangent_delayed", Task::choice, "blind", CR::tangent, SK::delayed, 303,
           {0.15, 1.0}),
  };
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k].spec.master_seed = base_seed + k;
  return grid;
}

inline std::vector<ReplicateResult> run_reference_grid(std::size_t n_sessions = 1000,
                                                    std::size_t n_resamples = 999,
                                                    std::uint64_t base_seed = kDefaultReplicateSeed,
                                                    unsigned n_threads = 0) {
  std::vector<ReplicateResult> results;
  for (auto& c : replicate_grid(n_sessions, n_resamples, base_seed)) {
    ExperimentReport report = run_experiment(c.spec, n_threads);
    results.push_back(ReplicateResult{std::move(c), std::move(report)});
  }
  return results;
}

/// One header line plus one row per case.
inline void print_summary_table(const std::vector<ReplicateResult>& results, std::ostream& os) {
  os << "case,reference_per_1000,rejections,n_sessions,rate,band_lo,band_hi,status\n";
  for (const auto& r : results) {
    const auto* rc = r.report.at_alpha(kReplicateAlpha);
    os << r.config.name << ',' << r.config.reference_per_1000 << ',' << rc->rejections << ','
       << rc->n_sessions << ',' << format_double(rc->rate()) << ','
       << format_double(r.config.band.lo) << ',' << format_double(r.config.band.hi) << ','
       << (r.passed() ? "pass" : "FAIL") << '\n';
  }
}

/// Writes <dir>/<case>.json for every case and <dir>/summary.csv.
inline void write_replicate_reports(const std::vector<ReplicateResult>& results,
                                    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  for (const auto& r : results)
    emit_report(r.report, ReportFormat::json, (dir / (r.config.name + ".json")).string());
  std::ostringstream table;
  print_summary_table(results, table);
  detail::write_file(dir / "summary.csv", table.str());
}

}  // namespace crtlab
