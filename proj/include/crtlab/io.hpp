/**
 * @file io.hpp
 * @brief JSON and CSV serialization for sessions and experiment reports.
 *
 * Durations are milliseconds. Floating-point values are written in the
 * shortest form that round-trips exactly.
 */

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "crtlab/choice_task.hpp"
#include "crtlab/errors.hpp"
#include "crtlab/experiment.hpp"
#include "crtlab/rt_task.hpp"

namespace crtlab {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

template <class T>
T get_field(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad field '") + key + "': " + e.what());
  }
}

inline Json seed_to_json(const SeedSpec& s) {
  return Json{{"master_seed", s.master_seed}, {"stream_index", s.stream_index}};
}

inline SeedSpec seed_from_json(const Json& j) {
  return SeedSpec{get_field<std::uint64_t>(j, "master_seed"),
                  get_field<std::uint64_t>(j, "stream_index")};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Reaction-time sessions

inline Json to_json(const rt::RtConfig& c) {
  return Json{{"q_low_ms", c.q_low}, {"q_high_ms", c.q_high}, {"n_trials", c.n_trials}};
}

inline rt::RtConfig rt_config_from_json(const Json& j) {
  rt::RtConfig c;
  c.q_low = detail::get_field<double>(j, "q_low_ms");
  c.q_high = detail::get_field<double>(j, "q_high_ms");
  c.n_trials = detail::get_field<std::size_t>(j, "n_trials");
  return c;
}

inline Json to_json(const rt::RtSession& s) {
  Json trials = Json::array();
  for (const auto& t : s.trials) trials.push_back(Json{{"gaps_ms", t.gaps}, {"q_ms", t.q}});
  return Json{{"config", to_json(s.config)}, {"trials", std::move(trials)}};
}

/// Parses and validates an rt session; trial invariants are checked.
inline rt::RtSession rt_session_from_json(const Json& j) {
  rt::RtSession s;
  s.config = rt_config_from_json(detail::get_field<Json>(j, "config"));
  s.config.validate();
  for (const auto& jt : detail::get_field<Json>(j, "trials")) {
    rt::RtTrial t;
    t.gaps = detail::get_field<std::vector<double>>(jt, "gaps_ms");
    t.q = detail::get_field<double>(jt, "q_ms");
    rt::feasible_range(t, s.config);
    s.trials.push_back(std::move(t));
  }
  if (s.trials.size() != s.config.n_trials)
    throw InvalidInput("rt session: trial count differs from config.n_trials");
  return s;
}

// ---------------------------------------------------------------------------
// Choice sessions

inline Json to_json(const choice::ChoiceConfig& c) {
  return Json{{"alpha", c.alpha},
              {"beta", c.beta},
              {"gamma", c.gamma},
              {"n_trials", c.n_trials},
              {"block_len_min", c.block_len_min},
              {"block_len_max", c.block_len_max}};
}

inline choice::ChoiceConfig choice_config_from_json(const Json& j) {
  choice::ChoiceConfig c;
  c.alpha = detail::get_field<double>(j, "alpha");
  c.beta = detail::get_field<double>(j, "beta");
  c.gamma = detail::get_field<double>(j, "gamma");
  c.n_trials = detail::get_field<std::size_t>(j, "n_trials");
  c.block_len_min = detail::get_field<std::size_t>(j, "block_len_min");
  c.block_len_max = detail::get_field<std::size_t>(j, "block_len_max");
  return c;
}

namespace detail {

inline Json sides_to_json(const std::vector<choice::Side>& v) {
  Json a = Json::array();
  for (auto s : v) a.push_back(choice::sign(s));
  return a;
}

inline std::vector<choice::Side> sides_from_json(const Json& j, const char* key) {
  std::vector<choice::Side> out;
  for (long long v : get_field<std::vector<long long>>(j, key)) out.push_back(choice::side_from_int(v));
  return out;
}

}  // namespace detail

/// A choice session together with the task configuration it was run under.
struct ChoiceRecord {
  choice::ChoiceConfig config;
  choice::ChoiceSession session;

  friend bool operator==(const ChoiceRecord&, const ChoiceRecord&) = default;
};

inline Json to_json(const ChoiceRecord& r) {
  Json rewards = Json::array();
  for (auto x : r.session.rewards) rewards.push_back(static_cast<int>(x));
  return Json{{"config", to_json(r.config)},
              {"blocks", detail::sides_to_json(r.session.blocks)},
              {"stimuli", detail::sides_to_json(r.session.stimuli)},
              {"choices", detail::sides_to_json(r.session.choices)},
              {"rewards", std::move(rewards)}};
}

inline ChoiceRecord choice_record_from_json(const Json& j) {
  ChoiceRecord r;
  r.config = choice_config_from_json(detail::get_field<Json>(j, "config"));
  r.config.validate();
  r.session.blocks = detail::sides_from_json(j, "blocks");
  r.session.stimuli = detail::sides_from_json(j, "stimuli");
  r.session.choices = detail::sides_from_json(j, "choices");
  for (int v : detail::get_field<std::vector<int>>(j, "rewards")) {
    if (v != 0 && v != 1) throw InvalidInput("rewards must be 0 or 1");
    r.session.rewards.push_back(static_cast<std::uint8_t>(v));
  }
  r.session.validate();
  if (r.session.size() != r.config.n_trials)
    throw InvalidInput("choice session: length differs from config.n_trials");
  return r;
}

// ---------------------------------------------------------------------------
// Single test outcomes

inline Json to_json(const TestOutcome& o) {
  return Json{{"t_obs", o.t_obs},
              {"p_value", o.p.value()},
              {"p_numerator", o.p.numerator},
              {"p_denominator", o.p.denominator},
              {"tail", to_string(o.tail)},
              {"seed", detail::seed_to_json(o.seed)},
              {"ensemble", o.ensemble}};
}

inline TestOutcome outcome_from_json(const Json& j) {
  TestOutcome o;
  o.t_obs = detail::get_field<double>(j, "t_obs");
  o.p.numerator = detail::get_field<std::size_t>(j, "p_numerator");
  o.p.denominator = detail::get_field<std::size_t>(j, "p_denominator");
  const auto tail = detail::get_field<std::string>(j, "tail");
  if (tail != "upper" && tail != "lower") throw InvalidInput("tail must be upper or lower");
  o.tail = tail == "upper" ? TailDirection::upper : TailDirection::lower;
  o.seed = detail::seed_from_json(detail::get_field<Json>(j, "seed"));
  o.ensemble = detail::get_field<std::vector<double>>(j, "ensemble");
  return o;
}

// ---------------------------------------------------------------------------
// Experiment specs and reports

inline Json to_json(const ExperimentSpec& s) {
  return Json{{"task", to_string(s.task)},
              {"scenario", s.scenario},
              {"resampler", to_string(s.resampler)},
              {"statistic", to_string(s.statistic)},
              {"n_sessions", s.n_sessions},
              {"n_resamples", s.n_resamples},
              {"alpha_levels", s.alpha_levels},
              {"master_seed", s.master_seed},
              {"rt_config", to_json(s.rt_config)},
              {"choice_config", to_json(s.choice_config)}};
}

inline ExperimentSpec spec_from_json(const Json& j) {
  ExperimentSpec s;
  s.task = parse_task(detail::get_field<std::string>(j, "task"));
  s.scenario = detail::get_field<std::string>(j, "scenario");
  s.resampler = parse_resampler(detail::get_field<std::string>(j, "resampler"));
  s.statistic = parse_statistic(detail::get_field<std::string>(j, "statistic"));
  s.n_sessions = detail::get_field<std::size_t>(j, "n_sessions");
  s.n_resamples = detail::get_field<std::size_t>(j, "n_resamples");
  s.alpha_levels = detail::get_field<std::vector<double>>(j, "alpha_levels");
  s.master_seed = detail::get_field<std::uint64_t>(j, "master_seed");
  s.rt_config = rt_config_from_json(detail::get_field<Json>(j, "rt_config"));
  s.choice_config = choice_config_from_json(detail::get_field<Json>(j, "choice_config"));
  return s;
}

inline Json to_json(const ExperimentReport& r) {
  Json sessions = Json::array();
  for (const auto& s : r.sessions) {
    sessions.push_back(Json{{"session_index", s.index},
                            {"simulate_seed", detail::seed_to_json(s.simulate_seed)},
                            {"test_seed", detail::seed_to_json(s.test_seed)},
                            {"t_obs", s.t_obs},
                            {"p_value", s.p.value()},
                            {"p_numerator", s.p.numerator},
                            {"p_denominator", s.p.denominator}});
  }
  Json rejections = Json::array();
  for (const auto& rc : r.rejections) {
    rejections.push_back(Json{{"alpha", rc.alpha},
                              {"rejections", rc.rejections},
                              {"n_sessions", rc.n_sessions},
                              {"rate", rc.rate()}});
  }
  return Json{{"spec", to_json(r.spec)},
              {"rejection_rule", kRejectionRule},
              {"rejections", std::move(rejections)},
              {"histogram", Json{{"bins", kHistogramBins},
                                 {"range", {0.0, 1.0}},
                                 {"counts", r.histogram}}},
              {"sessions", std::move(sessions)}};
}

inline ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  r.spec = spec_from_json(detail::get_field<Json>(j, "spec"));
  for (const auto& js : detail::get_field<Json>(j, "sessions")) {
    SessionResult s;
    s.index = detail::get_field<std::size_t>(js, "session_index");
    s.simulate_seed = detail::seed_from_json(detail::get_field<Json>(js, "simulate_seed"));
    s.test_seed = detail::seed_from_json(detail::get_field<Json>(js, "test_seed"));
    s.t_obs = detail::get_field<double>(js, "t_obs");
    s.p.numerator = detail::get_field<std::size_t>(js, "p_numerator");
    s.p.denominator = detail::get_field<std::size_t>(js, "p_denominator");
    r.sessions.push_back(s);
  }
  for (const auto& jr : detail::get_field<Json>(j, "rejections")) {
    r.rejections.push_back(RejectionCount{detail::get_field<double>(jr, "alpha"),
                                          detail::get_field<std::size_t>(jr, "rejections"),
                                          detail::get_field<std::size_t>(jr, "n_sessions")});
  }
  const auto counts =
      detail::get_field<std::vector<std::size_t>>(detail::get_field<Json>(j, "histogram"), "counts");
  if (counts.size() != kHistogramBins) throw InvalidInput("histogram must have 20 bins");
  std::copy(counts.begin(), counts.end(), r.histogram.begin());
  return r;
}

/// Serialized report text; byte-identical for equal reports.
inline std::string report_json_text(const ExperimentReport& r) { return to_json(r).dump(2) + "\n"; }

inline void write_sessions_csv(const ExperimentReport& r, std::ostream& os) {
  os << "session_index,seed,t_obs,p_value\n";
  for (const auto& s : r.sessions) {
    os << s.index << ',' << r.spec.master_seed << ',' << format_double(s.t_obs) << ','
       << format_double(s.p.value()) << '\n';
  }
}

inline void write_summary_csv(const ExperimentReport& r, std::ostream& os) {
  os << "alpha,rejections,n_sessions,rate\n";
  for (const auto& rc : r.rejections) {
    os << format_double(rc.alpha) << ',' << rc.rejections << ',' << rc.n_sessions << ','
       << format_double(rc.rate()) << '\n';
  }
}

enum class ReportFormat { json, csv };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw ConfigError("unknown format '" + s + "' (expected json or csv)");
}

/// Companion summary path for a CSV report: "<stem>_summary<ext>" beside it.
inline std::filesystem::path summary_csv_path(const std::filesystem::path& sessions_path) {
  auto p = sessions_path;
  const auto ext = p.has_extension() ? p.extension().string() : std::string(".csv");
  p.replace_filename(p.stem().string() + "_summary" + ext);
  return p;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace detail

/**
 * Writes a report. An empty destination or "-" means standard output.
 * CSV writes the per-session table to the destination and the alpha
 * summary to summary_csv_path(destination); on standard output the two
 * tables are separated by a blank line.
 */
inline void emit_report(const ExperimentReport& r, ReportFormat format,
                        const std::string& destination, std::ostream& stdout_stream = std::cout) {
  const bool to_stdout = destination.empty() || destination == "-";
  if (format == ReportFormat::json) {
    const std::string text = report_json_text(r);
    if (to_stdout)
      stdout_stream << text;
    else
      detail::write_file(destination, text);
    return;
  }
  std::ostringstream sessions, summary;
  write_sessions_csv(r, sessions);
  write_summary_csv(r, summary);
  if (to_stdout) {
    stdout_stream << sessions.str() << '\n' << summary.str();
  } else {
    detail::write_file(destination, sessions.str());
    detail::write_file(summary_csv_path(destination), summary.str());
  }
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace crtlab
