// crt-lab: command-line driver for conditional randomization experiments.
//
//   crt-lab run --task rt --scenario random --statistic mean_rt --sessions 1000
//               --resamples 999 --seed 1 --alpha 0.05,0.01 --format json --out report.json
//   crt-lab replicate [--sessions N] [--resamples N] [--seed S] [--out DIR]
//   crt-lab simulate --task choice --scenario blind --seed 1 [--session I] [--out PATH]
//   crt-lab test --input session.json --task choice --statistic delayed --resampler tangent
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crtlab/choice_task.hpp"
#include "crtlab/errors.hpp"
#include "crtlab/experiment.hpp"
#include "crtlab/io.hpp"
#include "crtlab/replicate.hpp"
#include "crtlab/rt_task.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct TaskOverrides {
  std::size_t trials = 0;  // 0 keeps the task default
  double q_low_ms = crtlab::rt::RtConfig{}.q_low;
  double q_high_ms = crtlab::rt::RtConfig{}.q_high;
  double stim_alpha = crtlab::choice::ChoiceConfig{}.alpha;
  double beta = crtlab::choice::ChoiceConfig{}.beta;
  double gamma = crtlab::choice::ChoiceConfig{}.gamma;
  std::size_t block_min = crtlab::choice::ChoiceConfig{}.block_len_min;
  std::size_t block_max = crtlab::choice::ChoiceConfig{}.block_len_max;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--trials", trials, "Trials per session (default: task default)");
    cmd->add_option("--q-low-ms", q_low_ms, "rt: lower quiescence bound");
    cmd->add_option("--q-high-ms", q_high_ms, "rt: upper quiescence bound");
    cmd->add_option("--stim-alpha", stim_alpha, "choice: P(stimulus on block side)");
    cmd->add_option("--beta", beta, "choice: P(reward | correct)");
    cmd->add_option("--gamma", gamma, "choice: P(reward | incorrect)");
    cmd->add_option("--block-min", block_min, "choice: shortest block");
    cmd->add_option("--block-max", block_max, "choice: longest block");
  }

  void apply(crtlab::rt::RtConfig& rt, crtlab::choice::ChoiceConfig& ch) const {
    rt.q_low = q_low_ms;
    rt.q_high = q_high_ms;
    ch.alpha = stim_alpha;
    ch.beta = beta;
    ch.gamma = gamma;
    ch.block_len_min = block_min;
    ch.block_len_max = block_max;
    if (trials > 0) {
      rt.n_trials = trials;
      ch.n_trials = trials;
    }
  }
};

std::string default_statistic(const std::string& task) {
  return task == "rt" ? "mean_rt" : "same_trial";
}

void write_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw crtlab::IoError("cannot open '" + out + "' for writing");
  f << text;
  if (!f) throw crtlab::IoError("failed writing '" + out + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional randomization tests for sequential behavioral experiments"};
  app.require_subcommand(1);

  // run
  std::string task = "rt", scenario, resampler = "conditional", statistic, format = "json", out;
  std::size_t sessions = 1000, resamples = 999;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<double> alphas{0.05};
  TaskOverrides overrides;

  auto* run = app.add_subcommand("run", "Simulate and test many sessions of one scenario");
  run->add_option("--task", task, "rt or choice")->required();
  run->add_option("--scenario", scenario,
                  "rt: random|response|deceleration; choice: blind|sighted")
      ->required();
  run->add_option("--resampler", resampler, "conditional or tangent (choice task)");
  run->add_option("--statistic", statistic, "mean_rt, same_trial or delayed");
  run->add_option("--sessions", sessions, "Number of sessions");
  run->add_option("--resamples", resamples, "Null ensemble size per session");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--alpha", alphas, "Significance levels, comma separated")->delimiter(',');
  run->add_option("--format", format, "json or csv");
  run->add_option("--out", out, "Output path (default: standard output)");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");
  overrides.add_to(run);

  // replicate
  std::size_t rep_sessions = 1000, rep_resamples = 999;
  std::uint64_t rep_seed = crtlab::kDefaultReplicateSeed;
  std::string rep_out;
  auto* replicate = app.add_subcommand("replicate", "Run the eight-case reference grid");
  replicate->add_option("--sessions", rep_sessions, "Sessions per case");
  replicate->add_option("--resamples", rep_resamples, "Null ensemble size per session");
  replicate->add_option("--seed", rep_seed, "Base master seed (case k uses seed + k)");
  replicate->add_option("--out", rep_out, "Directory for per-case JSON reports");
  replicate->add_option("--threads", threads, "Worker threads (0 = all cores)");

  // simulate
  std::size_t session_index = 0;
  auto* simulate = app.add_subcommand("simulate", "Emit one simulated session as JSON");
  simulate->add_option("--task", task, "rt or choice")->required();
  simulate->add_option("--scenario", scenario, "Strategy or agent name")->required();
  simulate->add_option("--seed", seed, "Master seed");
  simulate->add_option("--session", session_index,
                       "Session index; uses the same stream as session I of `run`");
  simulate->add_option("--out", out, "Output path (default: standard output)");
  overrides.add_to(simulate);

  // test
  std::string input;
  auto* test = app.add_subcommand("test", "Test one session JSON file");
  test->add_option("--input", input, "Session JSON (as written by simulate)")->required();
  test->add_option("--task", task, "rt or choice")->required();
  test->add_option("--resampler", resampler, "conditional or tangent (choice task)");
  test->add_option("--statistic", statistic, "mean_rt, same_trial or delayed");
  test->add_option("--resamples", resamples, "Null ensemble size");
  test->add_option("--seed", seed, "Master seed of the test stream");
  test->add_option("--out", out, "Output path (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  // Configuration phase: everything that can be checked before doing work.
  crtlab::ExperimentSpec spec;
  crtlab::ReportFormat report_format = crtlab::ReportFormat::json;
  try {
    if (*run || *simulate || *test) {
      spec.task = crtlab::parse_task(task);
      spec.scenario = scenario;
      spec.resampler = crtlab::parse_resampler(resampler);
      spec.statistic =
          crtlab::parse_statistic(statistic.empty() ? default_statistic(task) : statistic);
      spec.n_sessions = sessions;
      spec.n_resamples = resamples;
      spec.alpha_levels = alphas;
      spec.master_seed = seed;
      overrides.apply(spec.rt_config, spec.choice_config);
    }
    if (*run) {
      report_format = crtlab::parse_format(format);
      spec.validate();
    }
    if (*simulate) {
      if (spec.task == crtlab::Task::rt) {
        crtlab::rt_strategy_named(scenario);
        spec.rt_config.validate();
      } else {
        crtlab::agent_named(scenario);
        spec.choice_config.validate();
      }
    }
    if (*test && resamples < 1) throw crtlab::ConfigError("--resamples must be >= 1");
    if (*replicate && (rep_sessions < 1 || rep_resamples < 1))
      throw crtlab::ConfigError("--sessions and --resamples must be >= 1");
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*run) {
      const auto report = crtlab::run_experiment(spec, threads);
      crtlab::emit_report(report, report_format, out);
      std::cerr << "wall time: " << report.wall_time_s << " s\n";
    } else if (*replicate) {
      const auto start = std::chrono::steady_clock::now();
      const auto results = crtlab::run_reference_grid(rep_sessions, rep_resamples, rep_seed, threads);
      crtlab::print_summary_table(results, std::cout);
      if (!rep_out.empty()) crtlab::write_replicate_reports(results, rep_out);
      std::cerr << "wall time: "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                << " s\n";
    } else if (*simulate) {
      crtlab::Stream rng = crtlab::derive_stream(
          crtlab::SeedSpec{seed, 2 * static_cast<std::uint64_t>(session_index)});
      crtlab::Json doc;
      if (spec.task == crtlab::Task::rt) {
        doc = crtlab::to_json(crtlab::rt::simulate_rt_session(crtlab::rt_strategy_named(scenario),
                                                              spec.rt_config, rng));
      } else {
        auto session = crtlab::choice::simulate_choice_session(crtlab::agent_named(scenario),
                                                               spec.choice_config, rng);
        doc = crtlab::to_json(crtlab::ChoiceRecord{spec.choice_config, std::move(session)});
      }
      write_text(doc.dump(2) + "\n", out);
    } else if (*test) {
      const auto doc = crtlab::read_json_file(input);
      const crtlab::SeedSpec test_seed{seed, 1};
      crtlab::TestOutcome outcome;
      if (spec.task == crtlab::Task::rt) {
        if (spec.statistic != crtlab::StatisticKind::mean_rt)
          throw crtlab::ConfigError("the rt task supports only the mean_rt statistic");
        outcome = crtlab::rt::rt_crt(crtlab::rt_session_from_json(doc), resamples, test_seed);
      } else {
        if (spec.statistic == crtlab::StatisticKind::mean_rt)
          throw crtlab::ConfigError("mean_rt applies only to the rt task");
        const auto record = crtlab::choice_record_from_json(doc);
        outcome = crtlab::choice::choice_crt(
            record.session, record.config,
            spec.statistic == crtlab::StatisticKind::same_trial
                ? crtlab::choice::ChoiceStatistic::same_trial
                : crtlab::choice::ChoiceStatistic::delayed,
            spec.resampler, resamples, test_seed);
      }
      write_text(crtlab::to_json(outcome).dump(2) + "\n", out);
    }
  } catch (const crtlab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
