// mut: merge unit tests for autonomous-vehicle scenarios.
#include "mut/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

mut::Exec exec_of(bool parallel) { return parallel ? mut::Exec::parallel : mut::Exec::serial; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Merge unit tests into one reactive test and run it against a system model"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "synthesize the merged test and play one episode");
  std::string config_path, trace_out, report_out;
  mut::SearchParams params;
  bool parallel = false, with_timings = false, telemetry = false;
  int unit = 0;
  run->add_option("config", config_path, "scenario config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", params.seed, "random seed")->required();
  run->add_option("--rollouts", params.rollouts, "rollouts per tester decision")->capture_default_str();
  run->add_option("--c", params.c, "UCB exploration constant")->capture_default_str();
  run->add_option("--t-max", params.t_max, "episode horizon in plies, 0 for the scenario default");
  run->add_option("--k-ll", params.k_ll, "live-lock window, 0 for the largest goal depth");
  run->add_option("--batch", params.batch, "rollouts per selected leaf")->capture_default_str();
  run->add_option("--unit", unit, "run only unit test 1 or 2")->check(CLI::Range(0, 2));
  run->add_flag("--parallel", parallel, "OpenMP kernels");
  run->add_flag("--with-timings", with_timings, "add wall-clock phase timings to the report");
  run->add_flag("--telemetry", telemetry, "print per-decision search telemetry to stderr");
  run->add_option("--trace", trace_out, "trace output file (line-delimited JSON)");
  run->add_option("--report", report_out, "report output file, stdout when omitted");

  // bench-filter
  auto* bf = app.add_subcommand("bench-filter", "time filter synthesis over lane-change track lengths");
  std::vector<int> lengths;
  std::vector<std::string> modes{"receding", "monolithic"};
  double timeout_s = 600;
  bool bf_parallel = false;
  bf->add_option("--lengths", lengths, "track lengths")->delimiter(',');
  bf->add_option("--modes", modes, "receding, monolithic, monolithic_vertex")->delimiter(',')->capture_default_str();
  bf->add_option("--timeout", timeout_s, "seconds per cell before recording DNF")->capture_default_str();
  bf->add_flag("--parallel", bf_parallel, "OpenMP kernels");

  // bench-mcts
  auto* bm = app.add_subcommand("bench-mcts", "normalised reward against rollout budget");
  std::vector<int> mlengths{5, 10, 15}, budgets{1, 10, 50, 100, 200};
  int runs = 50;
  std::uint64_t mseed = 1;
  bool spark = false, bm_parallel = false;
  bm->add_option("--lengths", mlengths, "track lengths")->delimiter(',')->capture_default_str();
  bm->add_option("--rollouts", budgets, "rollout budgets")->delimiter(',')->capture_default_str();
  bm->add_option("--runs", runs, "seeded runs per cell")->capture_default_str();
  bm->add_option("--seed", mseed, "first seed")->capture_default_str();
  bm->add_flag("--sparkline", spark, "append ASCII sparklines");
  bm->add_flag("--parallel", bm_parallel, "run episodes of a cell concurrently");

  // render
  auto* rd = app.add_subcommand("render", "ASCII frames of a trace");
  std::string trace_path;
  rd->add_option("trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);

  // coverage
  auto* cv = app.add_subcommand("coverage", "which unit specifications a set of traces covers");
  std::vector<std::string> trace_paths;
  cv->add_option("traces", trace_paths, "trace files");

  // dumps
  auto* dg = app.add_subcommand("dump-graph", "print the game graph of a config");
  bool aux = false;
  dg->add_option("config", config_path, "scenario config file")->required()->check(CLI::ExistingFile);
  dg->add_flag("--aux", aux, "print the auxiliary graph instead");
  auto* df = app.add_subcommand("dump-filter", "print the synthesized filter of a config");
  df->add_option("config", config_path, "scenario config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      mut::RunOptions opt;
      opt.config_text = slurp(config_path);
      opt.params = params;
      opt.params.exec = exec_of(parallel);
      opt.unit = unit;
      opt.with_timings = with_timings;
      mut::RunOutcome r = mut::cmd_run(opt);
      if (!r.message.empty()) std::cerr << r.message << "\n";
      if (telemetry && !r.report.empty()) {
        auto rep = nlohmann::json::parse(r.report);
        for (const auto& d : rep.value("telemetry", nlohmann::json::array()))
          std::cerr << "step " << d["step"] << " rollouts " << d["rollouts"] << " best_edge " << d["best_edge"]
                    << " mean_value " << d["mean_value"] << " visits " << d["visits"] << "\n";
      }
      if (!trace_out.empty() && !r.trace.empty()) write_file(trace_out, r.trace);
      if (!report_out.empty())
        write_file(report_out, r.report);
      else
        std::cout << r.report;
      return r.exit_code;
    }
    if (*bf) {
      std::cout << mut::to_csv(mut::bench_filter(lengths, modes, exec_of(bf_parallel), timeout_s));
      return 0;
    }
    if (*bm) {
      auto rows = mut::bench_mcts(mlengths, budgets, runs, mseed, exec_of(bm_parallel));
      std::cout << mut::to_csv(rows);
      if (spark) std::cout << "\n" << mut::sparklines(rows);
      return 0;
    }
    if (*rd) {
      const mut::TraceFile t = mut::parse_trace(slurp(trace_path));
      std::cout << mut::render_trace(mut::scenario_of(t), t);
      return 0;
    }
    if (*cv) {
      std::vector<std::string> texts;
      for (const auto& p : trace_paths) texts.push_back(slurp(p));
      std::cout << mut::cmd_coverage(trace_paths, texts).to_text();
      return 0;
    }
    if (*dg) {
      std::cout << mut::cmd_dump_graph(slurp(config_path), aux);
      return 0;
    }
    if (*df) {
      std::cout << mut::cmd_dump_filter(slurp(config_path));
      return 0;
    }
  } catch (const mut::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return mut::kExitConfig;
  } catch (const mut::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mut::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
