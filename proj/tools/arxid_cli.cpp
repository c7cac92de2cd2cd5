#include "CLI11.hpp"
#include "arxid/harness.hpp"
#include "arxid/oracles/criteria.hpp"

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace arxid;

namespace {

void print_summary(const SummaryTable& table) {
  std::printf("%-10s %7s %5s %12s %12s %12s %8s\n", "strategy", "T", "runs", "median", "p25", "p75", "energy");
  for (const auto& r : table.rows) {
    std::printf("%-10s %7lld %5d %12.6g %12.6g %12.6g %8.4f%s\n", r.strategy.c_str(), static_cast<long long>(r.T),
                r.runs, r.median, r.p25, r.p75, r.energy_ratio, r.extension ? "  (extension)" : "");
  }
}

void print_crossover(const SummaryTable& table) {
  const auto s = table.strategies();
  auto has = [&](const std::string& n) { return std::find(s.begin(), s.end(), n) != s.end(); };
  if (has("random") && has("active")) {
    std::cout << "crossover (random vs active): " << crossover_metric(table, "random", "active").text() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active input design for ARX system identification"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config and write its archive");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  std::string archive;
  auto* summarize_cmd = app.add_subcommand("summarize", "Recompute summary.csv from an archive directory");
  summarize_cmd->add_option("archive", archive, "Archive directory")->required()->check(CLI::ExistingDirectory);

  std::string summary_path, out_path;
  auto* plot = app.add_subcommand("plot", "Render a summary.csv as an SVG error plot");
  plot->add_option("summary", summary_path, "summary.csv")->required()->check(CLI::ExistingFile);
  plot->add_option("out", out_path, "Output .svg")->required();

  bool verbose = false;
  std::string keep_archive;
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria and print PASS/FAIL per criterion");
  verify->add_flag("-v,--verbose", verbose, "Print per-instance details");
  verify->add_option("--archive", keep_archive, "Keep the reproduction archive in this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentConfig cfg = load_config(config_path);
      for (const auto& n : cfg.notes) std::cerr << "note: " << n << '\n';
      const ExperimentResult res = run_experiment(cfg);
      std::cout << "archive: " << res.archive << " (" << res.completed << " runs, " << res.quarantined
                << " quarantined)\n";
      print_summary(res.summary);
      print_crossover(res.summary);
      return res.quarantined == 0 ? 0 : 3;
    }
    if (*summarize_cmd) {
      const SummaryTable t = summarize(archive);
      const std::string path = (fs::path(archive) / "summary.csv").string();
      write_summary_csv(t, path);
      print_summary(t);
      print_crossover(t);
      std::cout << "wrote " << path << '\n';
      return 0;
    }
    if (*plot) {
      const SummaryTable t = read_summary_csv(summary_path);
      emit_figure(t, out_path);
      std::cout << "wrote " << out_path << " and " << fs::path(out_path).replace_extension(".csv").string() << '\n';
      return 0;
    }
    if (*verify) {
      oracles::CriteriaContext ctx;
      ctx.verbose = verbose;
      ctx.scratch_dir = keep_archive;
      bool all = true;
      oracles::run_all_criteria(ctx, [&](const oracles::CriterionResult& r) {
        if (verbose)
          for (const auto& d : r.details) std::cout << "    " << d << '\n';
        std::cout << oracles::format_line(r) << std::endl;
        all = all && r.pass;
      });
      return all ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
