// trajrep: clusters historical tracks, fits per-corridor models and reduces
// them to weighted representative trajectories.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajrep/pipeline.hpp"
#include "trajrep/text.hpp"

namespace fs = std::filesystem;
using namespace trajrep;

namespace {

struct GlobalOptions {
  std::string config;
  std::string output;
  unsigned threads = 1;
};

PipelineConfig load(const GlobalOptions& g, bool config_required) {
  PipelineConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config);
  else if (config_required) throw Error("--config is required for this command");
  if (!g.output.empty()) cfg.output_dir = g.output;
  cfg.set_threads(g.threads);
  return cfg;
}

std::vector<fs::path> paths(const std::vector<std::string>& in) {
  return {in.begin(), in.end()};
}

void print_comparison(const std::string& label, const FootprintComparison& c) {
  const double active = static_cast<double>(c.n_active);
  auto pct = [&](std::size_t n) { return active > 0 ? 100.0 * static_cast<double>(n) / active : 0.0; };
  std::cout << label << ": active " << c.n_active << ", deviation [" << format_double(c.min_deviation)
            << ", " << format_double(c.max_deviation) << "] points, under >5 " << c.n_under_gt5
            << " (" << format_double(pct(c.n_under_gt5)) << "%), over >5 " << c.n_over_gt5 << " ("
            << format_double(pct(c.n_over_gt5)) << "%)\n";
}

void report_footprints(const PipelineConfig& cfg) {
  for (const auto& scheme : cfg.schemes)
    print_comparison(scheme.name, cmd_compare(cfg.output_dir / artifact::footprint_file(scheme.name),
                                              cfg.output_dir / artifact::kFootprintRaw));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative trajectories from clustered flight tracks"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Configuration file");
  app.add_option("--output", g.output, "Output directory (overrides output.directory)");
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corridor dataset");
  std::optional<std::uint64_t> seed;
  synth->add_option("--seed", seed, "Random seed (overrides synth.seed)");

  auto* cluster = app.add_subcommand("cluster", "Split, resample, PCA and DBSCAN the input tracks");
  auto* fit = app.add_subcommand("fit", "Fit one model per cluster file by EM");
  std::vector<std::string> cluster_files;
  fit->add_option("clusters", cluster_files, "Cluster CSV files (default: all in the output dir)");
  auto* generate = app.add_subcommand("generate", "Emit weighted representative trajectories");
  std::vector<std::string> model_files;
  generate->add_option("models", model_files, "Model files (default: all in the output dir)");
  auto* footprint = app.add_subcommand("footprint", "Raw and representative footprints");
  auto* compare = app.add_subcommand("compare", "Compare a candidate grid against a reference");
  std::string candidate, reference, compare_out;
  compare->add_option("candidate", candidate, "Candidate grid CSV")->required();
  compare->add_option("reference", reference, "Reference grid CSV")->required();
  compare->add_option("-o,--to", compare_out, "Write the comparison here instead of stdout");
  auto* pipeline = app.add_subcommand("pipeline", "cluster, fit, generate and footprint in turn");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto cfg = load(g, false);
      if (seed) cfg.synth.seed = *seed;
      const auto data = cmd_synth(cfg);
      std::cout << "wrote " << data.trajectories.size() << " trajectories to "
                << (cfg.output_dir / artifact::kTrajectories).string() << '\n';
    } else if (cluster->parsed()) {
      const auto outcome = cmd_cluster(load(g, true));
      std::cout << outcome.clusters.size() << " clusters, " << outcome.outliers << " outliers\n";
      for (const auto& c : outcome.clusters)
        std::cout << "  cluster " << c.id << " (" << to_string(c.phase) << ", " << c.runway
                  << "): " << c.members.size() << '\n';
    } else if (fit->parsed()) {
      for (const auto& m : cmd_fit(load(g, true), paths(cluster_files)))
        std::cout << "cluster " << m.cluster_id << ": " << m.iterations << " iterations, "
                  << (m.converged ? "converged" : "not converged") << '\n';
    } else if (generate->parsed()) {
      const auto cfg = load(g, true);
      cmd_generate(cfg, paths(model_files));
      for (const auto& s : cfg.schemes)
        std::cout << "wrote " << (cfg.output_dir / artifact::representatives_file(s.name)).string()
                  << '\n';
    } else if (footprint->parsed()) {
      const auto cfg = load(g, true);
      cmd_footprint(cfg);
      report_footprints(cfg);
    } else if (compare->parsed()) {
      const auto c = cmd_compare(candidate, reference);
      if (compare_out.empty()) {
        write_comparison(std::cout, c);
      } else {
        std::ofstream out(compare_out);
        write_comparison(out, c);
        if (!out) throw Error("cannot write '" + compare_out + "'");
      }
    } else if (pipeline->parsed()) {
      const auto cfg = load(g, true);
      cmd_pipeline(cfg);
      report_footprints(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "trajrep: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
