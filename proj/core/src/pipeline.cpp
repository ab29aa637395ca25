#include "trajrep/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <tuple>

#include "trajrep/plots.hpp"
#include "trajrep/text.hpp"

namespace trajrep {
namespace fs = std::filesystem;

namespace artifact {
std::string cluster_file(int id) { return "cluster_" + std::to_string(id) + ".csv"; }
std::string model_file(int id) { return "model_" + std::to_string(id) + ".txt"; }
std::string truth_file(int id) { return "truth_" + std::to_string(id) + ".txt"; }
std::string representatives_file(const std::string& scheme) {
  return "representatives_" + scheme + ".csv";
}
std::string footprint_file(const std::string& scheme) { return "footprint_" + scheme + ".csv"; }
std::string comparison_file(const std::string& scheme) { return "comparison_" + scheme + ".txt"; }
}  // namespace artifact

namespace {

template <typename Writer>
std::string render(Writer&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

void prepare_output(const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw Error("output.directory: cannot create '" + config.output_dir.string() + "'");
}

std::string out_path(const PipelineConfig& config, const std::string& name) {
  return (config.output_dir / name).string();
}

std::vector<Trajectory> read_trajectory_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return parse_trajectories(in).trajectories;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

TrajectoryModel read_model_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return read_model(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<TrajectoryModel> load_models(const PipelineConfig& config) {
  std::vector<TrajectoryModel> models;
  for (const auto& [id, path] : numbered_files(config.output_dir, "model_", ".txt"))
    models.push_back(read_model_file(path));
  return models;
}

std::vector<WeightedTrajectory> read_representative_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_representatives(in);
}

void remove_numbered(const fs::path& dir, const std::string& prefix, const std::string& suffix) {
  for (const auto& [id, path] : numbered_files(dir, prefix, suffix)) fs::remove(path);
}

}  // namespace

std::vector<std::pair<int, fs::path>> numbered_files(const fs::path& dir, const std::string& prefix,
                                                     const std::string& suffix) {
  std::vector<std::pair<int, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  const std::regex pattern(std::regex_replace(prefix, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)") +
                           "([0-9]+)" +
                           std::regex_replace(suffix, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)"));
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.emplace_back(std::stoi(m[1].str()), entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t ClusterOutcome::clustered_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

ClusterOutcome cluster_trajectories(const PipelineConfig& config,
                                    std::span<const Trajectory> trajectories,
                                    const AirportGeometry& airport, std::size_t rejected_short) {
  config.clustering.validate();
  airport.validate();
  ClusterOutcome outcome;
  outcome.input_count = trajectories.size();
  outcome.rejected_short = rejected_short;

  // Phase and runway split; groups ordered by phase then runway id.
  std::map<std::pair<Phase, std::string>, std::vector<std::size_t>> groups;
  std::vector<int> label(trajectories.size(), kNoise);
  std::vector<bool> excluded(trajectories.size(), false);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Phase phase = classify_phase(trajectories[i], airport);
    if (config.phase && *config.phase != phase) {
      excluded[i] = true;
      ++outcome.phase_excluded;
      continue;
    }
    groups[{phase, assign_runway(trajectories[i], airport, phase)}].push_back(i);
  }

  int next_id = 0;
  for (const auto& [key, indices] : groups) {
    std::vector<Trajectory> members;
    members.reserve(indices.size());
    for (auto i : indices) members.push_back(trajectories[i]);
    const auto result = cluster_pipeline(members, config.clustering);
    for (const auto& cluster : result.clusters) {
      ClusterInfo info;
      info.id = next_id++;
      info.phase = key.first;
      info.runway = key.second;
      for (auto local : cluster) {
        const auto i = indices[local];
        label[i] = info.id;
        if (!config.max_altitude_m) {
          info.members.push_back(trajectories[i]);
        } else if (auto kept = filter_altitude(trajectories[i], key.first, *config.max_altitude_m)) {
          info.members.push_back(std::move(*kept));
        } else {
          ++outcome.filtered_out;
        }
      }
      outcome.clusters.push_back(std::move(info));
    }
    outcome.outliers += result.outliers.size();
  }

  for (std::size_t i = 0; i < trajectories.size(); ++i)
    if (!excluded[i]) outcome.assignments.emplace_back(trajectories[i].id, label[i]);
  return outcome;
}

void write_assignments(std::ostream& out, const ClusterOutcome& outcome) {
  out << "traj_id,cluster\n";
  for (const auto& [id, cluster] : outcome.assignments) {
    out << id << ',';
    if (cluster == kNoise) out << "noise";
    else out << cluster;
    out << '\n';
  }
}

void write_cluster_summary(std::ostream& out, const ClusterOutcome& outcome) {
  const std::size_t considered = outcome.input_count - outcome.phase_excluded;
  out << "input_trajectories = " << outcome.input_count << '\n'
      << "rejected_short = " << outcome.rejected_short << '\n'
      << "phase_excluded = " << outcome.phase_excluded << '\n'
      << "clusters = " << outcome.clusters.size() << '\n'
      << "outliers = " << outcome.outliers << '\n'
      << "outlier_pct = "
      << format_double(considered == 0 ? 0.0
                                       : 100.0 * static_cast<double>(outcome.outliers) /
                                             static_cast<double>(considered))
      << '\n'
      << "altitude_filtered_out = " << outcome.filtered_out << '\n'
      << "total_after_filter = " << outcome.clustered_count() << '\n'
      << "cluster,phase,runway,trajectories\n";
  for (const auto& c : outcome.clusters)
    out << c.id << ',' << to_string(c.phase) << ',' << c.runway << ',' << c.members.size() << '\n';
}

SyntheticDataset cmd_synth(const PipelineConfig& config) {
  config.validate(false);
  auto data = synthesize(config.synth);
  prepare_output(config);
  write_file(out_path(config, artifact::kTrajectories),
             render([&](std::ostream& o) { write_trajectories(o, data.trajectories); }));
  write_file(out_path(config, artifact::kAirport),
             render([&](std::ostream& o) { write_airport(o, data.airport); }));
  remove_numbered(config.output_dir, "truth_", ".txt");
  for (const auto& truth : data.truths)
    write_file(out_path(config, artifact::truth_file(truth.cluster_id)),
               render([&](std::ostream& o) { write_model(o, truth); }));
  return data;
}

ClusterOutcome cmd_cluster(const PipelineConfig& config) {
  config.validate(true);
  const auto text = read_file(config.trajectories.string());
  if (trim(text).empty()) throw Error("no trajectories parsed");
  std::istringstream in(text);
  ParseResult parsed;
  try {
    parsed = parse_trajectories(in);
  } catch (const Error& e) {
    throw Error(config.trajectories.string() + ": " + e.what());
  }
  if (parsed.trajectories.empty()) throw Error("no trajectories parsed");
  std::ifstream airport_in(config.airport);
  AirportGeometry airport;
  try {
    airport = parse_airport(airport_in);
  } catch (const Error& e) {
    throw Error(config.airport.string() + ": " + e.what());
  }

  auto outcome = cluster_trajectories(config, parsed.trajectories, airport, parsed.rejected_short);

  prepare_output(config);
  remove_numbered(config.output_dir, "cluster_", ".csv");
  remove_numbered(config.output_dir, "model_", ".txt");
  write_file(out_path(config, artifact::kAssignments),
             render([&](std::ostream& o) { write_assignments(o, outcome); }));
  for (const auto& c : outcome.clusters)
    write_file(out_path(config, artifact::cluster_file(c.id)),
               render([&](std::ostream& o) { write_trajectories(o, c.members); }));
  write_file(out_path(config, artifact::kClusterSummary),
             render([&](std::ostream& o) { write_cluster_summary(o, outcome); }));
  return outcome;
}

std::vector<TrajectoryModel> cmd_fit(const PipelineConfig& config,
                                     const std::vector<fs::path>& cluster_files) {
  config.validate(false);
  std::vector<std::pair<int, fs::path>> inputs;
  if (cluster_files.empty()) {
    inputs = numbered_files(config.output_dir, "cluster_", ".csv");
  } else {
    const std::regex name(R"(cluster_([0-9]+)\.csv)");
    for (std::size_t k = 0; k < cluster_files.size(); ++k) {
      std::smatch m;
      const auto file = cluster_files[k].filename().string();
      const int id = std::regex_match(file, m, name) ? std::stoi(m[1].str()) : static_cast<int>(k);
      inputs.emplace_back(id, cluster_files[k]);
    }
  }

  const auto basis = BasisSet::uniform(config.basis_count);
  std::vector<TrajectoryModel> models;
  for (const auto& [id, path] : inputs) {
    const auto members = read_trajectory_file(path);
    if (members.empty()) throw Error(path.string() + ": no trajectories parsed");
    try {
      auto model = fit_cluster(members, basis, config.em);
      model.cluster_id = id;
      models.push_back(std::move(model));
    } catch (const Error& e) {
      throw Error("fit of cluster " + std::to_string(id) + " rejected: " + e.what());
    }
  }

  prepare_output(config);
  if (cluster_files.empty()) remove_numbered(config.output_dir, "model_", ".txt");
  std::string report = "cluster,n_trajectories,iterations,converged,final_neg_log_likelihood,ridge_count\n";
  for (const auto& m : models) {
    write_file(out_path(config, artifact::model_file(m.cluster_id)),
               render([&](std::ostream& o) { write_model(o, m); }));
    report += std::to_string(m.cluster_id) + ',' + std::to_string(m.n_trajectories) + ',' +
              std::to_string(m.iterations) + ',' + (m.converged ? "true" : "false") + ',' +
              (m.nll_trace.empty() ? std::string("nan") : format_double(m.nll_trace.back())) +
              ',' + std::to_string(m.ridge_count) + '\n';
  }
  write_file(out_path(config, artifact::kConvergence), report);
  return models;
}

void cmd_generate(const PipelineConfig& config, const std::vector<fs::path>& model_files) {
  config.validate(false);
  std::vector<TrajectoryModel> models;
  if (model_files.empty()) {
    models = load_models(config);
  } else {
    for (const auto& path : model_files) models.push_back(read_model_file(path));
  }

  std::vector<std::pair<std::string, std::string>> outputs;
  for (const auto& scheme : config.schemes) {
    std::vector<WeightedTrajectory> all;
    for (const auto& model : models) {
      auto reps = generate_representatives(model, scheme, config.generation);
      all.insert(all.end(), std::make_move_iterator(reps.begin()),
                 std::make_move_iterator(reps.end()));
    }
    outputs.emplace_back(artifact::representatives_file(scheme.name),
                         render([&](std::ostream& o) { write_representatives(o, all); }));
  }
  prepare_output(config);
  for (const auto& [name, text] : outputs) write_file(out_path(config, name), text);
}

void cmd_footprint(const PipelineConfig& config) {
  config.validate(false);
  std::vector<Trajectory> raw;
  for (const auto& [id, path] : numbered_files(config.output_dir, "cluster_", ".csv")) {
    auto members = read_trajectory_file(path);
    raw.insert(raw.end(), std::make_move_iterator(members.begin()),
               std::make_move_iterator(members.end()));
  }
  if (raw.empty()) throw Error("footprint: no clustered trajectories in '" +
                               config.output_dir.string() + "'");

  std::map<int, std::size_t> sizes;
  std::size_t total = 0;
  for (const auto& m : load_models(config)) {
    sizes[m.cluster_id] = m.n_trajectories;
    total += m.n_trajectories;
  }
  if (total != raw.size())
    throw Error("footprint: model files cover " + std::to_string(total) +
                " trajectories but the cluster files hold " + std::to_string(raw.size()));

  const auto& f = config.footprint;
  const GridSpec spec = f.grid ? *f.grid : GridSpec::covering(raw, f.margin_m, f.nx, f.ny);
  const unsigned threads = config.generation.threads;
  const auto raw_grid = footprint_raw(raw, spec, f.range_m, raw.size(), f.proximity, threads);

  struct SchemeOutput {
    std::string name;
    std::vector<WeightedTrajectory> reps;
    FootprintGrid grid;
    FootprintComparison comparison;
  };
  std::vector<SchemeOutput> schemes;
  for (const auto& scheme : config.schemes) {
    SchemeOutput s;
    s.name = scheme.name;
    s.reps = read_representative_file(config.output_dir / artifact::representatives_file(scheme.name));
    s.grid = footprint_weighted(s.reps, sizes, total, spec, f.range_m, f.proximity, threads);
    s.comparison = compare_footprints(s.grid, raw_grid);
    schemes.push_back(std::move(s));
  }

  prepare_output(config);
  write_file(out_path(config, artifact::kFootprintRaw),
             render([&](std::ostream& o) { write_grid(o, raw_grid); }));
  for (const auto& s : schemes) {
    write_file(out_path(config, artifact::footprint_file(s.name)),
               render([&](std::ostream& o) { write_grid(o, s.grid); }));
    write_file(out_path(config, artifact::comparison_file(s.name)),
               render([&](std::ostream& o) { write_comparison(o, s.comparison); }));
  }
  if (config.plots) {
    write_file(out_path(config, "footprint_raw.svg"), svg_heatmap(raw_grid, "Raw footprint"));
    for (const auto& s : schemes) {
      write_file(out_path(config, "footprint_" + s.name + ".svg"),
                 svg_heatmap(s.grid, "Footprint, " + s.name + " scheme"));
      write_file(out_path(config, "top_view_" + s.name + ".svg"),
                 svg_top_view(raw, s.reps, "Top view, " + s.name + " scheme"));
      write_file(out_path(config, "side_view_" + s.name + ".svg"),
                 svg_side_view(raw, s.reps, "Side view, " + s.name + " scheme"));
    }
  }
}

FootprintComparison cmd_compare(const fs::path& candidate, const fs::path& reference) {
  auto load = [](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
      return read_grid(in);
    } catch (const Error& e) {
      throw Error(path.string() + ": " + e.what());
    }
  };
  return compare_footprints(load(candidate), load(reference));
}

void cmd_pipeline(const PipelineConfig& config) {
  config.validate(true);
  cmd_cluster(config);
  cmd_fit(config);
  cmd_generate(config);
  cmd_footprint(config);
}

}  // namespace trajrep
