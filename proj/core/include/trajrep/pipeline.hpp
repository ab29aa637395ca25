#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trajrep/config.hpp"

namespace trajrep {

struct ClusterInfo {
  int id = 0;
  Phase phase = Phase::Departure;
  std::string runway;
  std::vector<Trajectory> members;  // after the altitude filter
};

struct ClusterOutcome {
  std::size_t input_count = 0;
  std::size_t rejected_short = 0;
  std::size_t phase_excluded = 0;
  std::size_t outliers = 0;
  std::size_t filtered_out = 0;  // clustered tracks with < 2 points under the altitude cutoff
  std::vector<ClusterInfo> clusters;
  std::vector<std::pair<std::string, int>> assignments;  // cluster id or kNoise, input order

  std::size_t clustered_count() const;
};

/// Splits by phase and runway, clusters each group, numbers the surviving
/// clusters globally and applies the altitude filter to their members.
ClusterOutcome cluster_trajectories(const PipelineConfig& config,
                                    std::span<const Trajectory> trajectories,
                                    const AirportGeometry& airport, std::size_t rejected_short = 0);

/// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kTrajectories = "trajectories.csv";
inline constexpr const char* kAirport = "airport.txt";
inline constexpr const char* kAssignments = "assignments.csv";
inline constexpr const char* kClusterSummary = "cluster_summary.txt";
inline constexpr const char* kConvergence = "convergence.txt";
inline constexpr const char* kFootprintRaw = "footprint_raw.csv";
std::string cluster_file(int id);
std::string model_file(int id);
std::string truth_file(int id);
std::string representatives_file(const std::string& scheme);
std::string footprint_file(const std::string& scheme);
std::string comparison_file(const std::string& scheme);
}  // namespace artifact

void write_assignments(std::ostream& out, const ClusterOutcome& outcome);
void write_cluster_summary(std::ostream& out, const ClusterOutcome& outcome);

/// Each command validates the whole config before writing anything and
/// throws Error on failure. Outputs go to `config.output_dir`.

/// Writes trajectories.csv, airport.txt and truth_<k>.txt.
SyntheticDataset cmd_synth(const PipelineConfig& config);
ClusterOutcome cmd_cluster(const PipelineConfig& config);
/// Fits the given cluster files, or every cluster_<k>.csv in the output dir.
std::vector<TrajectoryModel> cmd_fit(const PipelineConfig& config,
                                     const std::vector<std::filesystem::path>& cluster_files = {});
/// Generates every configured scheme from the given or discovered model files.
void cmd_generate(const PipelineConfig& config,
                  const std::vector<std::filesystem::path>& model_files = {});
/// Raw and per-scheme grids plus their comparisons (and plots when enabled).
void cmd_footprint(const PipelineConfig& config);
/// Comparison of candidate against reference grid CSVs.
FootprintComparison cmd_compare(const std::filesystem::path& candidate,
                                const std::filesystem::path& reference);
void cmd_pipeline(const PipelineConfig& config);

/// Files in `dir` named `<prefix><k><suffix>`, ordered by k.
std::vector<std::pair<int, std::filesystem::path>> numbered_files(const std::filesystem::path& dir,
                                                                  const std::string& prefix,
                                                                  const std::string& suffix);

}  // namespace trajrep
