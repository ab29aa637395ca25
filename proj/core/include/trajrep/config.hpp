#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trajrep/clustering.hpp"
#include "trajrep/footprint.hpp"
#include "trajrep/gp_model.hpp"
#include "trajrep/representative.hpp"
#include "trajrep/synthetic.hpp"
#include "trajrep/trajectory_io.hpp"

namespace trajrep {

struct FootprintSettings {
  int nx = 100;
  int ny = 100;
  double range_m = 300.0;
  Proximity proximity = Proximity::Points;
  std::optional<GridSpec> grid;  // fixed grid; otherwise it covers the clustered data
  double margin_m = 300.0;
};

/// Everything a run needs. Sections of the config file map to the modules:
/// [input], [trajectory-io], [clustering], [gp-model], [representative],
/// [scheme.<name>], [footprint], [synth], [output].
struct PipelineConfig {
  std::filesystem::path trajectories;  // resolved against the config file's directory
  std::filesystem::path airport;
  std::optional<Phase> phase;          // keep only this phase; both when unset
  std::optional<double> max_altitude_m = 500.0;
  ClusteringParams clustering;
  int basis_count = 18;
  EmOptions em;
  std::vector<RepresentativeScheme> schemes{RepresentativeScheme::round(),
                                            RepresentativeScheme::flat()};
  GenerationOptions generation;
  FootprintSettings footprint;
  SynthOptions synth;
  std::filesystem::path output_dir = "out";
  bool plots = true;

  /// Caps every module's worker count.
  void set_threads(unsigned threads);
  /// Checks parameter bounds; with `require_inputs` also that the input files exist.
  void validate(bool require_inputs) const;
};

/// Parses config text. Unknown sections or keys and malformed values raise
/// ParseError naming the offending `section.key`.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace trajrep
