#pragma once

#include <span>
#include <string>

#include "trajrep/footprint.hpp"
#include "trajrep/representative.hpp"
#include "trajrep/trajectory_io.hpp"

namespace trajrep {

/// Static SVG figures. Raw tracks are drawn thin and grey, representatives
/// coloured by cluster with line width growing with their weight.

/// East against north.
std::string svg_top_view(std::span<const Trajectory> raw, std::span<const WeightedTrajectory> reps,
                         const std::string& title);
/// Along-track ground distance against altitude.
std::string svg_side_view(std::span<const Trajectory> raw, std::span<const WeightedTrajectory> reps,
                          const std::string& title);
/// Cell values as a colour ramp, white for zero.
std::string svg_heatmap(const FootprintGrid& grid, const std::string& title);

}  // namespace trajrep
