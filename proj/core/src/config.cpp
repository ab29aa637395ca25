#include "trajrep/config.hpp"

#include <map>
#include <set>

#include "trajrep/text.hpp"

namespace trajrep {
namespace {

class Reader {
 public:
  explicit Reader(const KeyValue& kv) : kv_(kv) {}

  std::string field() const { return kv_.section + "." + kv_.key; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(kv_.line, field() + ": " + what);
  }

  double number() const {
    const auto v = parse_double(kv_.value);
    if (!v || !std::isfinite(*v)) fail("expected a number, got '" + kv_.value + "'");
    return *v;
  }
  long long integer() const {
    const auto v = parse_integer(kv_.value);
    if (!v) fail("expected an integer, got '" + kv_.value + "'");
    return *v;
  }
  int small_int() const {
    const auto v = integer();
    if (v < -1'000'000'000 || v > 1'000'000'000) fail("integer out of range");
    return static_cast<int>(v);
  }
  bool boolean() const {
    if (kv_.value == "true" || kv_.value == "yes" || kv_.value == "1") return true;
    if (kv_.value == "false" || kv_.value == "no" || kv_.value == "0") return false;
    fail("expected true or false, got '" + kv_.value + "'");
  }
  const std::string& text() const {
    if (kv_.value.empty()) fail("empty value");
    return kv_.value;
  }

 private:
  const KeyValue& kv_;
};

std::vector<double> number_list(const Reader& r, std::string_view text) {
  std::vector<double> out;
  std::string buffer(text);
  for (auto& c : buffer)
    if (c == ';') c = ' ';
  std::size_t pos = 0;
  while (pos < buffer.size()) {
    while (pos < buffer.size() && buffer[pos] == ' ') ++pos;
    if (pos == buffer.size()) break;
    auto end = buffer.find(' ', pos);
    if (end == std::string::npos) end = buffer.size();
    const auto v = parse_double(std::string_view(buffer).substr(pos, end - pos));
    if (!v || !std::isfinite(*v)) r.fail("bad number in list '" + std::string(text) + "'");
    out.push_back(*v);
    pos = end;
  }
  return out;
}

Ring parse_ring(const Reader& r, std::string_view value) {
  const auto fields = split(value, ',');
  if (fields.size() != 4) r.fail("expected 'radius, lower, upper, angle angle ...'");
  Ring ring;
  double* targets[] = {&ring.radius, &ring.lower, &ring.upper};
  for (int k = 0; k < 3; ++k) {
    const auto v = parse_double(fields[static_cast<std::size_t>(k)]);
    if (!v || !std::isfinite(*v)) r.fail("bad ring number");
    *targets[k] = *v;
  }
  ring.angles_deg = number_list(r, trim(fields[3]));
  return ring;
}

void apply_to_corridors(SynthOptions& synth, double CorridorSpec::*member, double value) {
  for (auto& c : synth.corridors) c.*member = value;
}

}  // namespace

void PipelineConfig::set_threads(unsigned threads) {
  if (threads == 0) threads = 1;
  clustering.threads = threads;
  em.threads = threads;
  generation.threads = threads;
}

void PipelineConfig::validate(bool require_inputs) const {
  clustering.validate();
  em.validate();
  generation.validate();
  synth.validate();
  if (basis_count < 2) throw Error("gp-model.basis_count must be at least 2");
  if (max_altitude_m && !(*max_altitude_m > 0.0))
    throw Error("trajectory-io.max_altitude_m must be positive");
  if (schemes.empty()) throw Error("representative.schemes must name at least one scheme");
  std::set<std::string> names;
  for (const auto& s : schemes) {
    s.validate();
    if (!names.insert(s.name).second)
      throw Error("representative.schemes lists '" + s.name + "' twice");
  }
  if (footprint.nx < 1 || footprint.ny < 1) throw Error("footprint.nx and footprint.ny must be >= 1");
  if (!(footprint.range_m > 0.0)) throw Error("footprint.range_m must be positive");
  if (footprint.margin_m < 0.0) throw Error("footprint.margin_m must be non-negative");
  if (footprint.grid) footprint.grid->validate();
  if (output_dir.empty()) throw Error("output.directory must not be empty");
  if (require_inputs) {
    if (trajectories.empty()) throw Error("input.trajectories is required");
    if (!std::filesystem::is_regular_file(trajectories))
      throw Error("input.trajectories: no such file '" + trajectories.string() + "'");
    if (airport.empty()) throw Error("input.airport is required");
    if (!std::filesystem::is_regular_file(airport))
      throw Error("input.airport: no such file '" + airport.string() + "'");
  }
}

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::optional<double> margin;
  std::optional<double> origin_east, origin_north, cell;
  std::vector<std::string> scheme_names;
  std::map<std::string, RepresentativeScheme> custom;
  std::set<std::string> seen;

  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  for (const auto& kv : parse_key_values(text)) {
    const Reader r(kv);
    const auto& s = kv.section;
    const auto& k = kv.key;
    if (k != "ring" && !seen.insert(r.field()).second) r.fail("duplicate key");

    if (s == "input") {
      if (k == "trajectories") cfg.trajectories = resolve(r.text());
      else if (k == "airport") cfg.airport = resolve(r.text());
      else r.fail("unknown key");
    } else if (s == "trajectory-io") {
      if (k == "phase") {
        if (kv.value == "departure") cfg.phase = Phase::Departure;
        else if (kv.value == "approach") cfg.phase = Phase::Approach;
        else if (kv.value == "all") cfg.phase.reset();
        else r.fail("expected departure, approach or all");
      } else if (k == "max_altitude_m") {
        if (kv.value == "none") cfg.max_altitude_m.reset();
        else cfg.max_altitude_m = r.number();
      } else {
        r.fail("unknown key");
      }
    } else if (s == "clustering") {
      auto& c = cfg.clustering;
      if (k == "resample_steps") c.resample_steps = r.small_int();
      else if (k == "variance_retained") c.variance_retained = r.number();
      else if (k == "eps") c.eps = r.number();
      else if (k == "min_pts") c.min_pts = r.small_int();
      else if (k == "min_cluster_size") c.min_cluster_size = r.small_int();
      else r.fail("unknown key");
    } else if (s == "gp-model") {
      if (k == "basis_count") cfg.basis_count = r.small_int();
      else if (k == "prior_scale") cfg.em.prior_scale = r.number();
      else if (k == "beta_init") cfg.em.beta_init = r.number();
      else if (k == "tolerance") cfg.em.tolerance = r.number();
      else if (k == "max_iterations") cfg.em.max_iterations = r.small_int();
      else r.fail("unknown key");
    } else if (s == "representative") {
      if (k == "schemes") {
        scheme_names.clear();
        for (auto name : split(r.text(), ',')) scheme_names.emplace_back(trim(name));
      } else if (k == "steps") {
        cfg.generation.steps = r.small_int();
      } else if (k == "d_tau") {
        cfg.generation.d_tau = r.number();
      } else if (k == "search_window") {
        cfg.generation.search_window = r.small_int();
      } else {
        r.fail("unknown key");
      }
    } else if (s.rfind("scheme.", 0) == 0) {
      const auto name = s.substr(7);
      if (name.empty() || name == "round" || name == "flat")
        r.fail("custom scheme needs a new name");
      auto& scheme = custom[name];
      scheme.name = name;
      if (k == "dof") scheme.dof = r.small_int();
      else if (k == "ring") scheme.rings.push_back(parse_ring(r, kv.value));
      else r.fail("unknown key");
    } else if (s == "footprint") {
      auto& f = cfg.footprint;
      if (k == "nx") f.nx = r.small_int();
      else if (k == "ny") f.ny = r.small_int();
      else if (k == "range_m") f.range_m = r.number();
      else if (k == "margin_m") margin = r.number();
      else if (k == "origin_east") origin_east = r.number();
      else if (k == "origin_north") origin_north = r.number();
      else if (k == "cell_m") cell = r.number();
      else if (k == "proximity") {
        if (kv.value == "points") f.proximity = Proximity::Points;
        else if (kv.value == "segments") f.proximity = Proximity::Segments;
        else r.fail("expected points or segments");
      } else {
        r.fail("unknown key");
      }
    } else if (s == "synth") {
      auto& y = cfg.synth;
      if (k == "seed") {
        const auto v = r.integer();
        if (v < 0) r.fail("seed must be non-negative");
        y.seed = static_cast<std::uint64_t>(v);
      } else if (k == "sampler") {
        const auto v = r.text();
        if (v == "corridor") y.sampler = Sampler::Corridor;
        else if (v == "model") y.sampler = Sampler::Model;
        else r.fail("expected corridor or model");
      } else if (k == "per_corridor") y.per_corridor = r.small_int();
      else if (k == "outlier_fraction") y.outlier_fraction = r.number();
      else if (k == "speed_mps") y.speed_mps = r.number();
      else if (k == "sample_interval_s") y.sample_interval_s = r.number();
      else if (k == "basis_count") y.basis_count = r.small_int();
      else if (k == "length_m") apply_to_corridors(y, &CorridorSpec::length_m, r.number());
      else if (k == "climb_gradient") apply_to_corridors(y, &CorridorSpec::climb_gradient, r.number());
      else if (k == "offset_sigma_m") apply_to_corridors(y, &CorridorSpec::offset_sigma_m, r.number());
      else if (k == "offset_scale_m") apply_to_corridors(y, &CorridorSpec::offset_scale_m, r.number());
      else if (k == "fan_sigma_m") apply_to_corridors(y, &CorridorSpec::fan_sigma_m, r.number());
      else if (k == "vertical_sigma_m") apply_to_corridors(y, &CorridorSpec::vertical_sigma_m, r.number());
      else if (k == "start_spread_m") apply_to_corridors(y, &CorridorSpec::start_spread_m, r.number());
      else if (k == "noise_m") apply_to_corridors(y, &CorridorSpec::noise_m, r.number());
      else r.fail("unknown key");
    } else if (s == "output") {
      if (k == "directory") cfg.output_dir = resolve(r.text());
      else if (k == "plots") cfg.plots = r.boolean();
      else r.fail("unknown key");
    } else {
      throw ParseError(kv.line, "unknown section '" + s + "'");
    }
  }

  cfg.footprint.margin_m = margin.value_or(cfg.footprint.range_m);
  const int grid_keys = origin_east.has_value() + origin_north.has_value() + cell.has_value();
  if (grid_keys == 3) {
    cfg.footprint.grid = GridSpec{*origin_east, *origin_north, *cell, cfg.footprint.nx,
                                  cfg.footprint.ny};
  } else if (grid_keys != 0) {
    throw ParseError(0, "footprint.origin_east, footprint.origin_north and footprint.cell_m "
                        "must be given together");
  }

  if (!scheme_names.empty()) {
    cfg.schemes.clear();
    for (const auto& name : scheme_names) {
      if (name == "round") cfg.schemes.push_back(RepresentativeScheme::round());
      else if (name == "flat") cfg.schemes.push_back(RepresentativeScheme::flat());
      else if (auto it = custom.find(name); it != custom.end()) cfg.schemes.push_back(it->second);
      else throw ParseError(0, "representative.schemes: no scheme named '" + name + "'");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const auto text = read_file(path.string());
  try {
    return parse_config(text, path.parent_path().empty() ? "." : path.parent_path());
  } catch (const ParseError& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace trajrep
