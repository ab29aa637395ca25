#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "trajrep/gp_model.hpp"
#include "trajrep/text.hpp"

namespace trajrep {
namespace {

constexpr std::string_view kMagic = "# trajrep trajectory model";

template <typename Vec>
std::string join(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(v.size()); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_list(std::string_view text, std::size_t line) {
  std::vector<double> out;
  for (auto field : split(text, ',')) {
    const auto v = parse_double(field);
    if (!v) throw ParseError(line, "bad number '" + std::string(trim(field)) + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

void write_model(std::ostream& out, const TrajectoryModel& model) {
  const auto& p = model.params;
  out << kMagic << '\n';
  out << "format = 1\n";
  out << "cluster = " << model.cluster_id << '\n';
  out << "basis_count = " << model.basis.count << '\n';
  out << "centers = " << join(model.basis.centers) << '\n';
  out << "width = " << format_double(model.basis.width) << '\n';
  out << "offset = " << join(model.transform.offset) << '\n';
  out << "scale = " << join(model.transform.scale) << '\n';
  out << "n_trajectories = " << model.n_trajectories << '\n';
  out << "beta = " << format_double(p.beta) << '\n';
  out << "converged = " << (model.converged ? "true" : "false") << '\n';
  out << "iterations = " << model.iterations << '\n';
  out << "ridge_count = " << model.ridge_count << '\n';
  if (!model.nll_trace.empty())
    out << "final_neg_log_likelihood = " << format_double(model.nll_trace.back()) << '\n';
  out << "mu\n" << join(p.mu) << '\n';
  out << "sigma\n";
  for (Eigen::Index r = 0; r < p.sigma.rows(); ++r) {
    const Eigen::VectorXd row = p.sigma.row(r).transpose();
    out << join(row) << '\n';
  }
}

TrajectoryModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_number = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || trim(line) != kMagic) throw ParseError(1, "not a trajrep model file");

  TrajectoryModel model;
  bool have_basis = false, have_beta = false, have_width = false;
  while (next()) {
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text == "mu") break;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_number, "expected 'key = value'");
    const std::string key(trim(text.substr(0, eq)));
    const auto value = trim(text.substr(eq + 1));
    auto integer = [&] {
      const auto v = parse_integer(value);
      if (!v) throw ParseError(line_number, "bad integer for '" + key + "'");
      return *v;
    };
    auto number = [&] {
      const auto v = parse_double(value);
      if (!v) throw ParseError(line_number, "bad number for '" + key + "'");
      return *v;
    };
    auto vec3 = [&] {
      const auto v = parse_list(value, line_number);
      if (v.size() != 3) throw ParseError(line_number, "'" + key + "' needs 3 values");
      return Eigen::Vector3d(v[0], v[1], v[2]);
    };
    if (key == "format") {
      if (integer() != 1) throw ParseError(line_number, "unsupported model format");
    } else if (key == "cluster") {
      model.cluster_id = static_cast<int>(integer());
    } else if (key == "basis_count") {
      model.basis.count = static_cast<int>(integer());
      have_basis = true;
    } else if (key == "centers") {
      model.basis.centers = parse_list(value, line_number);
    } else if (key == "width") {
      model.basis.width = number();
      have_width = true;
    } else if (key == "offset") {
      model.transform.offset = vec3();
    } else if (key == "scale") {
      model.transform.scale = vec3();
    } else if (key == "n_trajectories") {
      model.n_trajectories = static_cast<std::size_t>(integer());
    } else if (key == "beta") {
      model.params.beta = number();
      have_beta = true;
    } else if (key == "converged") {
      if (value != "true" && value != "false") throw ParseError(line_number, "bad boolean");
      model.converged = value == "true";
    } else if (key == "iterations") {
      model.iterations = static_cast<int>(integer());
    } else if (key == "ridge_count") {
      model.ridge_count = static_cast<int>(integer());
    } else if (key == "final_neg_log_likelihood") {
      model.nll_trace = {number()};
    } else {
      throw ParseError(line_number, "unknown key '" + key + "'");
    }
  }
  if (!have_basis || !have_width || !have_beta)
    throw ParseError(line_number, "model header incomplete");
  model.basis.validate();
  if (!(model.params.beta > 0.0)) throw ParseError(line_number, "beta must be positive");
  if ((model.transform.scale.array() <= 0.0).any())
    throw ParseError(line_number, "scale must be positive");

  const Eigen::Index w = 3 * model.basis.count;
  if (trim(line) != "mu" || !next()) throw ParseError(line_number, "missing mu block");
  const auto mu = parse_list(line, line_number);
  if (static_cast<Eigen::Index>(mu.size()) != w) throw ParseError(line_number, "mu has wrong length");
  model.params.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), w);
  if (!next() || trim(line) != "sigma") throw ParseError(line_number, "missing sigma block");
  model.params.sigma.resize(w, w);
  for (Eigen::Index r = 0; r < w; ++r) {
    if (!next()) throw ParseError(line_number, "sigma truncated");
    const auto row = parse_list(line, line_number);
    if (static_cast<Eigen::Index>(row.size()) != w)
      throw ParseError(line_number, "sigma row has wrong length");
    model.params.sigma.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), w);
  }
  return model;
}

}  // namespace trajrep
