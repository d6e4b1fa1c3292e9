#include "minsec/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "minsec/errors.hpp"

namespace minsec {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(int line, const std::string& key) {
  fail(ErrorCode::ParseError,
       "config line " + std::to_string(line) + ": bad value for '" + key + "'");
}

int parse_int(const std::string& v, int line, const std::string& key) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(line, key);
  return out;
}

double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) bad_value(line, key);
    return out;
  } catch (const std::exception&) {
    bad_value(line, key);
  }
}

std::vector<double> parse_list(const std::string& v, int line,
                               const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(line, key);
    out.push_back(parse_double(item, line, key));
  }
  if (out.empty()) bad_value(line, key);
  return out;
}

} // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string section, line;
  int lineno = 0;
  bool saw_preset = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorCode::ParseError,
             "config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "surface" && section != "bundle" && section != "solver" &&
          section != "hcone" && section != "energy" && section != "output")
        fail(ErrorCode::ParseError, "config line " + std::to_string(lineno) +
                                        ": unknown section '" + section + "'");
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError,
           "config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(ErrorCode::ParseError,
           "config line " + std::to_string(lineno) + ": empty key or value");

    auto unknown = [&]() -> void {
      fail(ErrorCode::ParseError, "config line " + std::to_string(lineno) +
                                      ": unknown key '" + key + "' in [" +
                                      section + "]");
    };

    if (section == "surface") {
      if (key == "preset") {
        saw_preset = true;
        if (value == "icosphere") cfg.surface.kind = SurfaceSpec::Kind::Icosphere;
        else if (value == "flat_torus") cfg.surface.kind = SurfaceSpec::Kind::FlatTorus;
        else if (value == "disk") cfg.surface.kind = SurfaceSpec::Kind::Disk;
        else if (value == "file") cfg.surface.kind = SurfaceSpec::Kind::File;
        else bad_value(lineno, key);
      } else if (key == "subdivisions") cfg.surface.subdivisions = parse_int(value, lineno, key);
      else if (key == "radius") cfg.surface.radius = parse_double(value, lineno, key);
      else if (key == "n") cfg.surface.n = parse_int(value, lineno, key);
      else if (key == "m") cfg.surface.m = parse_int(value, lineno, key);
      else if (key == "a") cfg.surface.a = parse_double(value, lineno, key);
      else if (key == "b") cfg.surface.b = parse_double(value, lineno, key);
      else if (key == "rings") cfg.surface.rings = parse_int(value, lineno, key);
      else if (key == "path") cfg.surface.path = value;
      else unknown();
    } else if (section == "bundle") {
      if (key == "euler_number") cfg.euler_number = parse_int(value, lineno, key);
      else if (key == "connection") {
        if (value == "constructed") cfg.connection = ConnectionKind::Constructed;
        else if (value == "levi-civita") cfg.connection = ConnectionKind::LeviCivita;
        else if (value == "file") cfg.connection = ConnectionKind::File;
        else bad_value(lineno, key);
      } else if (key == "path") cfg.connection_path = value;
      else if (key == "fiber_length") cfg.fiber_length = parse_double(value, lineno, key);
      else unknown();
    } else if (section == "solver") {
      SolverParams& sp = cfg.solver;
      if (key == "max_inner_iterations") sp.max_inner_iterations = parse_int(value, lineno, key);
      else if (key == "inner_tolerance") sp.inner_tolerance = parse_double(value, lineno, key);
      else if (key == "line_search_shrink") sp.line_search_shrink = parse_double(value, lineno, key);
      else if (key == "outer_move_budget") sp.outer_move_budget = parse_int(value, lineno, key);
      else if (key == "multistart") sp.multistart = parse_int(value, lineno, key);
      else if (key == "seed") sp.seed = static_cast<uint64_t>(parse_int(value, lineno, key));
      else if (key == "twist_anneal") sp.twist_anneal = parse_list(value, lineno, key);
      else if (key == "refinement_depth") sp.refinement_depth = parse_int(value, lineno, key);
      else unknown();
    } else if (section == "hcone") {
      if (key == "lambdas") cfg.hcone_lambdas = parse_list(value, lineno, key);
      else if (key == "radius") cfg.hcone_radius = parse_double(value, lineno, key);
      else unknown();
    } else if (section == "energy") {
      if (key == "lambdas") cfg.energy_lambdas = parse_list(value, lineno, key);
      else unknown();
    } else if (section == "output") {
      if (key == "directory") cfg.output_directory = value;
      else unknown();
    } else {
      fail(ErrorCode::ParseError, "config line " + std::to_string(lineno) +
                                      ": key outside any section");
    }
  }

  if (!saw_preset)
    fail(ErrorCode::ParseError, "config is missing [surface] preset");
  if (cfg.surface.kind == SurfaceSpec::Kind::File && cfg.surface.path.empty())
    fail(ErrorCode::InvalidArgument, "surface preset 'file' needs a path");
  if (cfg.connection == ConnectionKind::File && cfg.connection_path.empty())
    fail(ErrorCode::InvalidArgument, "connection 'file' needs a path");
  if (cfg.euler_number % 2 != 0)
    fail(ErrorCode::InvalidArgument,
         "euler_number must be even: an odd value admits no section with "
         "integer winding defects");
  if (!(cfg.fiber_length > 0.0))
    fail(ErrorCode::InvalidArgument, "fiber_length must be positive");
  if (cfg.surface.kind == SurfaceSpec::Kind::Icosphere &&
      (cfg.surface.subdivisions < 0 || cfg.surface.subdivisions > 8))
    fail(ErrorCode::InvalidArgument, "subdivisions out of range");
  if (cfg.surface.kind == SurfaceSpec::Kind::FlatTorus &&
      (cfg.surface.n < 2 || cfg.surface.m < 2))
    fail(ErrorCode::InvalidArgument, "flat torus grid must be at least 2x2");
  if (cfg.surface.kind == SurfaceSpec::Kind::Disk && cfg.surface.rings < 1)
    fail(ErrorCode::InvalidArgument, "disk needs at least one ring");
  if (!(cfg.surface.radius > 0.0) || !(cfg.surface.a > 0.0) ||
      !(cfg.surface.b > 0.0))
    fail(ErrorCode::InvalidArgument, "surface dimensions must be positive");
  if (!(cfg.hcone_radius > 0.0))
    fail(ErrorCode::InvalidArgument, "hcone radius must be positive");
  for (size_t i = 0; i < cfg.hcone_lambdas.size(); ++i)
    if (!(cfg.hcone_lambdas[i] >= 1.0) ||
        (i > 0 && !(cfg.hcone_lambdas[i] > cfg.hcone_lambdas[i - 1])))
      fail(ErrorCode::InvalidArgument,
           "hcone lambdas must be increasing and at least 1");
  for (double l : cfg.energy_lambdas)
    if (!(l >= 1.0))
      fail(ErrorCode::InvalidArgument, "energy lambdas must be at least 1");
  if (cfg.output_directory.empty())
    fail(ErrorCode::InvalidArgument, "output directory must be nonempty");
  validate_params(cfg.solver);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file: " + path);
  return parse_config(in);
}

} // namespace minsec
