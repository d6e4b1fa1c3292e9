#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "minsec/solver.hpp"

namespace minsec {

// Surface preset selected by [surface] preset = ...
struct SurfaceSpec {
  enum class Kind { Icosphere, FlatTorus, Disk, File };
  Kind kind = Kind::Icosphere;
  int subdivisions = 3;   // icosphere
  double radius = 1.0;    // icosphere, disk
  int n = 16, m = 16;     // flat torus grid
  double a = 1.0, b = 1.0; // flat torus periods
  int rings = 16;         // disk
  std::string path;       // file
};

enum class ConnectionKind { Constructed, LeviCivita, File };

struct RunConfig {
  SurfaceSpec surface;
  int euler_number = 0;
  ConnectionKind connection = ConnectionKind::Constructed;
  std::string connection_path;
  double fiber_length = kTwoPi;
  SolverParams solver;
  std::vector<double> hcone_lambdas = {2.0, 4.0, 8.0};
  double hcone_radius = 0.5;
  std::vector<double> energy_lambdas = {10.0, 100.0, 1000.0};
  std::string output_directory = "out";
};

// INI-style file: [section] headers, key = value lines, '#' comments.
// Unknown sections or keys are errors, as are malformed values.
RunConfig parse_config(std::istream& in);
RunConfig load_config_file(const std::string& path);

} // namespace minsec
