#pragma once

#include <string>
#include <vector>

#include "minsec/section.hpp"

namespace minsec {

// Fiber angle at each vertex obtained by transporting a reference angle from
// the base vertex along shortest paths (parents resolved by lowest id). The
// connection must be the metric one on a closed genus-0 surface; the result
// carries total index 2 concentrated opposite the base vertex.
DiscreteSection pontryagin_section(const Connection& conn, int base_vertex);

struct ConeEnergies {
  double volume = 0.0;
  double twisting = 0.0;
};

// Closed forms for the k-winding cone section over a flat disk of radius R
// with unit fiber scale:
//   volume    pi * (R sqrt(R^2+k^2) + k^2 ln((R + sqrt(R^2+k^2)) / |k|)),
//             pi R^2 for k = 0
//   twisting  2 pi |k| R
ConeEnergies cone_closed_forms(int k, double R);

// Section theta = k * (polar angle of the vertex position) on a disk mesh
// centered at the origin of the xy plane.
DiscreteSection cone_section(const Connection& conn, int k);

// Independent composite Gauss-Legendre quadratures of the same masses.
double quad_cone_volume(int k, double R);
double quad_cone_twisting(int k, double R);
// Mass of the transported-frame section over the round sphere, integrating
// sqrt(1 + |grad|^2) with |grad| = tan(phi/2); the target is 8 pi.
double quad_sphere_section_volume();

struct OracleResult {
  std::string name;
  double analytic = 0.0;
  double quadrature = 0.0;
  double discrete = 0.0; // on the finest check mesh
  double order = 0.0;    // measured convergence order
  bool pass = false;
  std::string detail;
};

// Runs every oracle: quadrature must match the closed form within quad_tol
// (absolute), discrete values must land within the documented mesh
// tolerances, and cone discretizations must converge with order >= 1.
std::vector<OracleResult> verify_all_oracles(double quad_tol = 1e-8);

} // namespace minsec
