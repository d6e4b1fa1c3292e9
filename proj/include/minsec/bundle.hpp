#pragma once

#include <iosfwd>

#include <Eigen/Core>

#include "minsec/mesh.hpp"
#include "minsec/util.hpp"

namespace minsec {

// Discrete circle-bundle connection: a rotation rho_ij per oriented edge
// (rho stored for the canonical a->b direction, rho_ji = -rho_ij exactly),
// plus a per-face curvature representative omega_f with
//   omega_f === sum_{CCW boundary of f} rho_ij  (mod 2pi)
// and euler = round(sum omega / 2pi). The real-valued omega (not just its
// fold) is part of the data: it fixes how face winding numbers are counted.
struct Connection {
  const SurfaceMesh* mesh = nullptr;
  Eigen::VectorXd rho;    // per canonical edge
  Eigen::VectorXd omega;  // per face
  int euler = 0;
  double fiber_length = kTwoPi;

  // rho along side s of face f (CCW direction)
  double rho_side(int f, int s) const {
    return mesh->face_sign[f][s] * rho[mesh->face_edges[f][s]];
  }
  // rho for the directed edge i->j; the edge must exist
  double rho_dir(int i, int j) const;

  // sum of rho around the CCW boundary of face f
  double holonomy(int f) const {
    return rho_side(f, 0) + rho_side(f, 1) + rho_side(f, 2);
  }
};

// Connection with curvature spread proportionally to face area summing to
// 2*pi*e, realized mod 2pi by the minimum-norm rho (the integer holonomy
// defects forced by e != 0 pass invisibly through wrap()). e must be even.
Connection make_connection(const SurfaceMesh& mesh, int e,
                           double fiber_length = kTwoPi);

// Intrinsic parallel transport between normalized vertex tangent cones;
// curvature is the angle defect distributed to faces by corner angles and
// euler equals the Euler characteristic. Closed meshes only.
Connection levi_civita_connection(const SurfaceMesh& mesh,
                                  double fiber_length = kTwoPi);

// Normalized tangent-cone coordinate in [0, 2pi) at vertex v of an embedded
// direction d: d is projected into each incident-face wedge and read off in
// the same cone layout that underlies levi_civita_connection, so angles here
// compose with its rho. Closed meshes only.
double vertex_cone_angle(const SurfaceMesh& mesh, int v,
                         const Eigen::Vector3d& d);

// Recompute round(sum omega / 2pi), validating the representative invariants.
int euler_number(const Connection& conn);

// Check omega against rho mod 2pi, the euler sum, and antisymmetry bookkeeping.
void validate_connection(const Connection& conn, double tol = 1e-6);

// rho'_ij = rho_ij + phi_j - phi_i; omega and euler are unchanged.
Connection gauge_transformed(const Connection& conn, const Eigen::VectorXd& phi);

// CSV "edge_i,edge_j,rho" with header comment "# e=<int> L=<float>".
// Loading recomputes omega by folding the per-face holonomy.
void save_connection(const Connection& conn, std::ostream& out);
Connection load_connection(const SurfaceMesh& mesh, std::istream& in);

// Minimum-norm solve of (curl rho)_f = b_f over edges; requires sum(b) = 0 on
// closed meshes. Shared by make_connection and the solver's initializer.
Eigen::VectorXd solve_min_norm_curl(const SurfaceMesh& mesh,
                                    const Eigen::VectorXd& b);

} // namespace minsec
