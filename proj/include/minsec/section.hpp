#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "minsec/bundle.hpp"
#include "minsec/mesh.hpp"

namespace minsec {

// Circle-valued section sampled at vertices: theta_v in [0, 2pi) in vertex v's
// fiber coordinate. The referenced mesh and connection must outlive it.
struct DiscreteSection {
  const SurfaceMesh* mesh = nullptr;
  const Connection* conn = nullptr;
  Eigen::VectorXd theta;

  static DiscreteSection make(const Connection& conn, Eigen::VectorXd theta);
};

// wrap(theta_j - theta_i - rho_ij); the covariant difference along i->j
double edge_difference(const DiscreteSection& sec, int i, int j);

// covariant difference along side s of face f (CCW direction)
inline double side_difference(const DiscreteSection& sec, int f, int s) {
  const SurfaceMesh& m = *sec.mesh;
  int i = m.faces[f][s], j = m.faces[f][(s + 1) % 3];
  return wrap_angle(sec.theta[j] - sec.theta[i] -
                    sec.conn->rho_side(f, s));
}

// round((sum of side differences + omega_f) / 2pi); integer by construction
int face_index(const DiscreteSection& sec, int f);

// sum of face_index over all faces; equals the euler number for any theta
int total_index(const DiscreteSection& sec);

// One singularity: a vertex-connected component of faces with nonzero index.
// A single triangle cannot wind more than once between its own vertices, so
// higher indices always occupy such clusters.
struct SingularityRecord {
  int face = -1;          // lowest face id in the component
  int index = 0;          // component index sum
  Eigen::Vector3d position = Eigen::Vector3d::Zero(); // area-weighted barycenter
  std::vector<int> member_faces; // all component faces, ascending
};

std::vector<SingularityRecord> singular_faces(const DiscreteSection& sec);

// Winding of the section along a closed simple vertex loop, counted via the
// faces on the loop's left; equals the sum of enclosed face indices.
int boundary_degree(const DiscreteSection& sec, const std::vector<int>& loop);

// Minimum dual-graph (shared-edge) hops between two face sets.
int face_cluster_separation(const SurfaceMesh& mesh,
                            const std::vector<int>& faces_a,
                            const std::vector<int>& faces_b);

// CSV "vertex_id,theta"
void save_section(const DiscreteSection& sec, std::ostream& out);
DiscreteSection load_section(const Connection& conn, std::istream& in);

} // namespace minsec
