#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "minsec/errors.hpp"

namespace minsec {

// Triangulated surface with an intrinsic metric. 3D positions are kept for
// generation and export; all geometric quantities (areas, corner angles,
// per-face flattenings) are derived from edge lengths alone.
//
// Conventions fixed at construction:
//  - faces are CCW vertex triples; side s of face f runs v[s] -> v[(s+1)%3]
//  - edges are stored canonically as (a, b) with a < b, sorted lexicographically
//  - every face has a 2D orthonormal frame; its first axis points along the
//    canonical direction of the face's lowest-id edge
struct SurfaceMesh {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::array<int, 2>> edges;      // canonical (a<b)
  Eigen::VectorXd edge_length;

  // per-face combinatorics
  std::vector<std::array<int, 3>> face_edges;      // edge id of side s
  std::vector<std::array<int8_t, 3>> face_sign;    // +1 if side s runs a->b
  std::vector<std::array<int, 2>> edge_faces;      // incident faces, -1 if none
  std::vector<std::array<int8_t, 2>> edge_face_side; // side index within face

  // per-face intrinsic geometry
  Eigen::VectorXd face_area;
  std::vector<std::array<double, 3>> face_angle;          // interior angle at corner c
  std::vector<std::array<Eigen::Vector2d, 3>> face_corner2d; // corners in face frame

  // vertex adjacency
  std::vector<std::vector<int>> vertex_faces; // unordered incident faces

  int genus = 0;        // meaningful for closed meshes only
  bool closed = true;

  int vertex_count() const { return static_cast<int>(positions.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  int euler_characteristic() const {
    return vertex_count() - edge_count() + face_count();
  }
  double total_area() const { return face_area.sum(); }

  // edge id for vertex pair, -1 if absent
  int find_edge(int a, int b) const;

  // 2D edge vector of side s in the face frame
  Eigen::Vector2d side_vector(int f, int s) const {
    return face_corner2d[f][(s + 1) % 3] - face_corner2d[f][s];
  }

  // gradient of the linear hat function of corner c, in the face frame
  Eigen::Vector2d hat_gradient(int f, int c) const;

  Eigen::Vector3d face_barycenter(int f) const {
    const auto& t = faces[f];
    return (positions[t[0]] + positions[t[1]] + positions[t[2]]) / 3.0;
  }

  // corner index of vertex v in face f, -1 if absent
  int corner_of(int f, int v) const;
};

struct DiskMesh {
  SurfaceMesh mesh;
  std::vector<int> boundary_loop; // boundary vertices in cyclic CCW order
  int center_vertex = 0;
  double radius = 1.0;
};

// Assemble a mesh from positions and CCW faces, validating manifoldness,
// orientation consistency and the triangle inequality. Edge lengths default to
// Euclidean distances; pass explicit per-canonical-edge lengths to override
// (flat tori). Closed meshes get genus from the Euler characteristic.
SurfaceMesh build_surface_mesh(std::vector<Eigen::Vector3d> positions,
                               std::vector<std::array<int, 3>> faces,
                               bool allow_boundary = false,
                               const std::vector<double>* edge_lengths = nullptr);

SurfaceMesh make_icosphere(int subdivisions, double radius);
SurfaceMesh make_flat_torus(int n, int m, double a, double b);
DiskMesh make_disk(int rings, double radius);

// Text format: header line "V E F", then V position lines "x y z", then F
// face lines "3 i j k" (0-based, CCW). '#' starts a comment. Closed meshes only.
SurfaceMesh load_mesh(std::istream& in);
SurfaceMesh load_mesh_file(const std::string& path);
void save_mesh(const SurfaceMesh& mesh, std::ostream& out);

// First-order fast-marching geodesic distance to every vertex, grown from the
// given per-vertex seed values (vertex id, starting distance). Unseeded
// vertices start at infinity.
Eigen::VectorXd vertex_distances_from_seeds(
    const SurfaceMesh& mesh, const std::vector<std::pair<int, double>>& seeds);

// Distance field centered on the barycenter of face f: the face corners are
// seeded with their in-plane offsets and the front marches outward.
Eigen::VectorXd vertex_distances_from_face(const SurfaceMesh& mesh, int f);

// Fraction of face f's area on which the linear interpolant of the vertex
// values d is <= t.
double sublevel_area_fraction(const SurfaceMesh& mesh, int f,
                              const Eigen::VectorXd& d, double t);

} // namespace minsec
