#pragma once

#include <array>

#include <Eigen/Core>

#include "minsec/energy.hpp"
#include "minsec/mesh.hpp"

namespace minsec::detail {

// Integral of the functional density over one singular face, computed on a
// midpoint-subdivided patch carrying a piecewise linear lift with prescribed
// boundary values. d holds the corrected side differences (summing to 2pi k),
// k the face index. When want_gradient is set, dvalue holds the exact
// derivative of value with respect to (d[0], d[1], d[2]), obtained by an
// adjoint solve against the patch Laplacian.
struct PatchEval {
  double value = 0.0;
  Eigen::Vector3d dvalue = Eigen::Vector3d::Zero();
};

PatchEval evaluate_singular_face(const SurfaceMesh& mesh, int f,
                                 const std::array<double, 3>& d, int k,
                                 double fiber_scale, int depth,
                                 const Functional& fn, bool want_gradient);

} // namespace minsec::detail
