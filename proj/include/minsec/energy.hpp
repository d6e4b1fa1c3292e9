#pragma once

#include <vector>

#include <Eigen/Core>

#include "minsec/section.hpp"

namespace minsec {

// Integrand family over the squared covariant gradient q = |grad theta|^2,
// with fiber scale s = L / 2pi:
//   volume     sqrt(1 + s^2 q)
//   twisting   sqrt(eps^2 + s^2 q)   (eps = 0 gives the exact total variation)
//   stretched  sqrt(1/lambda^2 + s^2 q)
struct Functional {
  enum class Kind { Volume, Twisting, Stretched };
  Kind kind = Kind::Volume;
  double lambda = 1.0;
  double epsilon = 0.0;

  static Functional volume() { return {}; }
  static Functional twisting(double eps = 0.0) {
    return {Kind::Twisting, 1.0, eps};
  }
  static Functional stretched(double lam) { return {Kind::Stretched, lam, 0.0}; }

  double offset() const {
    switch (kind) {
      case Kind::Volume: return 1.0;
      case Kind::Twisting: return epsilon * epsilon;
      case Kind::Stretched: return 1.0 / (lambda * lambda);
    }
    return 1.0;
  }
  double density(double q, double s) const {
    return std::sqrt(offset() + s * s * q);
  }
  double ddensity_dq(double q, double s) const {
    double d = density(q, s);
    return d > 0.0 ? s * s / (2.0 * d) : 0.0;
  }
};

struct EvalOptions {
  int refinement_depth = 4; // midpoint subdivision depth on singular faces
};

// Covariant gradient of theta on an index-0 face, a 2-vector in the face
// frame. The face's curvature share is spread evenly over its three sides, so
// the three side differences are reproduced exactly.
Eigen::Vector2d covariant_gradient(const DiscreteSection& sec, int f);

// Corrected side differences d_s = side_difference + omega_f / 3; they sum to
// 2pi times the face index.
std::array<double, 3> corrected_differences(const DiscreteSection& sec, int f);

double volume(const DiscreteSection& sec, const EvalOptions& opts = {});
double twisting(const DiscreteSection& sec, const EvalOptions& opts = {});
double twisting_smoothed(const DiscreteSection& sec, double eps,
                         const EvalOptions& opts = {});
double stretched_volume(const DiscreteSection& sec, double lambda,
                        const EvalOptions& opts = {});
double energy_value(const DiscreteSection& sec, const Functional& fn,
                    const EvalOptions& opts = {});

// Exact derivative of the discretized functional with respect to each
// theta_v, differentiating through the refined stencils on singular faces.
Eigen::VectorXd energy_gradient(const DiscreteSection& sec, const Functional& fn,
                                const EvalOptions& opts = {});

struct LambdaEntry {
  double lambda = 1.0;
  double value = 0.0;
};

struct EnergyReport {
  double volume = 0.0;
  double twisting = 0.0;
  std::vector<LambdaEntry> lambda_table;
  int singular_faces = 0;    // faces with nonzero index
  int refinement_depth = 0;
  Eigen::VectorXd gradient_norm; // per-face s*|grad|, zero on singular faces
};

EnergyReport evaluate_energies(const DiscreteSection& sec,
                               const std::vector<double>& lambdas,
                               const EvalOptions& opts = {});

struct ProfilePoint {
  double t = 0.0;
  double mass = 0.0;
  double ratio = 0.0; // mass / t
};

// Volume restricted to the intrinsic ball of radius t about the center face's
// barycenter, faces pro-rated by the area fraction of the sublevel set of the
// linearly interpolated distance.
std::vector<ProfilePoint> mass_ratio_profile(const DiscreteSection& sec,
                                             int center_face,
                                             const std::vector<double>& radii,
                                             const EvalOptions& opts = {});

// Index-0 faces whose s*|grad| exceeds tol times the 99th percentile of the
// gradient-norm field.
std::vector<int> regularity_check(const DiscreteSection& sec, double tol = 3.0,
                                  const EvalOptions& opts = {});

} // namespace minsec
