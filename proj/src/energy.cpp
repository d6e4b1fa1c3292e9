#include "minsec/energy.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "minsec/errors.hpp"
#include "minsec/util.hpp"
#include "refine.hpp"

namespace minsec {

namespace {

double fiber_scale(const DiscreteSection& sec) {
  return sec.conn->fiber_length / kTwoPi;
}

// Value of one face's contribution; optionally accumulates d/dtheta for its
// three corners into grad. Singular faces go through the refined patch, whose
// boundary lift depends on the corner thetas only through the corrected side
// differences: corner c is the head of side c-1 and the tail of side c.
double face_contribution(const DiscreteSection& sec, int f, const Functional& fn,
                         const EvalOptions& opts, double s,
                         Eigen::VectorXd* grad) {
  const SurfaceMesh& mesh = *sec.mesh;
  int k = face_index(sec, f);
  if (k == 0) {
    Eigen::Vector2d g = covariant_gradient(sec, f);
    double q = g.squaredNorm();
    double area = mesh.face_area[f];
    if (grad) {
      double scale = area * fn.ddensity_dq(q, s);
      for (int c = 0; c < 3; ++c)
        (*grad)[mesh.faces[f][c]] += scale * 2.0 * g.dot(mesh.hat_gradient(f, c));
    }
    return area * fn.density(q, s);
  }
  auto d = corrected_differences(sec, f);
  auto patch = detail::evaluate_singular_face(mesh, f, d, k, s,
                                              opts.refinement_depth, fn,
                                              grad != nullptr);
  if (grad)
    for (int c = 0; c < 3; ++c)
      (*grad)[mesh.faces[f][c]] += patch.dvalue[(c + 2) % 3] - patch.dvalue[c];
  return patch.value;
}

} // namespace

std::array<double, 3> corrected_differences(const DiscreteSection& sec, int f) {
  double third = sec.conn->omega[f] / 3.0;
  return {side_difference(sec, f, 0) + third, side_difference(sec, f, 1) + third,
          side_difference(sec, f, 2) + third};
}

Eigen::Vector2d covariant_gradient(const DiscreteSection& sec, int f) {
  auto d = corrected_differences(sec, f);
  // Local potential 0, d0, d0 + d1 at the corners; on an index-0 face the
  // third side closes up exactly.
  return d[0] * sec.mesh->hat_gradient(f, 1) +
         (d[0] + d[1]) * sec.mesh->hat_gradient(f, 2);
}

namespace {

void validate_eval(const Functional& fn, const EvalOptions& opts) {
  if (opts.refinement_depth < 0 || opts.refinement_depth > 10)
    fail(ErrorCode::InvalidArgument, "refinement depth out of range");
  if (fn.kind == Functional::Kind::Twisting && !(fn.epsilon >= 0.0))
    fail(ErrorCode::InvalidArgument, "smoothing width must be nonnegative");
  if (fn.kind == Functional::Kind::Stretched && !(fn.lambda >= 1.0))
    fail(ErrorCode::InvalidArgument, "stretch factor must be >= 1");
}

} // namespace

double energy_value(const DiscreteSection& sec, const Functional& fn,
                    const EvalOptions& opts) {
  validate_eval(fn, opts);
  double s = fiber_scale(sec);
  std::vector<double> contrib;
  contrib.reserve(sec.mesh->face_count());
  for (int f = 0; f < sec.mesh->face_count(); ++f)
    contrib.push_back(face_contribution(sec, f, fn, opts, s, nullptr));
  return pairwise_sum(contrib);
}

double volume(const DiscreteSection& sec, const EvalOptions& opts) {
  return energy_value(sec, Functional::volume(), opts);
}

double twisting(const DiscreteSection& sec, const EvalOptions& opts) {
  return energy_value(sec, Functional::twisting(0.0), opts);
}

double twisting_smoothed(const DiscreteSection& sec, double eps,
                         const EvalOptions& opts) {
  return energy_value(sec, Functional::twisting(eps), opts);
}

double stretched_volume(const DiscreteSection& sec, double lambda,
                        const EvalOptions& opts) {
  if (!(lambda >= 1.0))
    fail(ErrorCode::InvalidArgument, "stretch factor must be >= 1");
  return energy_value(sec, Functional::stretched(lambda), opts);
}

Eigen::VectorXd energy_gradient(const DiscreteSection& sec, const Functional& fn,
                                const EvalOptions& opts) {
  validate_eval(fn, opts);
  double s = fiber_scale(sec);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(sec.mesh->vertex_count());
  for (int f = 0; f < sec.mesh->face_count(); ++f)
    face_contribution(sec, f, fn, opts, s, &grad);
  return grad;
}

EnergyReport evaluate_energies(const DiscreteSection& sec,
                               const std::vector<double>& lambdas,
                               const EvalOptions& opts) {
  EnergyReport rep;
  rep.refinement_depth = opts.refinement_depth;
  rep.volume = volume(sec, opts);
  rep.twisting = twisting(sec, opts);
  for (double lam : lambdas)
    rep.lambda_table.push_back({lam, stretched_volume(sec, lam, opts)});
  double s = fiber_scale(sec);
  rep.gradient_norm = Eigen::VectorXd::Zero(sec.mesh->face_count());
  rep.singular_faces = 0;
  for (int f = 0; f < sec.mesh->face_count(); ++f) {
    if (face_index(sec, f) != 0) {
      ++rep.singular_faces;
    } else {
      rep.gradient_norm[f] = s * covariant_gradient(sec, f).norm();
    }
  }
  return rep;
}

std::vector<ProfilePoint> mass_ratio_profile(const DiscreteSection& sec,
                                             int center_face,
                                             const std::vector<double>& radii,
                                             const EvalOptions& opts) {
  const SurfaceMesh& mesh = *sec.mesh;
  if (center_face < 0 || center_face >= mesh.face_count())
    fail(ErrorCode::InvalidArgument, "center face out of range");
  Eigen::VectorXd dist = vertex_distances_from_face(mesh, center_face);
  double reach = dist.maxCoeff();
  double s = fiber_scale(sec);
  std::vector<double> contrib;
  contrib.reserve(mesh.face_count());
  Functional fn = Functional::volume();
  for (int f = 0; f < mesh.face_count(); ++f)
    contrib.push_back(face_contribution(sec, f, fn, opts, s, nullptr));

  std::vector<ProfilePoint> profile;
  profile.reserve(radii.size());
  for (size_t i = 0; i < radii.size(); ++i) {
    double t = radii[i];
    if (!(t > 0.0))
      fail(ErrorCode::InvalidArgument, "profile radius must be positive");
    if (i > 0 && !(t > radii[i - 1]))
      fail(ErrorCode::InvalidArgument, "profile radii must increase");
    if (t > reach)
      fail(ErrorCode::InvalidArgument, "profile radius exceeds the mesh");
    std::vector<double> parts;
    parts.reserve(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f)
      parts.push_back(contrib[f] * sublevel_area_fraction(mesh, f, dist, t));
    double mass = pairwise_sum(parts);
    profile.push_back({t, mass, mass / t});
  }
  return profile;
}

std::vector<int> regularity_check(const DiscreteSection& sec, double tol,
                                  const EvalOptions& opts) {
  (void)opts;
  double s = fiber_scale(sec);
  std::vector<double> norms;
  std::vector<std::pair<int, double>> per_face;
  for (int f = 0; f < sec.mesh->face_count(); ++f) {
    if (face_index(sec, f) != 0) continue;
    double v = s * covariant_gradient(sec, f).norm();
    norms.push_back(v);
    per_face.push_back({f, v});
  }
  if (norms.empty()) return {};
  std::sort(norms.begin(), norms.end());
  size_t rank = size_t(std::ceil(0.99 * double(norms.size())));
  double p99 = norms[std::min(norms.size() - 1, rank == 0 ? 0 : rank - 1)];
  std::vector<int> flagged;
  for (const auto& fv : per_face)
    if (fv.second > tol * p99) flagged.push_back(fv.first);
  return flagged;
}

} // namespace minsec
