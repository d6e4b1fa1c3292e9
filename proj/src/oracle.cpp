#include "minsec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Geometry>

#include "minsec/energy.hpp"
#include "minsec/errors.hpp"

namespace minsec {
namespace {

// 5-point Gauss-Legendre nodes and weights on [-1, 1]
constexpr double kGaussX[5] = {-0.906179845938663992797626878299,
                              -0.538469310105683091036314420700, 0.0,
                              0.538469310105683091036314420700,
                              0.906179845938663992797626878299};
constexpr double kGaussW[5] = {0.236926885056189087514264040720,
                              0.478628670499366468041291514836,
                              0.568888888888888888888888888889,
                              0.478628670499366468041291514836,
                              0.236926885056189087514264040720};

template <class F>
double integrate(F&& f, double a, double b, int panels = 64) {
  double h = (b - a) / panels;
  std::vector<double> parts;
  parts.reserve(static_cast<size_t>(panels) * 5);
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h, mid = lo + 0.5 * h;
    for (int g = 0; g < 5; ++g)
      parts.push_back(0.5 * h * kGaussW[g] * f(mid + 0.5 * h * kGaussX[g]));
  }
  return pairwise_sum(parts);
}

std::string format_detail(const char* fmt, double x, double y) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, x, y);
  return buf;
}

} // namespace

DiscreteSection pontryagin_section(const Connection& conn, int base_vertex) {
  const SurfaceMesh& mesh = *conn.mesh;
  if (!mesh.closed || mesh.genus != 0)
    fail(ErrorCode::InvalidArgument,
         "transported-frame section needs a closed genus-0 mesh");
  if (conn.euler != 2)
    fail(ErrorCode::InvalidArgument,
         "transported-frame section needs euler number 2");
  if (base_vertex < 0 || base_vertex >= mesh.vertex_count())
    fail(ErrorCode::InvalidArgument, "base vertex out of range");

  int nv = mesh.vertex_count();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : mesh.positions) center += p;
  center /= nv;
  double radius = 0.0;
  for (const Eigen::Vector3d& p : mesh.positions)
    radius += (p - center).norm();
  radius /= nv;
  for (const Eigen::Vector3d& p : mesh.positions)
    if (std::abs((p - center).norm() - radius) > 1e-6 * radius)
      fail(ErrorCode::InvalidArgument,
           "transported-frame section needs vertices on a common round sphere");

  // reference tangent at the base: toward its lowest-id neighbor. Each
  // vertex's value is the parallel transport of that tangent along the great
  // circle (longitude) from the base, read off in the vertex's cone frame;
  // composing per-edge transports along vertex paths is not an option, since
  // neighboring tree paths can split macroscopically and the curvature of the
  // lune between them puts O(1) seam jumps into the section.
  Eigen::Vector3d phat = (mesh.positions[base_vertex] - center) / radius;
  int ref_nbr = -1;
  for (int f : mesh.vertex_faces[base_vertex])
    for (int c = 0; c < 3; ++c) {
      int u = mesh.faces[f][c];
      if (u != base_vertex && (ref_nbr < 0 || u < ref_nbr)) ref_nbr = u;
    }
  Eigen::Vector3d e0 = mesh.positions[ref_nbr] - mesh.positions[base_vertex];
  Eigen::Vector3d t0 = (e0 - e0.dot(phat) * phat).normalized();

  Eigen::VectorXd theta(nv);
  for (int v = 0; v < nv; ++v) {
    Eigen::Vector3d vhat = (mesh.positions[v] - center) / radius;
    Eigen::Vector3d axis = phat.cross(vhat);
    double s = axis.norm(), c = phat.dot(vhat);
    Eigen::Vector3d t;
    if (s < 1e-12) {
      t = t0; // at the base or its antipode t0 is still tangent
    } else {
      axis /= s;
      t = t0 * c + axis.cross(t0) * s + axis * (axis.dot(t0) * (1.0 - c));
    }
    theta[v] = vertex_cone_angle(mesh, v, t);
  }
  return DiscreteSection::make(conn, std::move(theta));
}

ConeEnergies cone_closed_forms(int k, double R) {
  if (!(R > 0.0)) fail(ErrorCode::InvalidArgument, "cone radius must be positive");
  if (k == 0) return {kPi * R * R, 0.0};
  double ak = std::abs(static_cast<double>(k));
  double s = std::sqrt(R * R + ak * ak);
  double volume = kPi * (R * s + ak * ak * std::log((R + s) / ak));
  return {volume, kTwoPi * ak * R};
}

DiscreteSection cone_section(const Connection& conn, int k) {
  const SurfaceMesh& mesh = *conn.mesh;
  int nv = mesh.vertex_count();
  double scale = 0.0;
  for (int v = 0; v < nv; ++v)
    scale = std::max(scale, mesh.positions[v].head<2>().norm());
  Eigen::VectorXd theta(nv);
  for (int v = 0; v < nv; ++v) {
    const Eigen::Vector3d& p = mesh.positions[v];
    // on the axis the polar angle is undefined; a half-step value keeps the
    // covariant differences to the first ring away from the wrap boundary
    theta[v] = p.head<2>().norm() < 1e-12 * scale ? 0.5 * k
                                                  : k * std::atan2(p.y(), p.x());
  }
  return DiscreteSection::make(conn, std::move(theta));
}

double quad_cone_volume(int k, double R) {
  if (!(R > 0.0)) fail(ErrorCode::InvalidArgument, "cone radius must be positive");
  double kk = static_cast<double>(k) * k;
  return integrate(
      [kk](double r) { return kTwoPi * std::sqrt(r * r + kk); }, 0.0, R);
}

double quad_cone_twisting(int k, double R) {
  if (!(R > 0.0)) fail(ErrorCode::InvalidArgument, "cone radius must be positive");
  double ak = std::abs(static_cast<double>(k));
  return integrate([ak](double) { return kTwoPi * ak; }, 0.0, R);
}

double quad_sphere_section_volume() {
  // gradient magnitude of the transported frame at polar angle phi is
  // tan(phi/2), so the mass density on the unit sphere is
  // sqrt(1 + tan^2(phi/2)) = 1/cos(phi/2)
  return integrate(
      [](double phi) { return kTwoPi * std::sin(phi) / std::cos(0.5 * phi); },
      0.0, kPi);
}

std::vector<OracleResult> verify_all_oracles(double quad_tol) {
  if (!(quad_tol > 0.0))
    fail(ErrorCode::InvalidArgument, "oracle tolerance must be positive");
  std::vector<OracleResult> out;

  { // sphere: transported-frame section mass against 8 pi
    OracleResult r;
    r.name = "pontryagin-volume";
    r.analytic = 8.0 * kPi;
    r.quadrature = quad_sphere_section_volume();

    double err[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      SurfaceMesh mesh = make_icosphere(3 + i, 1.0);
      Connection conn = levi_civita_connection(mesh);
      DiscreteSection sec = pontryagin_section(conn, 0);
      double v = volume(sec);
      err[i] = std::abs(v - r.analytic);
      if (i == 2) r.discrete = v;
    }
    r.order = err[2] > 0.0 ? std::log2(err[1] / err[2]) : 99.0;
    bool quad_ok = std::abs(r.quadrature - r.analytic) <= quad_tol;
    bool disc_ok = std::abs(r.discrete - r.analytic) <= 0.02 * r.analytic;
    r.pass = quad_ok && disc_ok;
    r.detail = format_detail("icosphere(5) rel err %.2e, quad abs diff %.2e",
                             std::abs(r.discrete - r.analytic) / r.analytic,
                             std::abs(r.quadrature - r.analytic));
    out.push_back(std::move(r));
  }

  { // flat cone, k = 2, R = 1: volume and twisting with mesh refinement
    ConeEnergies cf = cone_closed_forms(2, 1.0);
    double vol[3] = {0, 0, 0}, twi[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
      DiskMesh disk = make_disk(16 << i, 1.0);
      Connection conn = make_connection(disk.mesh, 0);
      DiscreteSection sec = cone_section(conn, 2);
      vol[i] = volume(sec);
      twi[i] = twisting(sec);
    }

    auto cone_result = [&](const char* name, double analytic, double quad,
                           const double* v) {
      OracleResult r;
      r.name = name;
      r.analytic = analytic;
      r.quadrature = quad;
      r.discrete = v[1]; // rings = 32 is the documented check mesh
      double e16 = std::abs(v[0] - analytic), e32 = std::abs(v[1] - analytic),
             e64 = std::abs(v[2] - analytic);
      r.order = e64 > 0.0 ? std::log2(e32 / e64) : 99.0;
      bool quad_ok = std::abs(quad - analytic) <= quad_tol;
      bool disc_ok = e16 <= 0.01 * analytic && e32 <= 0.01 * analytic &&
                     e64 <= 0.01 * analytic;
      r.pass = quad_ok && disc_ok && r.order >= 1.0;
      r.detail = format_detail("rings(32) rel err %.2e, order %.2f",
                               e32 / analytic, r.order);
      return r;
    };
    out.push_back(cone_result("cone-volume", cf.volume,
                              quad_cone_volume(2, 1.0), vol));
    out.push_back(cone_result("cone-twisting", cf.twisting,
                              quad_cone_twisting(2, 1.0), twi));
  }

  return out;
}

} // namespace minsec
