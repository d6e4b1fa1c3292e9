#include "refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "minsec/errors.hpp"
#include "minsec/util.hpp"

namespace minsec::detail {
namespace {

double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.x() * v.y() - u.y() * v.x();
}

Eigen::Vector2d rot90(const Eigen::Vector2d& v) {
  return Eigen::Vector2d(-v.y(), v.x());
}

// Gradients of the three hat functions on a CCW 2D triangle.
std::array<Eigen::Vector2d, 3> hat_gradients2(const Eigen::Vector2d& a,
                                              const Eigen::Vector2d& b,
                                              const Eigen::Vector2d& c) {
  double twoA = cross2(b - a, c - a);
  return {rot90(c - b) / twoA, rot90(a - c) / twoA, rot90(b - a) / twoA};
}

double cot_between(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.dot(v) / std::abs(cross2(u, v));
}

// Least-squares gradient operator: rows of M are the CCW edge vectors, P maps
// the three side differences to the best-fit constant gradient.
Eigen::Matrix<double, 2, 3> ls_operator(const Eigen::Vector2d& eab,
                                        const Eigen::Vector2d& ebc,
                                        const Eigen::Vector2d& eca) {
  Eigen::Matrix<double, 3, 2> M;
  M.row(0) = eab.transpose();
  M.row(1) = ebc.transpose();
  M.row(2) = eca.transpose();
  Eigen::Matrix2d MtM = M.transpose() * M;
  return MtM.inverse() * M.transpose();
}

struct Cell {
  int a, b, c; // vertex ids, CCW
  bool up;
};

} // namespace

PatchEval evaluate_singular_face(const SurfaceMesh& mesh, int f,
                                 const std::array<double, 3>& d, int k,
                                 double fiber_scale, int depth,
                                 const Functional& fn, bool want_gradient) {
  if (depth < 0 || depth > 10)
    fail(ErrorCode::InvalidArgument, "refinement depth out of range");
  const int n = 1 << depth;

  const Eigen::Vector2d p0 = mesh.face_corner2d[f][0];
  const Eigen::Vector2d p1 = mesh.face_corner2d[f][1];
  const Eigen::Vector2d p2 = mesh.face_corner2d[f][2];
  const Eigen::Vector2d e1 = (p1 - p0) / n;
  const Eigen::Vector2d e2 = (p2 - p0) / n;
  const double cell_area = 0.5 * cross2(e1, e2);
  if (!(cell_area > 0.0))
    fail(ErrorCode::Inconsistency, "degenerate face frame");

  // Lattice over the reference triangle: row j holds i = 0..n-j.
  std::vector<int> row_start(n + 1);
  int nv = 0;
  for (int j = 0; j <= n; ++j) {
    row_start[j] = nv;
    nv += n + 1 - j;
  }
  auto vid = [&](int i, int j) { return row_start[j] + i; };
  auto pos = [&](int i, int j) -> Eigen::Vector2d {
    return p0 + double(i) * e1 + double(j) * e2;
  };
  auto on_boundary = [&](int i, int j) { return j == 0 || i == 0 || i + j == n; };

  // Boundary lift: accumulate d0 along the bottom, d1 along the hypotenuse,
  // d2 along the left side; the 2pi*k jump is cut at corner 0.
  std::vector<double> tau(nv, 0.0);
  std::vector<char> is_bnd(nv, 0);
  std::vector<Eigen::Vector3d> coef(nv, Eigen::Vector3d::Zero());
  for (int i = 0; i <= n; ++i) {
    int v = vid(i, 0);
    double t = double(i) / n;
    tau[v] = t * d[0];
    coef[v] = Eigen::Vector3d(t, 0.0, 0.0);
    is_bnd[v] = 1;
  }
  for (int j = 1; j <= n; ++j) {
    int v = vid(n - j, j);
    double t = double(j) / n;
    tau[v] = d[0] + t * d[1];
    coef[v] = Eigen::Vector3d(1.0, t, 0.0);
    is_bnd[v] = 1;
  }
  for (int j = n - 1; j >= 1; --j) {
    int v = vid(0, j);
    double t = double(n - j) / n;
    tau[v] = d[0] + d[1] + t * d[2];
    coef[v] = Eigen::Vector3d(1.0, 1.0, t);
    is_bnd[v] = 1;
  }

  // Interior / boundary index split, in lattice order.
  std::vector<int> idx(nv, -1);
  std::vector<int> interior, boundary;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n - j; ++i) {
      int v = vid(i, j);
      if (on_boundary(i, j)) {
        idx[v] = int(boundary.size());
        boundary.push_back(v);
      } else {
        idx[v] = int(interior.size());
        interior.push_back(v);
      }
    }
  const int ni = int(interior.size());
  const int nb = int(boundary.size());

  // Cells and the two congruent shapes.
  std::vector<Cell> cells;
  cells.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n - j; ++i) {
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i, j + 1), true});
      if (i + j < n - 1)
        cells.push_back({vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1), false});
    }

  const Eigen::Vector2d z(0.0, 0.0);
  auto gu = hat_gradients2(z, e1, e2);
  auto gd = hat_gradients2(z, e2, e2 - e1);
  auto pu = ls_operator(e1, e2 - e1, -e2);
  auto pd = ls_operator(e2, -e1, e1 - e2);
  const double cu0 = cot_between(e1, e2);
  const double cu1 = cot_between(-e1, e2 - e1);
  const double cu2 = cot_between(-e2, e1 - e2);
  const double cd0 = cot_between(e2, e2 - e1);
  const double cd1 = cot_between(-e1, -e2);
  const double cd2 = cot_between(e1 - e2, e1);

  // Cotan weights on lattice edges (keyed with the smaller id first).
  std::map<std::pair<int, int>, double> weight;
  auto add_w = [&](int u, int v, double w) {
    if (u > v) std::swap(u, v);
    weight[{u, v}] += w;
  };
  for (const Cell& c : cells) {
    double wa = 0.5 * (c.up ? cu0 : cd0);
    double wb = 0.5 * (c.up ? cu1 : cd1);
    double wc = 0.5 * (c.up ? cu2 : cd2);
    add_w(c.b, c.c, wa);
    add_w(c.c, c.a, wb);
    add_w(c.a, c.b, wc);
  }

  struct WEdge {
    int u, v;
    double w;
  };
  std::vector<WEdge> edges;
  edges.reserve(weight.size());
  for (const auto& kv : weight) edges.push_back({kv.first.first, kv.first.second, kv.second});

  std::vector<Eigen::Triplet<double>> tii, tib;
  for (const WEdge& e : edges) {
    bool bu = is_bnd[e.u], bv = is_bnd[e.v];
    if (!bu) tii.emplace_back(idx[e.u], idx[e.u], e.w);
    if (!bv) tii.emplace_back(idx[e.v], idx[e.v], e.w);
    if (!bu && !bv) {
      tii.emplace_back(idx[e.u], idx[e.v], -e.w);
      tii.emplace_back(idx[e.v], idx[e.u], -e.w);
    } else if (!bu && bv) {
      tib.emplace_back(idx[e.u], idx[e.v], -e.w);
    } else if (bu && !bv) {
      tib.emplace_back(idx[e.v], idx[e.u], -e.w);
    }
  }
  Eigen::SparseMatrix<double> Aii(ni, ni), Aib(ni, nb);
  Aii.setFromTriplets(tii.begin(), tii.end());
  Aib.setFromTriplets(tib.begin(), tib.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol;
  if (ni > 0) {
    chol.compute(Aii);
    if (chol.info() != Eigen::Success)
      fail(ErrorCode::Inconsistency, "patch Laplacian factorization failed");
  }

  Eigen::VectorXd tau_b(nb);
  for (int b = 0; b < nb; ++b) tau_b[b] = tau[boundary[b]];

  if (ni > 0) {
    // Initial guess: k-fold cone angle about the barycenter plus the harmonic
    // extension of the boundary residual, accumulated along the CCW walk so
    // the residual is single valued.
    const Eigen::Vector2d bary = (p0 + p1 + p2) / 3.0;
    auto angle_at = [&](int v) {
      int j = 0;
      while (j + 1 <= n && row_start[j + 1] <= v) ++j;
      int i = v - row_start[j];
      Eigen::Vector2d q = pos(i, j) - bary;
      return std::atan2(q.y(), q.x());
    };
    std::vector<int> walk;
    for (int i = 0; i <= n; ++i) walk.push_back(vid(i, 0));
    for (int j = 1; j <= n; ++j) walk.push_back(vid(n - j, j));
    for (int j = n - 1; j >= 1; --j) walk.push_back(vid(0, j));
    Eigen::VectorXd beta(nb);
    double lift = angle_at(walk[0]);
    double prev = lift;
    beta[idx[walk[0]]] = tau[walk[0]] - k * lift;
    for (size_t t = 1; t < walk.size(); ++t) {
      double a = angle_at(walk[t]);
      lift += wrap_angle(a - prev);
      prev = a;
      beta[idx[walk[t]]] = tau[walk[t]] - k * lift;
    }
    Eigen::VectorXd h = chol.solve(-(Aib * beta));
    for (int iI = 0; iI < ni; ++iI) {
      int v = interior[iI];
      tau[v] = k * angle_at(v) + h[iI];
    }

    // Wrapped Dirichlet descent: freeze the per-edge integer offsets, solve
    // the resulting quadratic exactly, recompute offsets, repeat. Each solve
    // cannot increase the wrapped energy, so the loop is monotone.
    auto offsets_of = [&](const std::vector<double>& t) {
      std::vector<double> off(edges.size());
      for (size_t e = 0; e < edges.size(); ++e) {
        double diff = t[edges[e].u] - t[edges[e].v];
        off[e] = diff - wrap_angle(diff);
      }
      return off;
    };
    auto wrapped_energy = [&](const std::vector<double>& t) {
      double s = 0.0;
      for (const WEdge& e : edges) {
        double w = wrap_angle(t[e.u] - t[e.v]);
        s += 0.5 * e.w * w * w;
      }
      return s;
    };
    std::vector<double> off = offsets_of(tau);
    double energy = wrapped_energy(tau);
    for (int iter = 0; iter < 40; ++iter) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
      for (size_t e = 0; e < edges.size(); ++e) {
        if (!is_bnd[edges[e].u]) rhs[idx[edges[e].u]] += edges[e].w * off[e];
        if (!is_bnd[edges[e].v]) rhs[idx[edges[e].v]] -= edges[e].w * off[e];
      }
      Eigen::VectorXd ti = chol.solve(rhs - Aib * tau_b);
      std::vector<double> cand = tau;
      for (int iI = 0; iI < ni; ++iI) cand[interior[iI]] = ti[iI];
      double cand_energy = wrapped_energy(cand);
      if (cand_energy > energy + 1e-10 * (1.0 + std::abs(energy))) break;
      std::vector<double> cand_off = offsets_of(cand);
      bool stable = (cand_off == off);
      tau = cand;
      energy = cand_energy;
      off = cand_off;
      if (stable) break;
    }
  }

  // Integrate the density cell by cell; cells that still wind get the
  // least-squares gradient, the rest the exact linear one.
  const double s = fiber_scale;
  PatchEval out;
  std::vector<double> contrib;
  contrib.reserve(cells.size());
  Eigen::VectorXd dF_dtau = Eigen::VectorXd::Zero(nv);
  for (const Cell& c : cells) {
    double u01 = wrap_angle(tau[c.b] - tau[c.a]);
    double u12 = wrap_angle(tau[c.c] - tau[c.b]);
    double u20 = wrap_angle(tau[c.a] - tau[c.c]);
    long m = std::lround((u01 + u12 + u20) / kTwoPi);
    const auto& G = c.up ? gu : gd;
    Eigen::Vector2d g;
    Eigen::Vector3d dq_dtau = Eigen::Vector3d::Zero();
    if (m == 0) {
      g = u01 * G[1] + (u01 + u12) * G[2];
      if (want_gradient)
        for (int x = 0; x < 3; ++x) dq_dtau[x] = 2.0 * g.dot(G[x]);
    } else {
      const auto& P = c.up ? pu : pd;
      Eigen::Vector3d u(u01, u12, u20);
      g = P * u;
      if (want_gradient) {
        Eigen::Vector3d dq_du = 2.0 * (P.transpose() * g);
        dq_dtau[0] = -dq_du[0] + dq_du[2];
        dq_dtau[1] = dq_du[0] - dq_du[1];
        dq_dtau[2] = dq_du[1] - dq_du[2];
      }
    }
    double q = g.squaredNorm();
    contrib.push_back(cell_area * fn.density(q, s));
    if (want_gradient) {
      double scale = cell_area * fn.ddensity_dq(q, s);
      dF_dtau[c.a] += scale * dq_dtau[0];
      dF_dtau[c.b] += scale * dq_dtau[1];
      dF_dtau[c.c] += scale * dq_dtau[2];
    }
  }
  out.value = pairwise_sum(contrib);

  if (want_gradient) {
    Eigen::VectorXd dF_dtaub(nb);
    for (int b = 0; b < nb; ++b) dF_dtaub[b] = dF_dtau[boundary[b]];
    if (ni > 0) {
      Eigen::VectorXd dF_dtaui(ni);
      for (int iI = 0; iI < ni; ++iI) dF_dtaui[iI] = dF_dtau[interior[iI]];
      Eigen::VectorXd mu = chol.solve(dF_dtaui);
      dF_dtaub -= Aib.transpose() * mu;
    }
    out.dvalue.setZero();
    for (int b = 0; b < nb; ++b) out.dvalue += dF_dtaub[b] * coef[boundary[b]];
  }
  return out;
}

} // namespace minsec::detail
