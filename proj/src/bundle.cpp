#include "minsec/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>

#include "minsec/errors.hpp"

namespace minsec {

double Connection::rho_dir(int i, int j) const {
  int e = mesh->find_edge(i, j);
  if (e < 0) fail(ErrorCode::InvalidArgument, "rho_dir: no such edge");
  return (i == mesh->edges[e][0]) ? rho[e] : -rho[e];
}

Eigen::VectorXd solve_min_norm_curl(const SurfaceMesh& mesh,
                                    const Eigen::VectorXd& b) {
  const int F = mesh.face_count();
  const int E = mesh.edge_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * F);
  for (int f = 0; f < F; ++f)
    for (int s = 0; s < 3; ++s)
      trip.emplace_back(f, mesh.face_edges[f][s],
                        static_cast<double>(mesh.face_sign[f][s]));
  Eigen::SparseMatrix<double> D(F, E);
  D.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> A = (D * Eigen::SparseMatrix<double>(D.transpose())).pruned();

  Eigen::VectorXd y(F);
  if (mesh.closed) {
    // A is the dual-graph Laplacian with a one-dimensional constant kernel;
    // b must be orthogonal to it, and any pinned solve gives the same
    // min-norm rho = D^T y since D^T kills constants.
    if (std::abs(b.sum()) > 1e-6 * std::max(1.0, b.cwiseAbs().maxCoeff()))
      fail(ErrorCode::Inconsistency, "curl data does not sum to zero");
    Eigen::SparseMatrix<double> Ared = A.topLeftCorner(F - 1, F - 1);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(Ared);
    if (chol.info() != Eigen::Success)
      fail(ErrorCode::Inconsistency, "curl system factorization failed");
    Eigen::VectorXd yr = chol.solve(b.head(F - 1));
    y.head(F - 1) = yr;
    y[F - 1] = 0.0;
  } else {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(A);
    if (chol.info() != Eigen::Success)
      fail(ErrorCode::Inconsistency, "curl system factorization failed");
    y = chol.solve(b);
  }
  Eigen::VectorXd rho = D.transpose() * y;
  double resid = (D * rho - b).cwiseAbs().maxCoeff();
  if (resid > 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff()))
    fail(ErrorCode::Inconsistency, "curl solve residual too large");
  return rho;
}

Connection make_connection(const SurfaceMesh& mesh, int e, double fiber_length) {
  if (e % 2 != 0)
    fail(ErrorCode::InvalidArgument, "euler number must be even");
  if (!(fiber_length > 0.0))
    fail(ErrorCode::InvalidArgument, "fiber length must be positive");
  const int F = mesh.face_count();

  Connection conn;
  conn.mesh = &mesh;
  conn.fiber_length = fiber_length;
  conn.euler = e;
  conn.omega.resize(F);
  const double total = mesh.total_area();
  for (int f = 0; f < F; ++f)
    conn.omega[f] = kTwoPi * e * mesh.face_area[f] / total;

  Eigen::VectorXd b = conn.omega;
  if (mesh.closed) {
    // The exact cochain equation is obstructed by e != 0: subtract integer
    // multiples of 2pi (summing to e) chosen by greedy least-squares rounding.
    std::vector<long> n(F);
    long sum = 0;
    for (int f = 0; f < F; ++f) {
      n[f] = std::lround(conn.omega[f] / kTwoPi);
      sum += n[f];
    }
    while (sum != e) {
      int dir = (sum < e) ? 1 : -1;
      int best = -1;
      double best_resid = -std::numeric_limits<double>::infinity();
      for (int f = 0; f < F; ++f) {
        double resid = dir * (conn.omega[f] - kTwoPi * n[f]);
        if (resid > best_resid + 1e-15) {
          best_resid = resid;
          best = f;
        }
      }
      n[best] += dir;
      sum += dir;
    }
    for (int f = 0; f < F; ++f) b[f] = conn.omega[f] - kTwoPi * n[f];
  }
  conn.rho = solve_min_norm_curl(mesh, b);
  validate_connection(conn);
  return conn;
}

namespace {

// One CCW wedge of vertex v's tangent cone: face, its outgoing ray v->next,
// and the cumulative raw angle of that ray from the reference ray (the one
// toward v's lowest-id neighbor).
struct ConeWedge {
  int face = -1;
  int next = -1;
  double start = 0.0;
};

struct ConeLayout {
  std::vector<ConeWedge> wedges;
  double total = 0.0; // raw cone angle; normalization is 2pi/total
};

ConeLayout cone_layout(const SurfaceMesh& mesh, int v) {
  std::map<int, std::pair<int, int>> wedge; // next vertex -> (face, prev vertex)
  for (int f : mesh.vertex_faces[v]) {
    int c = mesh.corner_of(f, v);
    wedge.emplace(mesh.faces[f][(c + 1) % 3],
                  std::make_pair(f, mesh.faces[f][(c + 2) % 3]));
  }
  ConeLayout out;
  double acc = 0.0;
  int cur = wedge.begin()->first; // lowest-id neighbor as reference ray
  for (size_t k = 0; k < wedge.size(); ++k) {
    const auto& [f, prv] = wedge.at(cur);
    out.wedges.push_back({f, cur, acc});
    acc += mesh.face_angle[f][mesh.corner_of(f, v)];
    cur = prv;
  }
  out.total = acc;
  return out;
}

} // namespace

Connection levi_civita_connection(const SurfaceMesh& mesh, double fiber_length) {
  if (!mesh.closed)
    fail(ErrorCode::InvalidArgument, "levi_civita_connection needs a closed mesh");
  if (!(fiber_length > 0.0))
    fail(ErrorCode::InvalidArgument, "fiber length must be positive");
  const int V = mesh.vertex_count();
  const int E = mesh.edge_count();
  const int F = mesh.face_count();

  // normalized angle of each outgoing direction in its vertex's tangent cone
  Eigen::VectorXd phi_fwd(E), phi_rev(E); // at edges[e][0] resp. edges[e][1]
  for (int v = 0; v < V; ++v) {
    ConeLayout layout = cone_layout(mesh, v);
    double scale = kTwoPi / layout.total;
    for (const ConeWedge& w : layout.wedges) {
      int e = mesh.find_edge(v, w.next);
      if (v == mesh.edges[e][0])
        phi_fwd[e] = w.start * scale;
      else
        phi_rev[e] = w.start * scale;
    }
  }

  Connection conn;
  conn.mesh = &mesh;
  conn.fiber_length = fiber_length;
  conn.rho.resize(E);
  for (int e = 0; e < E; ++e)
    conn.rho[e] = wrap_angle(phi_rev[e] + kPi - phi_fwd[e]);
  conn.omega.resize(F);
  for (int f = 0; f < F; ++f) conn.omega[f] = wrap_angle(conn.holonomy(f));
  double esum = conn.omega.sum() / kTwoPi;
  conn.euler = static_cast<int>(std::lround(esum));
  if (std::abs(esum - conn.euler) > 1e-6 ||
      conn.euler != mesh.euler_characteristic())
    fail(ErrorCode::Inconsistency,
         "transport curvature does not integrate to the Euler characteristic");
  validate_connection(conn);
  return conn;
}

double vertex_cone_angle(const SurfaceMesh& mesh, int v,
                         const Eigen::Vector3d& d) {
  if (!mesh.closed)
    fail(ErrorCode::InvalidArgument, "vertex_cone_angle needs a closed mesh");
  if (v < 0 || v >= mesh.vertex_count())
    fail(ErrorCode::InvalidArgument, "vertex out of range");
  if (!(d.norm() > 0.0))
    fail(ErrorCode::InvalidArgument, "direction must be nonzero");

  ConeLayout layout = cone_layout(mesh, v);
  double best_dist = std::numeric_limits<double>::infinity();
  double best_angle = 0.0;
  for (const ConeWedge& w : layout.wedges) {
    int f = w.face;
    int c = mesh.corner_of(f, v);
    int n = mesh.faces[f][(c + 1) % 3], p = mesh.faces[f][(c + 2) % 3];
    // express d in the face chart by least squares over the two edge spans
    Eigen::Matrix<double, 3, 2> S;
    S.col(0) = mesh.positions[n] - mesh.positions[v];
    S.col(1) = mesh.positions[p] - mesh.positions[v];
    Eigen::Matrix2d G = S.transpose() * S;
    Eigen::Vector2d rhs = S.transpose() * d;
    double det = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0);
    Eigen::Vector2d a(G(1, 1) * rhs[0] - G(0, 1) * rhs[1],
                      G(0, 0) * rhs[1] - G(1, 0) * rhs[0]);
    a /= det;
    Eigen::Vector2d r1 = mesh.face_corner2d[f][(c + 1) % 3] -
                         mesh.face_corner2d[f][c];
    Eigen::Vector2d r2 = mesh.face_corner2d[f][(c + 2) % 3] -
                         mesh.face_corner2d[f][c];
    Eigen::Vector2d t = a[0] * r1 + a[1] * r2;
    if (!(t.norm() > 0.0)) continue; // d is normal to this face
    double beta = std::atan2(r1.x() * t.y() - r1.y() * t.x(), r1.dot(t));
    if (beta < 0.0) beta += kTwoPi;
    double A = mesh.face_angle[f][c];
    double dist, clamped;
    if (beta <= A) {
      dist = 0.0;
      clamped = beta;
    } else if (kTwoPi - beta <= beta - A) {
      dist = kTwoPi - beta;
      clamped = 0.0;
    } else {
      dist = beta - A;
      clamped = A;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best_angle = w.start + clamped;
    }
    if (dist == 0.0) break;
  }
  if (!std::isfinite(best_dist))
    fail(ErrorCode::InvalidArgument, "direction is normal to every wedge");
  double angle = best_angle * (kTwoPi / layout.total);
  return (angle >= kTwoPi) ? angle - kTwoPi : angle;
}

void validate_connection(const Connection& conn, double tol) {
  const SurfaceMesh& mesh = *conn.mesh;
  for (int f = 0; f < mesh.face_count(); ++f) {
    double mismatch = wrap_angle(conn.holonomy(f) - conn.omega[f]);
    if (std::abs(mismatch) > tol && std::abs(mismatch - kTwoPi) > tol)
      fail(ErrorCode::Inconsistency, "omega does not match rho holonomy mod 2pi");
  }
  if (mesh.closed) {
    double esum = conn.omega.sum() / kTwoPi;
    if (std::abs(esum - conn.euler) > tol)
      fail(ErrorCode::Inconsistency, "omega does not sum to 2pi times euler");
  }
}

int euler_number(const Connection& conn) {
  double esum = conn.omega.sum() / kTwoPi;
  int e = static_cast<int>(std::lround(esum));
  if (std::abs(esum - e) > 1e-6)
    fail(ErrorCode::Inconsistency, "curvature sum is not an integer multiple of 2pi");
  if (e != conn.euler)
    fail(ErrorCode::Inconsistency, "stored euler number disagrees with curvature sum");
  return e;
}

Connection gauge_transformed(const Connection& conn, const Eigen::VectorXd& phi) {
  const SurfaceMesh& mesh = *conn.mesh;
  if (phi.size() != mesh.vertex_count())
    fail(ErrorCode::InvalidArgument, "gauge field has wrong size");
  Connection out = conn;
  for (int e = 0; e < mesh.edge_count(); ++e)
    out.rho[e] = conn.rho[e] + phi[mesh.edges[e][1]] - phi[mesh.edges[e][0]];
  return out;
}

void save_connection(const Connection& conn, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# e=%d L=%.17g\n", conn.euler,
                conn.fiber_length);
  out << buf << "edge_i,edge_j,rho\n";
  const SurfaceMesh& mesh = *conn.mesh;
  for (int e = 0; e < mesh.edge_count(); ++e) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", mesh.edges[e][0],
                  mesh.edges[e][1], conn.rho[e]);
    out << buf;
  }
}

Connection load_connection(const SurfaceMesh& mesh, std::istream& in) {
  Connection conn;
  conn.mesh = &mesh;
  conn.rho = Eigen::VectorXd::Zero(mesh.edge_count());
  std::vector<bool> seen(mesh.edge_count(), false);
  int e_header = std::numeric_limits<int>::min();
  bool header_done = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        if (tok.rfind("e=", 0) == 0) e_header = std::stoi(tok.substr(2));
        if (tok.rfind("L=", 0) == 0) conn.fiber_length = std::stod(tok.substr(2));
      }
      continue;
    }
    if (!header_done && line.rfind("edge_i", 0) == 0) {
      header_done = true;
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    int ij[2];
    for (int k = 0; k < 2; ++k) {
      if (!std::getline(ls, cell, ','))
        fail(ErrorCode::ParseError, "short connection row");
      try {
        ij[k] = std::stoi(cell);
      } catch (...) {
        fail(ErrorCode::ParseError, "bad connection vertex id");
      }
    }
    if (!std::getline(ls, cell))
      fail(ErrorCode::ParseError, "short connection row");
    double r = 0;
    try {
      r = std::stod(cell);
    } catch (...) {
      fail(ErrorCode::ParseError, "bad rho value");
    }
    int e = mesh.find_edge(ij[0], ij[1]);
    if (e < 0) fail(ErrorCode::ParseError, "connection row names a missing edge");
    if (seen[e]) fail(ErrorCode::ParseError, "duplicate connection row");
    seen[e] = true;
    conn.rho[e] = (ij[0] == mesh.edges[e][0]) ? r : -r;
  }
  for (int e = 0; e < mesh.edge_count(); ++e)
    if (!seen[e]) fail(ErrorCode::ParseError, "connection is missing edges");
  if (e_header == std::numeric_limits<int>::min())
    fail(ErrorCode::ParseError, "connection header lacks e=");
  if (!(conn.fiber_length > 0.0))
    fail(ErrorCode::ParseError, "connection fiber length must be positive");

  conn.omega.resize(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f)
    conn.omega[f] = wrap_angle(conn.holonomy(f));
  double esum = conn.omega.sum() / kTwoPi;
  conn.euler = static_cast<int>(std::lround(esum));
  if (mesh.closed && std::abs(esum - conn.euler) > 1e-6)
    fail(ErrorCode::Inconsistency, "loaded rho has non-integral total curvature");
  if (conn.euler != e_header)
    fail(ErrorCode::Inconsistency, "header euler number disagrees with rho");
  if (conn.euler % 2 != 0)
    fail(ErrorCode::Inconsistency, "loaded connection has odd euler number");
  return conn;
}

} // namespace minsec
