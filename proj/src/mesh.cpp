#include "minsec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

namespace minsec {

namespace {

double heron_area(double a, double b, double c) {
  // Kahan's numerically stable form; expects a >= b >= c after sorting.
  double s[3] = {a, b, c};
  std::sort(s, s + 3);
  double x = s[2], y = s[1], z = s[0];
  double t = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
  if (t <= 0.0) return 0.0;
  return 0.25 * std::sqrt(t);
}

double corner_angle(double adj1, double adj2, double opp) {
  double c = (adj1 * adj1 + adj2 * adj2 - opp * opp) / (2.0 * adj1 * adj2);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

} // namespace

int SurfaceMesh::find_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  std::array<int, 2> key{a, b};
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) return -1;
  return static_cast<int>(it - edges.begin());
}

Eigen::Vector2d SurfaceMesh::hat_gradient(int f, int c) const {
  Eigen::Vector2d opp =
      face_corner2d[f][(c + 2) % 3] - face_corner2d[f][(c + 1) % 3];
  return Eigen::Vector2d(-opp.y(), opp.x()) / (2.0 * face_area[f]);
}

int SurfaceMesh::corner_of(int f, int v) const {
  for (int c = 0; c < 3; ++c)
    if (faces[f][c] == v) return c;
  return -1;
}

SurfaceMesh build_surface_mesh(std::vector<Eigen::Vector3d> positions,
                               std::vector<std::array<int, 3>> faces,
                               bool allow_boundary,
                               const std::vector<double>* edge_lengths) {
  SurfaceMesh m;
  m.positions = std::move(positions);
  m.faces = std::move(faces);
  const int V = m.vertex_count();
  const int F = m.face_count();
  if (V < 3 || F < 1)
    fail(ErrorCode::InvalidArgument, "mesh needs at least 3 vertices and 1 face");

  for (int f = 0; f < F; ++f) {
    const auto& t = m.faces[f];
    for (int c = 0; c < 3; ++c) {
      if (t[c] < 0 || t[c] >= V)
        fail(ErrorCode::ParseError, "face references vertex out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      fail(ErrorCode::InvalidArgument, "degenerate face with repeated vertex");
  }

  // canonical edge list, sorted for deterministic ids
  std::vector<std::array<int, 2>> edge_set;
  edge_set.reserve(3 * F);
  for (const auto& t : m.faces)
    for (int s = 0; s < 3; ++s) {
      int a = t[s], b = t[(s + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_set.push_back({a, b});
    }
  std::sort(edge_set.begin(), edge_set.end());
  edge_set.erase(std::unique(edge_set.begin(), edge_set.end()), edge_set.end());
  m.edges = std::move(edge_set);
  const int E = m.edge_count();

  m.face_edges.assign(F, {-1, -1, -1});
  m.face_sign.assign(F, {0, 0, 0});
  m.edge_faces.assign(E, {-1, -1});
  m.edge_face_side.assign(E, {-1, -1});
  std::vector<std::array<int, 2>> directed_seen(E, {0, 0}); // a->b, b->a counts

  for (int f = 0; f < F; ++f) {
    const auto& t = m.faces[f];
    for (int s = 0; s < 3; ++s) {
      int i = t[s], j = t[(s + 1) % 3];
      int e = m.find_edge(i, j);
      m.face_edges[f][s] = e;
      bool forward = (i == m.edges[e][0]);
      m.face_sign[f][s] = forward ? int8_t(1) : int8_t(-1);
      int dir = forward ? 0 : 1;
      directed_seen[e][dir] += 1;
      if (m.edge_faces[e][0] == -1) {
        m.edge_faces[e][0] = f;
        m.edge_face_side[e][0] = static_cast<int8_t>(s);
      } else if (m.edge_faces[e][1] == -1) {
        m.edge_faces[e][1] = f;
        m.edge_face_side[e][1] = static_cast<int8_t>(s);
      } else {
        fail(ErrorCode::NonManifold, "edge shared by more than two faces");
      }
    }
  }

  int boundary_edges = 0;
  for (int e = 0; e < E; ++e) {
    int total = directed_seen[e][0] + directed_seen[e][1];
    if (total == 1) {
      ++boundary_edges;
    } else if (total == 2) {
      if (directed_seen[e][0] != 1 || directed_seen[e][1] != 1)
        fail(ErrorCode::InconsistentOrientation,
             "edge traversed twice in the same direction");
    }
  }
  m.closed = (boundary_edges == 0);
  if (!m.closed && !allow_boundary)
    fail(ErrorCode::NonManifold, "mesh has boundary edges");

  m.vertex_faces.assign(V, {});
  for (int f = 0; f < F; ++f)
    for (int c = 0; c < 3; ++c) m.vertex_faces[m.faces[f][c]].push_back(f);
  for (int v = 0; v < V; ++v)
    if (m.vertex_faces[v].empty())
      fail(ErrorCode::Inconsistency, "isolated vertex");

  // vertex umbrellas: incident faces must form a single fan
  for (int v = 0; v < V; ++v) {
    // outgoing direction (v -> next) keyed to (face, v -> prev)
    std::map<int, std::pair<int, int>> wedge;
    for (int f : m.vertex_faces[v]) {
      int c = m.corner_of(f, v);
      int nxt = m.faces[f][(c + 1) % 3];
      int prv = m.faces[f][(c + 2) % 3];
      if (!wedge.emplace(nxt, std::make_pair(f, prv)).second)
        fail(ErrorCode::NonManifold, "vertex with branching fan");
    }
    // walk the fan from an edge that no wedge exits into (boundary start),
    // or anywhere on a closed umbrella
    int start = wedge.begin()->first;
    std::map<int, int> entered; // direction reachable as some wedge's prv
    for (const auto& [k, fp] : wedge) entered[fp.second] += 1;
    for (const auto& [k, fp] : wedge)
      if (!entered.count(k)) start = k;
    int cur = start;
    std::map<int, bool> visited;
    size_t steps = 0;
    while (steps < wedge.size()) {
      auto it = wedge.find(cur);
      if (it == wedge.end() || visited[cur]) break;
      visited[cur] = true;
      cur = it->second.second;
      ++steps;
    }
    if (steps != wedge.size())
      fail(ErrorCode::NonManifold, "vertex link is not a single fan");
  }

  // intrinsic metric
  m.edge_length.resize(E);
  if (edge_lengths) {
    if (static_cast<int>(edge_lengths->size()) != E)
      fail(ErrorCode::InvalidArgument, "edge length override has wrong size");
    for (int e = 0; e < E; ++e) m.edge_length[e] = (*edge_lengths)[e];
  } else {
    for (int e = 0; e < E; ++e)
      m.edge_length[e] =
          (m.positions[m.edges[e][0]] - m.positions[m.edges[e][1]]).norm();
  }
  for (int e = 0; e < E; ++e)
    if (!(m.edge_length[e] > 0.0))
      fail(ErrorCode::Inconsistency, "nonpositive edge length");

  m.face_area.resize(F);
  m.face_angle.assign(F, {0, 0, 0});
  m.face_corner2d.assign(F, {});
  for (int f = 0; f < F; ++f) {
    double l0 = m.edge_length[m.face_edges[f][0]]; // v0-v1
    double l1 = m.edge_length[m.face_edges[f][1]]; // v1-v2
    double l2 = m.edge_length[m.face_edges[f][2]]; // v2-v0
    if (l0 + l1 <= l2 || l1 + l2 <= l0 || l2 + l0 <= l1)
      fail(ErrorCode::Inconsistency, "triangle inequality violated");
    m.face_area[f] = heron_area(l0, l1, l2);
    if (!(m.face_area[f] > 0.0))
      fail(ErrorCode::Inconsistency, "degenerate face area");
    m.face_angle[f][0] = corner_angle(l0, l2, l1);
    m.face_angle[f][1] = corner_angle(l1, l0, l2);
    m.face_angle[f][2] = corner_angle(l2, l1, l0);

    Eigen::Vector2d q0(0.0, 0.0);
    Eigen::Vector2d q1(l0, 0.0);
    double x2 = (l0 * l0 + l2 * l2 - l1 * l1) / (2.0 * l0);
    double y2sq = l2 * l2 - x2 * x2;
    Eigen::Vector2d q2(x2, std::sqrt(std::max(y2sq, 0.0)));

    // align the frame's first axis with the lowest-id edge, canonical direction
    int s_low = 0;
    for (int s = 1; s < 3; ++s)
      if (m.face_edges[f][s] < m.face_edges[f][s_low]) s_low = s;
    std::array<Eigen::Vector2d, 3> q{q0, q1, q2};
    Eigen::Vector2d dir = q[(s_low + 1) % 3] - q[s_low];
    if (m.face_sign[f][s_low] < 0) dir = -dir;
    Eigen::Vector2d u = dir.normalized();
    Eigen::Matrix2d rot;
    rot << u.x(), u.y(), -u.y(), u.x();
    for (int c = 0; c < 3; ++c) m.face_corner2d[f][c] = rot * q[c];
  }

  if (m.closed) {
    int chi = m.euler_characteristic();
    if ((2 - chi) % 2 != 0 || chi > 2)
      fail(ErrorCode::Inconsistency, "closed surface with impossible Euler characteristic");
    m.genus = (2 - chi) / 2;
  } else {
    m.genus = 0;
  }
  return m;
}

SurfaceMesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 8)
    fail(ErrorCode::InvalidArgument, "icosphere subdivisions must be in [0, 8]");
  if (!(radius > 0.0))
    fail(ErrorCode::InvalidArgument, "icosphere radius must be positive");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> pos = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : pos) p = p.normalized() * radius;
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d p = ((pos[a] + pos[b]) * 0.5).normalized() * radius;
      int id = static_cast<int>(pos.size());
      pos.push_back(p);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& f : tris) {
      int ab = mid(f[0], f[1]);
      int bc = mid(f[1], f[2]);
      int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  return build_surface_mesh(std::move(pos), std::move(tris));
}

SurfaceMesh make_flat_torus(int n, int m, double a, double b) {
  if (n < 3 || m < 3)
    fail(ErrorCode::InvalidArgument, "flat torus grid must be at least 3x3");
  if (!(a > 0.0) || !(b > 0.0))
    fail(ErrorCode::InvalidArgument, "flat torus side lengths must be positive");

  auto vid = [&](int i, int j) { return ((j % m + m) % m) * n + ((i % n + n) % n); };
  std::vector<Eigen::Vector3d> pos(static_cast<size_t>(n) * m);
  // ring radius strictly above the tube radius so the export embedding never
  // pinches; the intrinsic metric below is what the library computes with
  const double r = b / (2.0 * M_PI), R = (a + b) / (2.0 * M_PI);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      double u = 2.0 * M_PI * i / n, v = 2.0 * M_PI * j / m;
      pos[vid(i, j)] = Eigen::Vector3d((R + r * std::cos(v)) * std::cos(u),
                                       (R + r * std::cos(v)) * std::sin(u),
                                       r * std::sin(v));
    }
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * static_cast<size_t>(n) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }

  // intrinsic flat metric; positions above are for export only
  SurfaceMesh probe = build_surface_mesh(pos, tris);
  std::vector<double> lengths(probe.edge_count());
  const double dx = a / n, dy = b / m;
  for (int e = 0; e < probe.edge_count(); ++e) {
    int p = probe.edges[e][0], q = probe.edges[e][1];
    int pi = p % n, pj = p / n, qi = q % n, qj = q / n;
    int di = std::abs(pi - qi);
    di = std::min(di, n - di);
    int dj = std::abs(pj - qj);
    dj = std::min(dj, m - dj);
    lengths[e] = std::hypot(di * dx, dj * dy);
  }
  return build_surface_mesh(std::move(pos), std::move(tris), false, &lengths);
}

DiskMesh make_disk(int rings, double radius) {
  if (rings < 1)
    fail(ErrorCode::InvalidArgument, "disk needs at least one ring");
  if (!(radius > 0.0))
    fail(ErrorCode::InvalidArgument, "disk radius must be positive");

  std::vector<Eigen::Vector3d> pos;
  pos.emplace_back(0.0, 0.0, 0.0);
  std::vector<int> ring_start(rings + 1, 0);
  auto ring_size = [](int j) { return 8 * j; };
  for (int j = 1; j <= rings; ++j) {
    ring_start[j] = static_cast<int>(pos.size());
    int nj = ring_size(j);
    double rj = radius * j / rings;
    for (int k = 0; k < nj; ++k) {
      double ang = 2.0 * M_PI * k / nj;
      pos.emplace_back(rj * std::cos(ang), rj * std::sin(ang), 0.0);
    }
  }

  std::vector<std::array<int, 3>> tris;
  for (int k = 0; k < ring_size(1); ++k)
    tris.push_back({0, ring_start[1] + k, ring_start[1] + (k + 1) % ring_size(1)});
  for (int j = 1; j < rings; ++j) {
    int nIn = ring_size(j), nOut = ring_size(j + 1);
    int in0 = ring_start[j], out0 = ring_start[j + 1];
    int u = 0, w = 0;
    while (u < nIn || w < nOut) {
      double au = 2.0 * M_PI * (u + 1) / nIn;
      double aw = 2.0 * M_PI * (w + 1) / nOut;
      if (w == nOut || (u < nIn && au <= aw)) {
        tris.push_back({in0 + u % nIn, out0 + w % nOut, in0 + (u + 1) % nIn});
        ++u;
      } else {
        tris.push_back({in0 + u % nIn, out0 + w % nOut, out0 + (w + 1) % nOut});
        ++w;
      }
    }
  }

  DiskMesh disk;
  disk.mesh = build_surface_mesh(std::move(pos), std::move(tris), true);
  disk.center_vertex = 0;
  disk.radius = radius;
  disk.boundary_loop.resize(ring_size(rings));
  for (int k = 0; k < ring_size(rings); ++k)
    disk.boundary_loop[k] = ring_start[rings] + k;
  return disk;
}

SurfaceMesh load_mesh(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  size_t at = 0;
  auto next_int = [&](const char* what) {
    if (at >= tokens.size())
      fail(ErrorCode::ParseError, std::string("unexpected end of mesh data reading ") + what);
    size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tokens[at], &used);
    } catch (...) {
      fail(ErrorCode::ParseError, std::string("bad integer for ") + what);
    }
    if (used != tokens[at].size())
      fail(ErrorCode::ParseError, std::string("bad integer for ") + what);
    ++at;
    return static_cast<int>(v);
  };
  auto next_double = [&](const char* what) {
    if (at >= tokens.size())
      fail(ErrorCode::ParseError, std::string("unexpected end of mesh data reading ") + what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tokens[at], &used);
    } catch (...) {
      fail(ErrorCode::ParseError, std::string("bad number for ") + what);
    }
    if (used != tokens[at].size())
      fail(ErrorCode::ParseError, std::string("bad number for ") + what);
    ++at;
    return v;
  };

  int V = next_int("vertex count");
  int E = next_int("edge count");
  int F = next_int("face count");
  if (V < 3 || F < 1 || E < 0)
    fail(ErrorCode::ParseError, "malformed header counts");

  std::vector<Eigen::Vector3d> pos(V);
  for (int v = 0; v < V; ++v) {
    double x = next_double("x"), y = next_double("y"), z = next_double("z");
    pos[v] = Eigen::Vector3d(x, y, z);
  }
  std::vector<std::array<int, 3>> tris(F);
  for (int f = 0; f < F; ++f) {
    int k = next_int("face size");
    if (k != 3) fail(ErrorCode::ParseError, "only triangle faces supported");
    tris[f] = {next_int("i"), next_int("j"), next_int("k")};
  }
  if (at != tokens.size())
    fail(ErrorCode::ParseError, "trailing data after faces");

  SurfaceMesh m = build_surface_mesh(std::move(pos), std::move(tris), true);
  if (E != 0 && E != m.edge_count())
    fail(ErrorCode::ParseError, "header edge count does not match mesh");
  return m;
}

SurfaceMesh load_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open mesh file: " + path);
  return load_mesh(in);
}

void save_mesh(const SurfaceMesh& mesh, std::ostream& out) {
  out << mesh.vertex_count() << " " << mesh.edge_count() << " "
      << mesh.face_count() << "\n";
  char buf[128];
  for (const auto& p : mesh.positions) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  for (const auto& f : mesh.faces)
    out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

Eigen::VectorXd vertex_distances_from_seeds(
    const SurfaceMesh& mesh, const std::vector<std::pair<int, double>>& seeds) {
  if (seeds.empty())
    fail(ErrorCode::InvalidArgument, "distance field needs at least one seed");
  const int V = mesh.vertex_count();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(V, inf);
  std::vector<char> known(V, 0);

  // fast marching: per-face planar wavefront updates keep the level sets
  // round where pure edge-hop distances would scallop with the lattice
  // directions. d(x) = d(qa) + g.(x - qa), |g| = 1, crossing the triangle.
  auto face_update = [&](int g, int ca, int cb, int cc) -> double {
    double da = dist[mesh.faces[g][ca]], db = dist[mesh.faces[g][cb]];
    const Eigen::Vector2d qa = mesh.face_corner2d[g][ca];
    const Eigen::Vector2d qb = mesh.face_corner2d[g][cb];
    const Eigen::Vector2d qc = mesh.face_corner2d[g][cc];
    double best = inf;
    if (std::isfinite(da)) best = std::min(best, da + (qc - qa).norm());
    if (std::isfinite(db)) best = std::min(best, db + (qc - qb).norm());
    if (!std::isfinite(da) || !std::isfinite(db)) return best;

    Eigen::Vector2d e = qb - qa;
    double L = e.norm();
    double alpha = (db - da) / L;
    if (std::abs(alpha) >= 1.0) return best;
    Eigen::Vector2d ehat = e / L, nhat(-ehat.y(), ehat.x());
    double beta = std::sqrt(1.0 - alpha * alpha);
    Eigen::Vector2d w = qc - qa;
    for (double sgn : {1.0, -1.0}) {
      Eigen::Vector2d grad = alpha * ehat + sgn * beta * nhat;
      double dc = da + grad.dot(w);
      if (dc < std::max(da, db)) continue;
      // the characteristic qc - s*grad must leave through the edge
      double s = nhat.dot(w) / nhat.dot(grad);
      if (!(s > 0.0)) continue;
      double t = ehat.dot(w - s * grad) / L;
      if (t < 0.0 || t > 1.0) continue;
      best = std::min(best, dc);
    }
    return best;
  };

  using Node = std::pair<double, int>;
  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> pq;
  for (const auto& [v, d] : seeds) {
    if (v < 0 || v >= V)
      fail(ErrorCode::InvalidArgument, "seed vertex id out of range");
    if (!(d >= 0.0))
      fail(ErrorCode::InvalidArgument, "seed distance must be nonnegative");
    if (d < dist[v]) {
      dist[v] = d;
      pq.emplace(d, v);
    }
  }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (known[v] || d > dist[v]) continue;
    known[v] = 1;
    for (int g : mesh.vertex_faces[v]) {
      for (int other = 1; other <= 2; ++other) {
        int cc = (mesh.corner_of(g, v) + other) % 3;
        int u = mesh.faces[g][cc];
        if (known[u]) continue;
        double cand = face_update(g, (cc + 1) % 3, (cc + 2) % 3, cc);
        if (cand < dist[u]) {
          dist[u] = cand;
          pq.emplace(cand, u);
        }
      }
    }
  }
  return dist;
}

Eigen::VectorXd vertex_distances_from_face(const SurfaceMesh& mesh, int f) {
  if (f < 0 || f >= mesh.face_count())
    fail(ErrorCode::InvalidArgument, "face id out of range");
  Eigen::Vector2d bary = (mesh.face_corner2d[f][0] + mesh.face_corner2d[f][1] +
                          mesh.face_corner2d[f][2]) / 3.0;
  std::vector<std::pair<int, double>> seeds;
  for (int c = 0; c < 3; ++c)
    seeds.emplace_back(mesh.faces[f][c],
                       (mesh.face_corner2d[f][c] - bary).norm());
  return vertex_distances_from_seeds(mesh, seeds);
}

double sublevel_area_fraction(const SurfaceMesh& mesh, int f,
                              const Eigen::VectorXd& d, double t) {
  double vals[3] = {d[mesh.faces[f][0]], d[mesh.faces[f][1]], d[mesh.faces[f][2]]};
  std::sort(vals, vals + 3);
  double lo = vals[0], mid_ = vals[1], hi = vals[2];
  if (t <= lo) return 0.0;
  if (t >= hi) return 1.0;
  const double span = hi - lo;
  if (span <= 0.0) return t >= lo ? 1.0 : 0.0;
  if (t < mid_) {
    double den = (mid_ - lo) * (hi - lo);
    if (den <= 0.0) return 0.0;
    double x = t - lo;
    return x * x / den;
  }
  double den = (hi - lo) * (hi - mid_);
  if (den <= 0.0) return 1.0;
  double x = hi - t;
  return 1.0 - x * x / den;
}

} // namespace minsec
