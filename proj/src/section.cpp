#include "minsec/section.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "minsec/errors.hpp"

namespace minsec {

DiscreteSection DiscreteSection::make(const Connection& conn,
                                      Eigen::VectorXd theta) {
  if (theta.size() != conn.mesh->vertex_count())
    fail(ErrorCode::InvalidArgument, "theta has wrong size");
  DiscreteSection sec;
  sec.mesh = conn.mesh;
  sec.conn = &conn;
  sec.theta = std::move(theta);
  for (int v = 0; v < sec.theta.size(); ++v) {
    double t = std::fmod(sec.theta[v], kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    sec.theta[v] = t;
  }
  return sec;
}

double edge_difference(const DiscreteSection& sec, int i, int j) {
  return wrap_angle(sec.theta[j] - sec.theta[i] - sec.conn->rho_dir(i, j));
}

int face_index(const DiscreteSection& sec, int f) {
  double s = side_difference(sec, f, 0) + side_difference(sec, f, 1) +
             side_difference(sec, f, 2) + sec.conn->omega[f];
  return static_cast<int>(std::lround(s / kTwoPi));
}

int total_index(const DiscreteSection& sec) {
  int sum = 0;
  for (int f = 0; f < sec.mesh->face_count(); ++f) sum += face_index(sec, f);
  return sum;
}

std::vector<SingularityRecord> singular_faces(const DiscreteSection& sec) {
  const SurfaceMesh& mesh = *sec.mesh;
  const int F = mesh.face_count();
  std::vector<int> idx(F);
  std::vector<int> singular;
  for (int f = 0; f < F; ++f) {
    idx[f] = face_index(sec, f);
    if (idx[f] != 0) singular.push_back(f);
  }

  // group by shared vertices
  std::vector<int> comp(F, -1);
  std::vector<SingularityRecord> records;
  for (int seed : singular) {
    if (comp[seed] != -1) continue;
    int id = static_cast<int>(records.size());
    SingularityRecord rec;
    std::vector<int> stack{seed};
    comp[seed] = id;
    while (!stack.empty()) {
      int f = stack.back();
      stack.pop_back();
      rec.member_faces.push_back(f);
      rec.index += idx[f];
      for (int c = 0; c < 3; ++c) {
        int v = mesh.faces[f][c];
        for (int g : mesh.vertex_faces[v]) {
          if (idx[g] != 0 && comp[g] == -1) {
            comp[g] = id;
            stack.push_back(g);
          }
        }
      }
    }
    std::sort(rec.member_faces.begin(), rec.member_faces.end());
    rec.face = rec.member_faces.front();
    double wsum = 0.0;
    for (int f : rec.member_faces) {
      rec.position += mesh.face_area[f] * mesh.face_barycenter(f);
      wsum += mesh.face_area[f];
    }
    rec.position /= wsum;
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(),
            [](const SingularityRecord& a, const SingularityRecord& b) {
              return a.face < b.face;
            });
  return records;
}

int boundary_degree(const DiscreteSection& sec, const std::vector<int>& loop) {
  const SurfaceMesh& mesh = *sec.mesh;
  const size_t L = loop.size();
  if (L < 3) fail(ErrorCode::InvalidArgument, "loop too short");
  {
    std::vector<int> sorted(loop);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      fail(ErrorCode::InvalidArgument, "loop repeats a vertex");
  }

  // faces to the left of each directed loop edge seed the enclosed region;
  // flooding may not cross loop edges
  std::vector<bool> blocked(mesh.edge_count(), false);
  std::vector<int> seeds, right;
  double diff_sum = 0.0;
  for (size_t t = 0; t < L; ++t) {
    int i = loop[t], j = loop[(t + 1) % L];
    int e = mesh.find_edge(i, j);
    if (e < 0) fail(ErrorCode::InvalidArgument, "loop step is not an edge");
    blocked[e] = true;
    diff_sum += edge_difference(sec, i, j);
    bool forward = (i == mesh.edges[e][0]);
    int left = -1, rgt = -1;
    for (int k = 0; k < 2; ++k) {
      int f = mesh.edge_faces[e][k];
      if (f < 0) continue;
      int s = mesh.edge_face_side[e][k];
      bool face_runs_forward = mesh.face_sign[f][s] > 0;
      if (face_runs_forward == forward)
        left = f;
      else
        rgt = f;
    }
    if (left >= 0) seeds.push_back(left);
    if (rgt >= 0) right.push_back(rgt);
  }
  if (seeds.empty())
    fail(ErrorCode::InvalidArgument, "loop has no interior side");

  std::vector<bool> inside(mesh.face_count(), false);
  std::vector<int> stack;
  for (int f : seeds)
    if (!inside[f]) {
      inside[f] = true;
      stack.push_back(f);
    }
  while (!stack.empty()) {
    int f = stack.back();
    stack.pop_back();
    for (int s = 0; s < 3; ++s) {
      int e = mesh.face_edges[f][s];
      if (blocked[e]) continue;
      int other = mesh.edge_faces[e][0] == f ? mesh.edge_faces[e][1]
                                             : mesh.edge_faces[e][0];
      if (other >= 0 && !inside[other]) {
        inside[other] = true;
        stack.push_back(other);
      }
    }
  }
  for (int f : right)
    if (inside[f])
      fail(ErrorCode::InvalidArgument, "loop does not bound a region");

  double omega_sum = 0.0;
  for (int f = 0; f < mesh.face_count(); ++f)
    if (inside[f]) omega_sum += sec.conn->omega[f];
  return static_cast<int>(std::lround((diff_sum + omega_sum) / kTwoPi));
}

int face_cluster_separation(const SurfaceMesh& mesh,
                            const std::vector<int>& faces_a,
                            const std::vector<int>& faces_b) {
  std::vector<int> dist(mesh.face_count(), -1);
  std::vector<int> frontier;
  for (int f : faces_a) {
    if (dist[f] == -1) {
      dist[f] = 0;
      frontier.push_back(f);
    }
  }
  int level = 0;
  while (!frontier.empty()) {
    for (int f : frontier)
      for (int b : faces_b)
        if (f == b) return level;
    std::vector<int> next;
    for (int f : frontier)
      for (int s = 0; s < 3; ++s) {
        int e = mesh.face_edges[f][s];
        int other = mesh.edge_faces[e][0] == f ? mesh.edge_faces[e][1]
                                               : mesh.edge_faces[e][0];
        if (other >= 0 && dist[other] == -1) {
          dist[other] = level + 1;
          next.push_back(other);
        }
      }
    frontier = std::move(next);
    ++level;
  }
  return -1;
}

void save_section(const DiscreteSection& sec, std::ostream& out) {
  out << "vertex_id,theta\n";
  char buf[64];
  for (int v = 0; v < sec.theta.size(); ++v) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", v, sec.theta[v]);
    out << buf;
  }
}

DiscreteSection load_section(const Connection& conn, std::istream& in) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(conn.mesh->vertex_count());
  std::vector<bool> seen(conn.mesh->vertex_count(), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("vertex_id", 0) == 0) continue;
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ','))
      fail(ErrorCode::ParseError, "short section row");
    int v = 0;
    try {
      v = std::stoi(cell);
    } catch (...) {
      fail(ErrorCode::ParseError, "bad vertex id");
    }
    if (v < 0 || v >= conn.mesh->vertex_count())
      fail(ErrorCode::ParseError, "vertex id out of range");
    if (seen[v]) fail(ErrorCode::ParseError, "duplicate vertex row");
    seen[v] = true;
    if (!std::getline(ls, cell)) fail(ErrorCode::ParseError, "short section row");
    try {
      theta[v] = std::stod(cell);
    } catch (...) {
      fail(ErrorCode::ParseError, "bad theta value");
    }
  }
  for (int v = 0; v < conn.mesh->vertex_count(); ++v)
    if (!seen[v]) fail(ErrorCode::ParseError, "section is missing vertices");
  return DiscreteSection::make(conn, std::move(theta));
}

} // namespace minsec
