#include "minsec/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "minsec/bundle.hpp"
#include "minsec/errors.hpp"
#include "minsec/util.hpp"

namespace minsec {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Least-squares fit of vertex angles to per-edge difference targets, vertex 0
// pinned. The graph Laplacian factorization is cached per mesh so repeated
// fits during the outer search are cheap.
struct PhaseFitter {
  const SurfaceMesh* mesh = nullptr;
  Eigen::SimplicialLDLT<SpMat> chol;

  void ensure(const SurfaceMesh& m) {
    if (mesh == &m) return;
    mesh = &m;
    int nv = m.vertex_count();
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(m.edge_count() * 4);
    for (int e = 0; e < m.edge_count(); ++e) {
      int a = m.edges[e][0], b = m.edges[e][1];
      tr.emplace_back(a, a, 1.0);
      tr.emplace_back(b, b, 1.0);
      tr.emplace_back(a, b, -1.0);
      tr.emplace_back(b, a, -1.0);
    }
    SpMat L(nv, nv);
    L.setFromTriplets(tr.begin(), tr.end());
    SpMat Lred = L.bottomRightCorner(nv - 1, nv - 1);
    chol.compute(Lred);
    if (chol.info() != Eigen::Success)
      fail(ErrorCode::Inconsistency, "graph Laplacian factorization failed");
  }

  Eigen::VectorXd fit(const Eigen::VectorXd& target) const {
    const SurfaceMesh& m = *mesh;
    int nv = m.vertex_count();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv);
    for (int e = 0; e < m.edge_count(); ++e) {
      rhs[m.edges[e][1]] += target[e];
      rhs[m.edges[e][0]] -= target[e];
    }
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(nv);
    theta.tail(nv - 1) = chol.solve(rhs.tail(nv - 1));
    return theta;
  }
};

std::vector<int> all_face_indices(const DiscreteSection& sec) {
  std::vector<int> idx(sec.mesh->face_count());
  for (int f = 0; f < sec.mesh->face_count(); ++f) idx[f] = face_index(sec, f);
  return idx;
}

bool indices_match(const DiscreteSection& sec, const std::vector<int>& idx) {
  for (int f = 0; f < sec.mesh->face_count(); ++f)
    if (face_index(sec, f) != idx[f]) return false;
  return true;
}

double wrapped_dirichlet(const DiscreteSection& sec) {
  const SurfaceMesh& m = *sec.mesh;
  double sum = 0.0;
  for (int e = 0; e < m.edge_count(); ++e) {
    double w = edge_difference(sec, m.edges[e][0], m.edges[e][1]);
    sum += w * w;
  }
  return sum;
}

// Quadratic surrogate relaxation: freeze the per-edge branch offsets, fit the
// angles by least squares, recompute, repeat. Each fit cannot increase the
// wrapped energy; steps that would alter any face index are discarded.
DiscreteSection relax_quadratic(DiscreteSection sec, const PhaseFitter& fitter,
                                int iterations) {
  const SurfaceMesh& m = *sec.mesh;
  const Connection& conn = *sec.conn;
  auto idx0 = all_face_indices(sec);
  double energy = wrapped_dirichlet(sec);
  Eigen::VectorXd prev_target;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd target(m.edge_count());
    for (int e = 0; e < m.edge_count(); ++e) {
      int a = m.edges[e][0], b = m.edges[e][1];
      double diff = sec.theta[b] - sec.theta[a] - conn.rho[e];
      target[e] = conn.rho[e] + (diff - wrap_angle(diff));
    }
    if (prev_target.size() && (target.array() == prev_target.array()).all())
      break;
    DiscreteSection cand = DiscreteSection::make(conn, fitter.fit(target));
    if (!indices_match(cand, idx0)) break;
    double cand_energy = wrapped_dirichlet(cand);
    if (cand_energy > energy + 1e-12 * (1.0 + std::abs(energy))) break;
    sec = std::move(cand);
    energy = cand_energy;
    prev_target = std::move(target);
  }
  return sec;
}

DiscreteSection winding_section_impl(const Connection& conn,
                                     const std::vector<std::pair<int, int>>& targets) {
  const SurfaceMesh& mesh = *conn.mesh;
  std::set<int> seen;
  int total = 0;
  for (const auto& t : targets) {
    if (t.first < 0 || t.first >= mesh.face_count())
      fail(ErrorCode::InvalidArgument, "winding face out of range");
    if (!seen.insert(t.first).second)
      fail(ErrorCode::InvalidArgument, "duplicate winding face");
    total += t.second;
  }
  if (mesh.closed && total != conn.euler)
    fail(ErrorCode::InvalidArgument,
         "winding integers must sum to the euler number");

  Eigen::VectorXd b = -conn.omega;
  for (const auto& t : targets) b[t.first] += kTwoPi * t.second;
  Eigen::VectorXd delta = solve_min_norm_curl(mesh, b);

  // Integrate rho + delta along a spanning tree. A real-valued least-squares
  // potential cannot carry winding (exact differences have no curl), so the
  // indices must come from the wrap folds: around any tree cycle the
  // (rho + delta)-sum telescopes to face sums that are multiples of 2pi
  // modulo the connection's own folds, hence the wrapped side differences
  // reproduce delta on every edge and each face sum lands exactly on its
  // prescribed winding, provided |delta| stays below pi.
  const int nv = mesh.vertex_count();
  std::vector<std::vector<std::pair<int, int>>> adj(nv);
  for (int e = 0; e < mesh.edge_count(); ++e) {
    adj[mesh.edges[e][0]].push_back({e, mesh.edges[e][1]});
    adj[mesh.edges[e][1]].push_back({e, mesh.edges[e][0]});
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(nv);
  std::vector<char> reached(nv, 0);
  std::vector<int> queue{0};
  reached[0] = 1;
  for (size_t head = 0; head < queue.size(); ++head) {
    int a = queue[head];
    for (const auto& [e, v] : adj[a]) {
      if (reached[v]) continue;
      double step = conn.rho[e] + delta[e];
      if (mesh.edges[e][0] != a) step = -step;
      theta[v] = wrap_angle(theta[a] + step);
      reached[v] = 1;
      queue.push_back(v);
    }
  }
  DiscreteSection sec = DiscreteSection::make(conn, theta);

  std::map<int, int> want;
  for (const auto& t : targets) want[t.first] = t.second;
  for (int f = 0; f < mesh.face_count(); ++f) {
    auto it = want.find(f);
    int expect = it == want.end() ? 0 : it->second;
    if (face_index(sec, f) != expect)
      fail(ErrorCode::Inconsistency,
           "winding construction failed to realize the prescribed indices");
  }
  return sec;
}

// Lowest-id face sharing a vertex with f, preferring one that does not share
// an edge (keeps the two unit windings from crowding one edge), skipping
// faces already in use.
int partner_face(const SurfaceMesh& mesh, int f, const std::set<int>& used) {
  std::set<int> edge_adj;
  for (int s = 0; s < 3; ++s) {
    int e = mesh.face_edges[f][s];
    int o = mesh.edge_faces[e][0] == f ? mesh.edge_faces[e][1]
                                       : mesh.edge_faces[e][0];
    if (o >= 0) edge_adj.insert(o);
  }
  std::set<int> cand;
  for (int c = 0; c < 3; ++c)
    for (int g : mesh.vertex_faces[mesh.faces[f][c]])
      if (g != f) cand.insert(g);
  for (int g : cand)
    if (!used.count(g) && !edge_adj.count(g)) return g;
  for (int g : edge_adj)
    if (!used.count(g)) return g;
  fail(ErrorCode::InvalidArgument, "no free partner face near prescribed face");
}

DiscreteSection initialize_impl(const Connection& conn,
                                const std::vector<std::pair<int, int>>& points,
                                const SolverParams& params, PhaseFitter& fitter) {
  validate_params(params);
  const SurfaceMesh& mesh = *conn.mesh;
  int sum = 0;
  std::set<int> used;
  for (const auto& p : points) {
    if (p.first < 0 || p.first >= mesh.face_count())
      fail(ErrorCode::InvalidArgument, "prescribed face out of range");
    if (p.second != 1 && p.second != -1)
      fail(ErrorCode::InvalidArgument, "prescribed sign must be +1 or -1");
    if (!used.insert(p.first).second)
      fail(ErrorCode::InvalidArgument, "duplicate prescribed face");
    sum += 2 * p.second;
  }
  if (mesh.closed && sum != conn.euler)
    fail(ErrorCode::InvalidArgument,
         "prescribed indices must sum to the euler number");

  std::vector<std::pair<int, int>> targets;
  for (const auto& p : points) {
    int partner = partner_face(mesh, p.first, used);
    used.insert(partner);
    targets.push_back({p.first, p.second});
    targets.push_back({partner, p.second});
  }
  DiscreteSection sec = winding_section_impl(conn, targets);
  fitter.ensure(mesh);
  return relax_quadratic(std::move(sec), fitter, 8);
}

Eigen::VectorXd face_distances(const SurfaceMesh& mesh, int f) {
  Eigen::VectorXd vd = vertex_distances_from_face(mesh, f);
  Eigen::VectorXd fd(mesh.face_count());
  for (int g = 0; g < mesh.face_count(); ++g) {
    const auto& t = mesh.faces[g];
    fd[g] = std::min({vd[t[0]], vd[t[1]], vd[t[2]]});
  }
  return fd;
}

std::vector<std::pair<int, int>> place_anchors(const SurfaceMesh& mesh, int count,
                                               int sign, Rng& rng) {
  std::vector<std::pair<int, int>> points;
  if (count == 0) return points;
  int F = mesh.face_count();
  std::vector<int> placed{rng.next_int(F)};
  Eigen::VectorXd mind = face_distances(mesh, placed[0]);
  while (int(placed.size()) < count) {
    int bestf = -1;
    double bestd = -1.0;
    for (int f = 0; f < F; ++f) {
      if (std::find(placed.begin(), placed.end(), f) != placed.end()) continue;
      if (mind[f] > bestd) {
        bestd = mind[f];
        bestf = f;
      }
    }
    if (bestf < 0)
      fail(ErrorCode::InvalidArgument, "mesh too small for the requested points");
    placed.push_back(bestf);
    mind = mind.cwiseMin(face_distances(mesh, bestf));
  }
  for (int f : placed) points.push_back({f, sign});
  return points;
}

std::vector<int> adjacent_faces(const SurfaceMesh& mesh, int f,
                                const std::set<int>& occupied) {
  std::vector<int> out;
  for (int s = 0; s < 3; ++s) {
    int e = mesh.face_edges[f][s];
    int o = mesh.edge_faces[e][0] == f ? mesh.edge_faces[e][1]
                                       : mesh.edge_faces[e][0];
    if (o >= 0 && !occupied.count(o)) out.push_back(o);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<std::pair<int, int>>> propose_move(
    const SurfaceMesh& mesh, const std::vector<std::pair<int, int>>& pts,
    int max_points, Rng& rng) {
  enum { Relocate, Merge, Add, Delete };
  int plus = 0, minus = 0;
  for (const auto& p : pts) (p.second > 0 ? plus : minus)++;
  std::vector<int> kinds;
  if (!pts.empty()) kinds.push_back(Relocate);
  if (plus >= 2 || minus >= 2) kinds.push_back(Merge);
  if (int(pts.size()) + 2 <= max_points) kinds.push_back(Add);
  if (plus >= 1 && minus >= 1) kinds.push_back(Delete);
  if (kinds.empty()) return std::nullopt;
  int kind = kinds[rng.next_int(int(kinds.size()))];

  std::set<int> occupied;
  for (const auto& p : pts) occupied.insert(p.first);
  auto out = pts;
  switch (kind) {
    case Relocate: {
      int i = rng.next_int(int(pts.size()));
      auto nb = adjacent_faces(mesh, pts[i].first, occupied);
      if (nb.empty()) return std::nullopt;
      out[i].first = nb[rng.next_int(int(nb.size()))];
      return out;
    }
    case Merge: {
      // Collapse one of a same-sign pair next to the other, a one-proposal
      // merge and re-split; the split direction is sampled, acceptance picks
      // the best over the move budget.
      std::vector<std::pair<int, int>> pairs;
      for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
          if (pts[i].second == pts[j].second) pairs.push_back({int(i), int(j)});
      auto pick = pairs[rng.next_int(int(pairs.size()))];
      auto nb = adjacent_faces(mesh, pts[pick.first].first, occupied);
      if (nb.empty()) return std::nullopt;
      out[pick.second].first = nb[rng.next_int(int(nb.size()))];
      return out;
    }
    case Add: {
      int f1 = -1, f2 = -1;
      for (int t = 0; t < 16 && f1 < 0; ++t) {
        int c = rng.next_int(mesh.face_count());
        if (!occupied.count(c)) f1 = c;
      }
      if (f1 < 0) return std::nullopt;
      occupied.insert(f1);
      for (int t = 0; t < 16 && f2 < 0; ++t) {
        int c = rng.next_int(mesh.face_count());
        if (!occupied.count(c)) f2 = c;
      }
      if (f2 < 0) return std::nullopt;
      out.push_back({f1, 1});
      out.push_back({f2, -1});
      return out;
    }
    case Delete: {
      std::vector<int> pl, mi;
      for (size_t i = 0; i < pts.size(); ++i)
        (pts[i].second > 0 ? pl : mi).push_back(int(i));
      int ip = pl[rng.next_int(int(pl.size()))];
      int im = mi[rng.next_int(int(mi.size()))];
      out.erase(out.begin() + std::max(ip, im));
      out.erase(out.begin() + std::min(ip, im));
      return out;
    }
  }
  return std::nullopt;
}

} // namespace

void validate_params(const SolverParams& p) {
  if (p.max_inner_iterations <= 0 || p.outer_move_budget < 0 ||
      p.multistart <= 0 || p.refinement_depth < 0 || p.refinement_depth > 10)
    fail(ErrorCode::InvalidArgument, "solver parameters out of range");
  if (!(p.inner_tolerance > 0.0 && p.inner_tolerance < 1.0))
    fail(ErrorCode::InvalidArgument, "inner tolerance must be in (0,1)");
  if (!(p.line_search_shrink > 0.0 && p.line_search_shrink < 1.0))
    fail(ErrorCode::InvalidArgument, "line-search shrink must be in (0,1)");
  for (double e : p.twist_anneal)
    if (!(e > 0.0))
      fail(ErrorCode::InvalidArgument, "smoothing schedule must be positive");
}

DiscreteSection winding_section(const Connection& conn,
                                const std::vector<std::pair<int, int>>& targets) {
  return winding_section_impl(conn, targets);
}

DiscreteSection initialize(const Connection& conn,
                           const std::vector<std::pair<int, int>>& points,
                           const SolverParams& params) {
  PhaseFitter fitter;
  return initialize_impl(conn, points, params, fitter);
}

MinimizeResult minimize_inner(const DiscreteSection& sec, const Functional& fn,
                              const SolverParams& params) {
  validate_params(params);
  EvalOptions opts{params.refinement_depth};
  std::vector<Functional> stages;
  if (fn.kind == Functional::Kind::Twisting && fn.epsilon == 0.0 &&
      !params.twist_anneal.empty()) {
    for (double eps : params.twist_anneal) stages.push_back(Functional::twisting(eps));
  } else {
    stages.push_back(fn);
  }

  MinimizeResult out;
  DiscreteSection cur = sec;
  auto idx0 = all_face_indices(cur);
  int iter = 0;
  bool converged = false;
  bool first_stage = true;
  for (const Functional& sf : stages) {
    double energy = energy_value(cur, sf, opts);
    if (first_stage) {
      out.trace.push_back({0, energy});
      first_stage = false;
    }
    double eta = 1.0;
    converged = false;
    for (int it = 0; it < params.max_inner_iterations; ++it) {
      Eigen::VectorXd g = energy_gradient(cur, sf, opts);
      if (!(g.squaredNorm() > 0.0)) {
        converged = true;
        break;
      }
      bool accepted = false;
      DiscreteSection cand;
      double cand_energy = 0.0;
      int tries = 0;
      for (; tries < 80; ++tries) {
        cand = DiscreteSection::make(*cur.conn, cur.theta - eta * g);
        if (indices_match(cand, idx0)) {
          cand_energy = energy_value(cand, sf, opts);
          if (cand_energy < energy) {
            accepted = true;
            break;
          }
        }
        eta *= params.line_search_shrink;
        if (eta < 1e-300) break;
      }
      if (!accepted) {
        converged = true;
        break;
      }
      double rel = (energy - cand_energy) / std::max(1.0, std::abs(energy));
      cur = std::move(cand);
      energy = cand_energy;
      ++iter;
      out.trace.push_back({iter, energy});
      if (tries == 0) eta *= 2.0;
      if (rel < params.inner_tolerance) {
        converged = true;
        break;
      }
    }
  }
  out.energy = energy_value(cur, fn, opts);
  out.section = std::move(cur);
  out.converged = converged;
  return out;
}

SearchResult outer_search(const Connection& conn, const SolverParams& params) {
  validate_params(params);
  const SurfaceMesh& mesh = *conn.mesh;
  if (conn.euler % 2 != 0)
    fail(ErrorCode::InvalidArgument, "euler number must be even");
  Rng rng(params.seed);
  PhaseFitter fitter;
  fitter.ensure(mesh);
  const int npts = std::abs(conn.euler) / 2;
  const int sgn = conn.euler >= 0 ? 1 : -1;
  const int max_points = npts + 2;

  struct Config {
    std::vector<std::pair<int, int>> points;
    MinimizeResult result;
    std::vector<SingularityRecord> records;
    double volume = 0.0;
  };
  std::map<std::vector<std::pair<int, int>>, double> cache;
  std::optional<Config> best;
  std::vector<StartSummary> starts;

  auto evaluate = [&](const std::vector<std::pair<int, int>>& pts,
                      bool use_cache) -> std::optional<Config> {
    auto key = pts;
    std::sort(key.begin(), key.end());
    if (use_cache && cache.count(key)) return std::nullopt;
    try {
      DiscreteSection s0 = initialize_impl(conn, pts, params, fitter);
      MinimizeResult res = minimize_inner(s0, Functional::volume(), params);
      cache[key] = res.energy;
      auto recs = singular_faces(res.section);
      if (recs.size() != pts.size()) return std::nullopt;
      int sum = 0;
      for (const auto& rec : recs) {
        if (rec.index != 2 && rec.index != -2) return std::nullopt;
        sum += rec.index;
      }
      if (mesh.closed && sum != conn.euler) return std::nullopt;
      for (size_t i = 0; i < recs.size(); ++i)
        for (size_t j = i + 1; j < recs.size(); ++j) {
          int sep = face_cluster_separation(mesh, recs[i].member_faces,
                                            recs[j].member_faces);
          if (sep >= 0 && sep < 2) return std::nullopt;
        }
      double vol = res.energy;
      return Config{pts, std::move(res), std::move(recs), vol};
    } catch (const Error&) {
      cache[key] = std::numeric_limits<double>::infinity();
      return std::nullopt;
    }
  };

  for (int start = 0; start < params.multistart; ++start) {
    std::optional<Config> cfg;
    for (int attempt = 0; attempt < 4 && !cfg; ++attempt) {
      auto pts = place_anchors(mesh, npts, sgn, rng);
      cfg = evaluate(pts, false);
    }
    if (!cfg) {
      starts.push_back({start, std::numeric_limits<double>::quiet_NaN(), 0, 0});
      continue;
    }
    int accepted = 0;
    for (int move = 0; move < params.outer_move_budget; ++move) {
      auto prop = propose_move(mesh, cfg->points, max_points, rng);
      if (!prop) continue;
      auto cand = evaluate(*prop, true);
      if (!cand) continue;
      if (cand->volume <
          cfg->volume - params.inner_tolerance * std::max(1.0, std::abs(cfg->volume))) {
        cfg = std::move(cand);
        ++accepted;
      }
    }
    starts.push_back({start, cfg->volume, accepted, int(cfg->records.size())});
    if (!best || cfg->volume < best->volume) best = std::move(cfg);
  }
  if (!best)
    fail(ErrorCode::Inconsistency, "search produced no valid configuration");

  SearchResult out;
  out.volume = best->volume;
  out.singularities = best->records;
  out.trace = best->result.trace;
  out.section = std::move(best->result.section);
  out.topology = topology_report(out.section);
  out.starts = std::move(starts);
  return out;
}

TopologyReport topology_report(const DiscreteSection& sec) {
  auto recs = singular_faces(sec);
  TopologyReport rep;
  rep.euler = sec.conn->euler;
  rep.genus = sec.mesh->genus;
  rep.singularity_count = int(recs.size());
  int sum = 0;
  for (const auto& rec : recs) {
    if (rec.index == 0 || rec.index % 2 != 0)
      fail(ErrorCode::Inconsistency, "singularity cluster with odd or zero index");
    rep.indices.push_back(rec.index);
    sum += rec.index;
  }
  if (sec.mesh->closed && sum != rep.euler)
    fail(ErrorCode::Inconsistency, "index sum disagrees with the euler number");
  rep.chi = 2 - 2 * rep.genus - rep.singularity_count;
  rep.orientable = (rep.singularity_count == 0);
  return rep;
}

namespace {

double cross2d(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.x() * v.y() - u.y() * v.x();
}

double crossing_param(const Eigen::VectorXd& dist, const std::array<int, 2>& e,
                      double r) {
  return (r - dist[e[0]]) / (dist[e[1]] - dist[e[0]]);
}

// Lift value at a crossing point, in the local potential of face f (corner 0
// at zero, sides accumulating the corrected differences).
double crossing_psi(const DiscreteSection& sec, int f, int edge, double x) {
  const SurfaceMesh& m = *sec.mesh;
  auto d = corrected_differences(sec, f);
  double u[3] = {0.0, d[0], d[0] + d[1]};
  int ca = m.corner_of(f, m.edges[edge][0]);
  int cb = m.corner_of(f, m.edges[edge][1]);
  return (1.0 - x) * u[ca] + x * u[cb];
}

struct RingProfile {
  Eigen::VectorXd values;
  std::vector<Eigen::Vector3d> points; // resampled, same grid as values
  int winding = 0;
};

RingProfile trace_ring(const DiscreteSection& sec, const Eigen::VectorXd& dist,
                       double r, int grid) {
  const SurfaceMesh& m = *sec.mesh;
  double scale = m.edge_length.mean();

  // Nudge the radius off any vertex level so every crossing is transverse.
  double reff = r;
  std::vector<int> crossed;
  for (int attempt = 0; attempt < 12; ++attempt) {
    reff = r * (1.0 + attempt * 1e-7);
    bool clash = false;
    for (int v = 0; v < m.vertex_count(); ++v)
      if (std::abs(dist[v] - reff) < 1e-10 * scale) {
        clash = true;
        break;
      }
    if (clash) continue;
    crossed.clear();
    for (int e = 0; e < m.edge_count(); ++e)
      if ((dist[m.edges[e][0]] - reff) * (dist[m.edges[e][1]] - reff) < 0.0)
        crossed.push_back(e);
    break;
  }
  if (crossed.empty())
    fail(ErrorCode::InvalidArgument, "circle radius crosses no edges");

  std::map<int, std::vector<int>> by_face;
  for (int e : crossed)
    for (int side = 0; side < 2; ++side) {
      int f = m.edge_faces[e][side];
      if (f >= 0) by_face[f].push_back(e);
    }
  for (const auto& kv : by_face)
    if (kv.second.size() != 2)
      fail(ErrorCode::Inconsistency, "level circle degenerate in a face");

  // Walk the crossing cycle from the lowest crossed edge.
  int e0 = crossed.front();
  std::vector<int> cycle{e0};
  int f = m.edge_faces[e0][0] >= 0 ? m.edge_faces[e0][0] : m.edge_faces[e0][1];
  int e = e0;
  bool closed_loop = false;
  for (size_t step = 0; step <= crossed.size(); ++step) {
    const auto& pairv = by_face.at(f);
    int enext = pairv[0] == e ? pairv[1] : pairv[0];
    if (enext == e0) {
      closed_loop = true;
      break;
    }
    cycle.push_back(enext);
    int fnext = m.edge_faces[enext][0] == f ? m.edge_faces[enext][1]
                                            : m.edge_faces[enext][0];
    if (fnext < 0)
      fail(ErrorCode::InvalidArgument, "circle reaches the mesh boundary");
    e = enext;
    f = fnext;
  }
  if (!closed_loop || cycle.size() < 3)
    fail(ErrorCode::Inconsistency, "circle walk failed to close");

  auto common_face = [&](int ea, int eb) {
    int bestf = -1;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        int fa = m.edge_faces[ea][i], fb = m.edge_faces[eb][j];
        if (fa >= 0 && fa == fb && (bestf < 0 || fa < bestf)) bestf = fa;
      }
    if (bestf < 0) fail(ErrorCode::Inconsistency, "circle walk broke");
    return bestf;
  };

  // Orient the walk CCW around the center: the sublevel side must sit to the
  // left of the first crossing segment.
  {
    int fa = common_face(cycle[0], cycle[1]);
    auto pt2d = [&](int edge) {
      double x = crossing_param(dist, m.edges[edge], reff);
      int ca = m.corner_of(fa, m.edges[edge][0]);
      int cb = m.corner_of(fa, m.edges[edge][1]);
      return Eigen::Vector2d((1.0 - x) * m.face_corner2d[fa][ca] +
                             x * m.face_corner2d[fa][cb]);
    };
    Eigen::Vector2d A = pt2d(cycle[0]);
    Eigen::Vector2d B = pt2d(cycle[1]);
    int cin = -1;
    for (int c = 0; c < 3 && cin < 0; ++c)
      if (dist[m.faces[fa][c]] < reff) cin = c;
    if (cin < 0) fail(ErrorCode::Inconsistency, "circle walk lost its center");
    if (cross2d(B - A, m.face_corner2d[fa][cin] - A) < 0.0)
      std::reverse(cycle.begin() + 1, cycle.end());
  }

  const int T = int(cycle.size());
  std::vector<double> x(T), tau(T);
  std::vector<Eigen::Vector3d> pos(T);
  for (int t = 0; t < T; ++t) {
    x[t] = crossing_param(dist, m.edges[cycle[t]], reff);
    pos[t] = (1.0 - x[t]) * m.positions[m.edges[cycle[t]][0]] +
             x[t] * m.positions[m.edges[cycle[t]][1]];
  }
  tau[0] = 0.0;
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    int ft = common_face(cycle[t], cycle[(t + 1) % T]);
    double dpsi = crossing_psi(sec, ft, cycle[(t + 1) % T], x[(t + 1) % T]) -
                  crossing_psi(sec, ft, cycle[t], x[t]);
    if (t + 1 < T) tau[t + 1] = tau[t] + dpsi;
    total += dpsi;
  }

  std::vector<double> theta(T + 1, 0.0);
  for (int t = 0; t < T; ++t)
    theta[t + 1] = theta[t] + (pos[(t + 1) % T] - pos[t]).norm();
  double perimeter = theta[T];
  for (int t = 0; t <= T; ++t) theta[t] *= kTwoPi / perimeter;

  RingProfile out;
  out.winding = int(std::lround(total / kTwoPi));
  out.values.resize(grid);
  out.points.resize(grid);
  int seg = 0;
  for (int gidx = 0; gidx < grid; ++gidx) {
    double th = kTwoPi * gidx / grid;
    while (seg + 1 <= T && theta[seg + 1] < th) ++seg;
    double t0 = theta[seg], t1 = theta[seg + 1];
    double v0 = tau[seg];
    double v1 = seg + 1 < T ? tau[seg + 1] : total;
    double a = t1 > t0 ? (th - t0) / (t1 - t0) : 0.0;
    out.values[gidx] = (1.0 - a) * v0 + a * v1;
    out.points[gidx] = (1.0 - a) * pos[seg] + a * pos[(seg + 1) % T];
  }
  return out;
}

// Offset of the true cone apex from the distance-field center, read off the
// first harmonic of the ring profile. A center displaced by delta shifts the
// azimuth seen at ring angle theta by (|delta|/r) sin(theta - phi_delta), so
// the fit residual is -(k/r) delta . t(theta) with t the ring tangent. A
// least-squares slope (not the integer winding) absorbs any curvature
// enclosed by the ring, which distributes linearly in arclength.
Eigen::Vector3d apex_offset(const RingProfile& ring, double r) {
  const int N = int(ring.values.size());
  if (ring.winding == 0) return Eigen::Vector3d::Zero();
  Eigen::MatrixXd A(N, 4);
  for (int i = 0; i < N; ++i) {
    double th = kTwoPi * i / N;
    A(i, 0) = 1.0;
    A(i, 1) = th;
    A(i, 2) = std::sin(th);
    A(i, 3) = std::cos(th);
  }
  Eigen::Vector4d coef =
      (A.transpose() * A).ldlt().solve(A.transpose() * ring.values);
  Eigen::VectorXd resid = ring.values - A.col(0) * coef[0] - A.col(1) * coef[1];
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int i = 0; i < N; ++i) {
    Eigen::Vector3d tang =
        ring.points[(i + 1) % N] - ring.points[(i + N - 1) % N];
    double L = tang.norm();
    if (L > 0.0) acc += resid[i] * (tang / L);
  }
  return -(r / ring.winding) * (2.0 / N) * acc;
}

} // namespace

HConeReport extract_hcone(const DiscreteSection& sec,
                          const SingularityRecord& sing,
                          const std::vector<double>& lambdas, double R) {
  const SurfaceMesh& mesh = *sec.mesh;
  if (lambdas.empty())
    fail(ErrorCode::InvalidArgument, "empty rescale list");
  for (size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 1.0))
      fail(ErrorCode::InvalidArgument, "rescale factors must be >= 1");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      fail(ErrorCode::InvalidArgument, "rescale factors must increase");
  }
  if (!(R > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
  if (sing.face < 0 || sing.face >= mesh.face_count())
    fail(ErrorCode::InvalidArgument, "singularity face out of range");

  std::set<int> members(sing.member_faces.begin(), sing.member_faces.end());
  members.insert(sing.face);
  auto distances_about = [&](const Eigen::Vector3d& center) {
    std::vector<std::pair<int, double>> seeds;
    for (int f : members)
      for (int c = 0; c < 3; ++c) {
        int v = mesh.faces[f][c];
        seeds.emplace_back(v, (mesh.positions[v] - center).norm());
      }
    return vertex_distances_from_seeds(mesh, seeds);
  };

  // The cluster barycenter misses the concentration point by a fraction of an
  // edge length, which would smear every profile by a first harmonic of size
  // k * offset / r. Recenter on the offset read back from the widest ring.
  Eigen::Vector3d center = sing.position;
  Eigen::VectorXd dist = distances_about(center);
  const int grid = 256;
  const double rwide = R / lambdas.front();
  for (int round = 0; round < 2; ++round) {
    Eigen::Vector3d shift = apex_offset(trace_ring(sec, dist, rwide, grid), rwide);
    if (shift.norm() > rwide)
      fail(ErrorCode::Inconsistency, "cone center estimate diverged");
    center += shift;
    dist = distances_about(center);
  }

  for (int f = 0; f < mesh.face_count(); ++f) {
    if (members.count(f) || face_index(sec, f) == 0) continue;
    const auto& t = mesh.faces[f];
    double mind = std::min({dist[t[0]], dist[t[1]], dist[t[2]]});
    if (mind <= R)
      fail(ErrorCode::InvalidArgument,
           "disk of the given radius contains another singularity");
  }

  HConeReport rep;
  rep.singularity_face = sing.face;
  rep.radius = R;
  rep.lambdas = lambdas;
  rep.grid_size = grid;

  std::vector<RingProfile> rings;
  for (double lam : lambdas)
    rings.push_back(trace_ring(sec, dist, R / lam, grid));
  rep.k = rings.back().winding;

  for (const auto& ring : rings) {
    Eigen::VectorXd resid(grid);
    for (int gidx = 0; gidx < grid; ++gidx)
      resid[gidx] = ring.values[gidx] - rep.k * (kTwoPi * gidx / grid);
    double c = resid.mean();
    rep.rms.push_back(std::sqrt((resid.array() - c).square().mean()));
    rep.profiles.push_back(ring.values);
  }
  return rep;
}

} // namespace minsec
