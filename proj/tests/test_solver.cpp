#include <doctest.h>

#include <cmath>
#include <vector>

#include "minsec/bundle.hpp"
#include "minsec/energy.hpp"
#include "minsec/mesh.hpp"
#include "minsec/oracle.hpp"
#include "minsec/section.hpp"
#include "minsec/solver.hpp"

using namespace minsec;

TEST_CASE("winding construction realizes prescribed indices exactly") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  DiscreteSection s = winding_section(c, {{3, 1}, {150, 1}});
  for (int f = 0; f < m.face_count(); ++f)
    CHECK(face_index(s, f) == (f == 3 || f == 150 ? 1 : 0));

  // opposite pair on a flat bundle
  Connection c0 = make_connection(m, 0);
  DiscreteSection s0 = winding_section(c0, {{10, 1}, {200, -1}});
  for (int f = 0; f < m.face_count(); ++f)
    CHECK(face_index(s0, f) == (f == 10 ? 1 : f == 200 ? -1 : 0));
  CHECK(total_index(s0) == 0);
}

TEST_CASE("winding construction validates its targets") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  CHECK_THROWS_AS(winding_section(c, {{-1, 1}, {0, 1}}), Error);
  CHECK_THROWS_AS(winding_section(c, {{5, 1}, {5, 1}}), Error);
  CHECK_THROWS_AS(winding_section(c, {{5, 1}}), Error); // sum != euler
}

TEST_CASE("initializer builds one small cluster per prescribed face") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 4);
  DiscreteSection s = initialize(c, {{17, 1}, {240, 1}});
  auto recs = singular_faces(s);
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK(r.index == 2);
    CHECK(r.member_faces.size() == 2);
  }
  bool covers17 = false, covers240 = false;
  for (const auto& r : recs)
    for (int f : r.member_faces) {
      if (f == 17) covers17 = true;
      if (f == 240) covers240 = true;
    }
  CHECK(covers17);
  CHECK(covers240);
}

TEST_CASE("initializer validates prescriptions") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  CHECK_THROWS_AS(initialize(c, {{0, 2}}), Error);          // sign not unit
  CHECK_THROWS_AS(initialize(c, {{0, 1}, {0, 1}}), Error);  // duplicate
  CHECK_THROWS_AS(initialize(c, {{0, -1}}), Error);         // sum != euler
  SolverParams bad;
  bad.max_inner_iterations = 0;
  CHECK_THROWS_AS(initialize(c, {{0, 1}}, bad), Error);
}

TEST_CASE("inner minimization: monotone energy, frozen indices") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  DiscreteSection s0 = initialize(c, {{33, 1}});
  std::vector<int> idx0(m.face_count());
  for (int f = 0; f < m.face_count(); ++f) idx0[f] = face_index(s0, f);

  MinimizeResult res = minimize_inner(s0, Functional::volume());
  CHECK(res.converged);
  CHECK(res.energy <= volume(s0) + 1e-12);
  REQUIRE(res.trace.size() >= 2);
  for (size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].energy < res.trace[i - 1].energy);
    CHECK(res.trace[i].iteration == int(i));
  }
  CHECK(res.energy == doctest::Approx(res.trace.back().energy));
  for (int f = 0; f < m.face_count(); ++f)
    CHECK(face_index(res.section, f) == idx0[f]);
}

TEST_CASE("inner minimization drives a flat torus to the constant section") {
  SurfaceMesh m = make_flat_torus(8, 8, 1.0, 1.0);
  Connection c = make_connection(m, 0);
  Eigen::VectorXd theta(m.vertex_count());
  Rng rng(71);
  for (int v = 0; v < m.vertex_count(); ++v)
    theta[v] = 0.4 * (rng.next_double() - 0.5);
  DiscreteSection s0 = DiscreteSection::make(c, theta);
  REQUIRE(total_index(s0) == 0);

  MinimizeResult res = minimize_inner(s0, Functional::volume());
  CHECK(res.energy < volume(s0));
  CHECK(res.energy == doctest::Approx(1.0).epsilon(1e-3)); // first-order tail

  // exact twisting via the smoothing schedule: infimum 0
  MinimizeResult tw = minimize_inner(s0, Functional::twisting());
  CHECK(tw.energy < 1e-4);
}

TEST_CASE("outer search finds the single cluster on the sphere") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  SolverParams p;
  p.multistart = 2;
  p.outer_move_budget = 3;
  p.max_inner_iterations = 150;
  SearchResult res = outer_search(c, p);
  REQUIRE(res.singularities.size() == 1);
  CHECK(res.singularities[0].index == 2);
  CHECK(res.volume == doctest::Approx(energy_value(res.section, Functional::volume())));
  CHECK(res.volume < 8.0 * kPi); // discrete minimum sits below the round value
  CHECK(res.volume > m.total_area());
  CHECK(int(res.starts.size()) == p.multistart);
  for (const auto& st : res.starts) {
    CHECK(st.singularities == 1);
    CHECK(st.volume >= res.volume - 1e-12);
  }
  CHECK(res.topology.euler == 2);
  CHECK(res.topology.singularity_count == 1);
  CHECK(res.topology.chi == 1);
  CHECK_FALSE(res.topology.orientable);
}

TEST_CASE("outer search on a flat bundle keeps the section regular") {
  SurfaceMesh m = make_flat_torus(8, 8, 1.0, 1.0);
  Connection c = make_connection(m, 0);
  SolverParams p;
  p.multistart = 2;
  p.outer_move_budget = 2;
  SearchResult res = outer_search(c, p);
  CHECK(res.singularities.empty());
  CHECK(res.volume == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.topology.singularity_count == 0);
  CHECK(res.topology.orientable);
  CHECK(res.topology.chi == 0);
}

TEST_CASE("outer search is deterministic for a fixed seed") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  SolverParams p;
  p.multistart = 2;
  p.outer_move_budget = 2;
  p.max_inner_iterations = 80;
  p.seed = 12345;
  SearchResult a = outer_search(c, p);
  SearchResult b = outer_search(c, p);
  CHECK(a.volume == b.volume);
  REQUIRE(a.section.theta.size() == b.section.theta.size());
  CHECK((a.section.theta.array() == b.section.theta.array()).all());

  p.seed = 54321;
  SearchResult other = outer_search(c, p);
  CHECK(other.singularities.size() == 1); // same answer class either way
}

TEST_CASE("odd bundles are rejected up front") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  Connection odd = c;
  odd.euler = 3; // tampered
  CHECK_THROWS_AS(outer_search(odd, SolverParams{}), Error);
}

TEST_CASE("topology report rejects odd clusters") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 0);
  // scattered +1/-1 pair: two clusters of odd index
  DiscreteSection s = winding_section(c, {{10, 1}, {200, -1}});
  CHECK_THROWS_AS(topology_report(s), Error);
}

TEST_CASE("cone sections round trip through the ring analysis") {
  DiskMesh d = make_disk(24, 1.0);
  Connection c = make_connection(d.mesh, 0);
  DiscreteSection s = cone_section(c, 2);
  auto recs = singular_faces(s);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].index == 2);

  HConeReport rep = extract_hcone(s, recs[0], {2.0, 4.0}, 0.5);
  CHECK(rep.k == 2);
  REQUIRE(rep.rms.size() == 2);
  CHECK(rep.rms[0] < 0.03);
  CHECK(rep.rms[1] < 0.06);
  REQUIRE(rep.profiles.size() == 2);
  CHECK(rep.profiles[0].size() == rep.grid_size);
  // negative degree mirrors
  DiscreteSection sneg = cone_section(c, -2);
  auto rneg = singular_faces(sneg);
  REQUIRE(rneg.size() == 1);
  HConeReport repn = extract_hcone(sneg, rneg[0], {2.0, 4.0}, 0.5);
  CHECK(repn.k == -2);
  CHECK(repn.rms[0] < 0.03);
}

TEST_CASE("ring analysis validates its inputs") {
  DiskMesh d = make_disk(12, 1.0);
  Connection c = make_connection(d.mesh, 0);
  DiscreteSection s = cone_section(c, 2);
  auto recs = singular_faces(s);
  REQUIRE(recs.size() == 1);
  const SingularityRecord& r = recs[0];
  CHECK_THROWS_AS(extract_hcone(s, r, {}, 0.5), Error);
  CHECK_THROWS_AS(extract_hcone(s, r, {2.0, 2.0}, 0.5), Error);
  CHECK_THROWS_AS(extract_hcone(s, r, {0.5}, 0.5), Error);
  CHECK_THROWS_AS(extract_hcone(s, r, {2.0}, -1.0), Error);
  CHECK_THROWS_AS(extract_hcone(s, r, {2.0}, 5.0), Error); // leaves the disk
  SingularityRecord bogus = r;
  bogus.face = -5;
  CHECK_THROWS_AS(extract_hcone(s, bogus, {2.0}, 0.5), Error);
}

TEST_CASE("ring analysis refuses a disk holding a second singularity") {
  SurfaceMesh m = make_icosphere(3, 1.0);
  Connection c = make_connection(m, 4);
  SolverParams p;
  p.max_inner_iterations = 120;
  DiscreteSection s0 = initialize(c, {{0, 1}, {900, 1}}, p);
  MinimizeResult res = minimize_inner(s0, Functional::volume(), p);
  auto recs = singular_faces(res.section);
  REQUIRE(recs.size() == 2);
  // a huge radius must trip the guard for at least one of the two
  CHECK_THROWS_AS(extract_hcone(res.section, recs[0], {2.0}, 3.0), Error);
}

TEST_CASE("solver parameter validation") {
  SolverParams p;
  CHECK_NOTHROW(validate_params(p));
  SolverParams q = p;
  q.inner_tolerance = 0.0;
  CHECK_THROWS_AS(validate_params(q), Error);
  q = p;
  q.line_search_shrink = 1.0;
  CHECK_THROWS_AS(validate_params(q), Error);
  q = p;
  q.twist_anneal = {1e-3, 0.0};
  CHECK_THROWS_AS(validate_params(q), Error);
  q = p;
  q.refinement_depth = 11;
  CHECK_THROWS_AS(validate_params(q), Error);
}
