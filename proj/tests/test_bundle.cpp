#include <doctest.h>

#include <cmath>
#include <sstream>

#include "minsec/bundle.hpp"
#include "minsec/mesh.hpp"

using namespace minsec;

TEST_CASE("constructed connection meets its invariants") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  for (int e : {0, 2, 4, -2}) {
    Connection c = make_connection(m, e);
    CHECK(c.euler == e);
    CHECK(euler_number(c) == e);
    CHECK_NOTHROW(validate_connection(c));
    CHECK(c.omega.sum() == doctest::Approx(kTwoPi * e).epsilon(1e-10));
    // curvature spread by area
    for (int f = 0; f < m.face_count(); ++f)
      CHECK(c.omega[f] == doctest::Approx(kTwoPi * e * m.face_area[f] /
                                          m.total_area())
                              .epsilon(1e-8)
                              .scale(1.0));
    // omega is the folded holonomy
    for (int f = 0; f < m.face_count(); ++f)
      CHECK(wrap_angle(c.holonomy(f) - c.omega[f]) ==
            doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(make_connection(m, 3), Error);
  CHECK_THROWS_AS(make_connection(m, 2, 0.0), Error);
}

TEST_CASE("constructed connection with zero euler number is flat") {
  SurfaceMesh m = make_flat_torus(8, 8, 1.0, 1.0);
  Connection c = make_connection(m, 0);
  CHECK(c.euler == 0);
  CHECK(c.rho.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.omega.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("directed rho is antisymmetric") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  for (int e = 0; e < m.edge_count(); ++e) {
    int a = m.edges[e][0], b = m.edges[e][1];
    CHECK(c.rho_dir(a, b) == c.rho[e]);
    CHECK(c.rho_dir(b, a) == -c.rho[e]);
  }
  CHECK_THROWS_AS(c.rho_dir(0, 0), Error);
}

TEST_CASE("intrinsic transport recovers the Euler characteristic") {
  SurfaceMesh sphere = make_icosphere(2, 1.0);
  Connection cs = levi_civita_connection(sphere);
  CHECK(cs.euler == 2);
  CHECK_NOTHROW(validate_connection(cs));
  CHECK(cs.omega.sum() == doctest::Approx(kTwoPi * 2).epsilon(1e-10));

  SurfaceMesh torus = make_flat_torus(6, 6, 1.0, 1.0);
  Connection ct = levi_civita_connection(torus);
  CHECK(ct.euler == 0);
  // flat metric: every normalized cone is exactly 2pi, curvature vanishes
  CHECK(ct.omega.cwiseAbs().maxCoeff() < 1e-10);

  DiskMesh d = make_disk(3, 1.0);
  CHECK_THROWS_AS(levi_civita_connection(d.mesh), Error);
}

TEST_CASE("intrinsic curvature follows the angle defects") {
  // octahedron: defect pi/3 at each of the 6 vertices, spread to faces
  std::vector<Eigen::Vector3d> pos = {
      {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<std::array<int, 3>> tris = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4},
                                          {3, 0, 4}, {2, 0, 5}, {1, 2, 5},
                                          {3, 1, 5}, {0, 3, 5}};
  SurfaceMesh m = build_surface_mesh(pos, tris);
  Connection c = levi_civita_connection(m);
  CHECK(c.euler == 2);
  // all faces alike by symmetry
  for (int f = 0; f < m.face_count(); ++f)
    CHECK(c.omega[f] == doctest::Approx(4.0 * M_PI / 8).epsilon(1e-10));
}

TEST_CASE("cone coordinates compose with the transport") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  // walking an embedded edge direction across it matches rho up to the wrap
  for (int e = 0; e < m.edge_count(); e += 7) {
    int a = m.edges[e][0], b = m.edges[e][1];
    Eigen::Vector3d chord = m.positions[b] - m.positions[a];
    double at_a = vertex_cone_angle(m, a, chord);
    double at_b = vertex_cone_angle(m, b, -chord);
    double transported = at_a + c.rho_dir(a, b);
    CHECK(std::abs(wrap_angle(at_b - M_PI - transported)) <
          0.35 * c.omega.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("cone coordinate ranges and errors") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  for (int v = 0; v < m.vertex_count(); v += 5) {
    Eigen::Vector3d d = m.positions[(v + 1) % m.vertex_count()];
    double ang = vertex_cone_angle(m, v, d);
    CHECK(ang >= 0.0);
    CHECK(ang < kTwoPi);
  }
  CHECK_THROWS_AS(vertex_cone_angle(m, -1, Eigen::Vector3d::UnitX()), Error);
}

TEST_CASE("gauge transformation preserves curvature") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  Eigen::VectorXd phi(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    phi[v] = std::sin(0.7 * v) + 0.3 * std::cos(1.3 * v);
  Connection g = gauge_transformed(c, phi);
  CHECK(g.euler == c.euler);
  CHECK((g.omega - c.omega).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_NOTHROW(validate_connection(g));
  for (int e = 0; e < m.edge_count(); ++e) {
    int a = m.edges[e][0], b = m.edges[e][1];
    CHECK(g.rho[e] == doctest::Approx(c.rho[e] + phi[b] - phi[a]).epsilon(1e-12));
  }
}

TEST_CASE("connection save/load round trip") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m, 3.5);
  std::stringstream ss;
  save_connection(c, ss);
  Connection back = load_connection(m, ss);
  CHECK(back.euler == c.euler);
  CHECK(back.fiber_length == doctest::Approx(3.5));
  CHECK((back.rho - c.rho).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((back.omega - c.omega).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("connection loader rejects malformed input") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  std::stringstream bad1("bogus\n");
  CHECK_THROWS_AS(load_connection(m, bad1), Error);
  std::stringstream bad2("# e=2 L=6.283\nedge_i,edge_j,rho\n0,1,0.5\n");
  CHECK_THROWS_AS(load_connection(m, bad2), Error); // wrong edge count
}

TEST_CASE("min-norm curl solve hits its face sums") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Eigen::VectorXd b(m.face_count());
  for (int f = 0; f < m.face_count(); ++f) b[f] = std::sin(0.13 * f);
  b.array() -= b.mean();
  Eigen::VectorXd rho = solve_min_norm_curl(m, b);
  for (int f = 0; f < m.face_count(); ++f) {
    double sum = 0.0;
    for (int s = 0; s < 3; ++s)
      sum += m.face_sign[f][s] * rho[m.face_edges[f][s]];
    CHECK(sum == doctest::Approx(b[f]).epsilon(1e-8).scale(1.0));
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(m.face_count());
  CHECK_THROWS_AS(solve_min_norm_curl(m, bad), Error);
}

TEST_CASE("validation catches tampered data") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  Connection broken = c;
  broken.omega[0] += 0.5; // no longer rho's holonomy mod 2pi
  CHECK_THROWS_AS(validate_connection(broken), Error);
  Connection wrong_euler = c;
  wrong_euler.euler = 4;
  CHECK_THROWS_AS(validate_connection(wrong_euler), Error);
}
