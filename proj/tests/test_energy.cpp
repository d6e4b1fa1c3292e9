#include <doctest.h>

#include <cmath>
#include <vector>

#include "minsec/bundle.hpp"
#include "minsec/energy.hpp"
#include "minsec/mesh.hpp"
#include "minsec/section.hpp"

using namespace minsec;

namespace {

DiscreteSection random_section(const Connection& conn, Rng& rng) {
  Eigen::VectorXd theta(conn.mesh->vertex_count());
  for (int v = 0; v < conn.mesh->vertex_count(); ++v)
    theta[v] = kTwoPi * rng.next_double() - kPi;
  return DiscreteSection::make(conn, std::move(theta));
}

// Keep only sections whose side differences sit clear of the fold boundary,
// so central finite differences of the wrapped energy are smooth.
bool clear_of_fold(const DiscreteSection& sec, double margin) {
  for (int f = 0; f < sec.mesh->face_count(); ++f)
    for (int s = 0; s < 3; ++s)
      if (kPi - std::abs(side_difference(sec, f, s)) < margin) return false;
  return true;
}

} // namespace

TEST_CASE("constant section on a flat bundle: volume is the area") {
  SurfaceMesh m = make_flat_torus(12, 12, 1.0, 1.0);
  Connection c = make_connection(m, 0);
  DiscreteSection s =
      DiscreteSection::make(c, Eigen::VectorXd::Constant(m.vertex_count(), 1.2));
  CHECK(volume(s) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(twisting(s) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(stretched_volume(s, 10.0) ==
        doctest::Approx(0.1).epsilon(1e-12)); // area / lambda
}

TEST_CASE("volume dominates area and twisting") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    DiscreteSection s = random_section(c, rng);
    double vol = volume(s);
    CHECK(vol >= m.total_area());
    CHECK(vol >= twisting(s));
  }
}

TEST_CASE("corrected differences close up to the face index") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  Rng rng(29);
  DiscreteSection s = random_section(c, rng);
  for (int f = 0; f < m.face_count(); ++f) {
    auto d = corrected_differences(s, f);
    CHECK(d[0] + d[1] + d[2] ==
          doctest::Approx(kTwoPi * face_index(s, f)).epsilon(1e-9).scale(1.0));
    for (int side = 0; side < 3; ++side)
      CHECK(d[side] ==
            doctest::Approx(side_difference(s, f, side) + c.omega[f] / 3.0)
                .epsilon(1e-12)
                .scale(1.0));
  }
}

TEST_CASE("covariant gradient reproduces the corrected differences") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  Rng rng(31);
  DiscreteSection s = random_section(c, rng);
  for (int f = 0; f < m.face_count(); ++f) {
    if (face_index(s, f) != 0) continue;
    Eigen::Vector2d g = covariant_gradient(s, f);
    auto d = corrected_differences(s, f);
    for (int side = 0; side < 3; ++side)
      CHECK(g.dot(m.side_vector(f, side)) ==
            doctest::Approx(d[side]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("energy values against a hand integration") {
  // one flat right triangle, flat bundle, linear section: q is constant
  std::vector<Eigen::Vector3d> pos = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  SurfaceMesh m = build_surface_mesh(pos, {{0, 1, 2}}, true);
  Connection c = make_connection(m, 0);
  Eigen::VectorXd theta(3);
  theta << 0.0, 0.4, 0.7; // grad = (0.4, 0.7), q = 0.65
  DiscreteSection s = DiscreteSection::make(c, theta);
  double q = 0.4 * 0.4 + 0.7 * 0.7;
  CHECK(volume(s) == doctest::Approx(0.5 * std::sqrt(1.0 + q)).epsilon(1e-12));
  CHECK(twisting(s) == doctest::Approx(0.5 * std::sqrt(q)).epsilon(1e-12));
  CHECK(stretched_volume(s, 4.0) ==
        doctest::Approx(0.5 * std::sqrt(1.0 / 16.0 + q)).epsilon(1e-12));
  // fiber length rescales s = L / 2pi
  Connection c2 = make_connection(m, 0, kTwoPi * 2.0);
  DiscreteSection s2 = DiscreteSection::make(c2, theta);
  CHECK(volume(s2) == doctest::Approx(0.5 * std::sqrt(1.0 + 4.0 * q)).epsilon(1e-12));
}

TEST_CASE("gradient matches finite differences on all functionals") {
  Rng rng(41);
  SurfaceMesh sphere = make_icosphere(1, 1.0);
  SurfaceMesh torus = make_flat_torus(6, 6, 1.0, 1.0);
  Connection cs = levi_civita_connection(sphere);
  Connection ct = make_connection(torus, 0);
  std::vector<Functional> fns = {Functional::volume(), Functional::twisting(1e-3),
                                 Functional::stretched(8.0)};
  const double h = 1e-6;
  int tested = 0;
  for (const Connection* conn : {&cs, &ct}) {
    for (int trial = 0; trial < 12 && tested < 8; ++trial) {
      DiscreteSection s = random_section(*conn, rng);
      if (!clear_of_fold(s, 0.05)) continue;
      ++tested;
      for (const auto& fn : fns) {
        Eigen::VectorXd g = energy_gradient(s, fn);
        for (int v = 0; v < conn->mesh->vertex_count(); v += 7) {
          Eigen::VectorXd tp = s.theta, tm = s.theta;
          tp[v] += h;
          tm[v] -= h;
          double ep = energy_value(DiscreteSection::make(*conn, tp), fn);
          double em = energy_value(DiscreteSection::make(*conn, tm), fn);
          double fd = (ep - em) / (2.0 * h);
          CHECK(g[v] == doctest::Approx(fd).epsilon(2e-5).scale(1.0));
        }
      }
    }
  }
  CHECK(tested >= 4);
}

TEST_CASE("gradient differentiates through singular-face refinement") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 2);
  Rng rng(43);
  DiscreteSection s = random_section(c, rng);
  REQUIRE(total_index(s) == 2);
  EvalOptions opts{3};
  Eigen::VectorXd g = energy_gradient(s, Functional::volume(), opts);
  const double h = 1e-6;
  // check vertices of one singular face and its neighbors
  int fs = -1;
  for (int f = 0; f < m.face_count() && fs < 0; ++f)
    if (face_index(s, f) != 0) fs = f;
  REQUIRE(fs >= 0);
  for (int corner = 0; corner < 3; ++corner) {
    int v = m.faces[fs][corner];
    Eigen::VectorXd tp = s.theta, tm = s.theta;
    tp[v] += h;
    tm[v] -= h;
    DiscreteSection sp = DiscreteSection::make(c, tp);
    DiscreteSection sm = DiscreteSection::make(c, tm);
    if (face_index(sp, fs) != face_index(s, fs) ||
        face_index(sm, fs) != face_index(s, fs))
      continue; // stepped over the fold
    double fd = (energy_value(sp, Functional::volume(), opts) -
                 energy_value(sm, Functional::volume(), opts)) /
                (2.0 * h);
    CHECK(g[v] == doctest::Approx(fd).epsilon(5e-5).scale(1.0));
  }
}

TEST_CASE("refinement depth converges on singular faces") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  Rng rng(47);
  DiscreteSection s = random_section(c, rng);
  double v3 = volume(s, EvalOptions{3});
  double v4 = volume(s, EvalOptions{4});
  double v5 = volume(s, EvalOptions{5});
  CHECK(std::abs(v5 - v4) < std::abs(v4 - v3));
  CHECK(std::abs(v5 - v4) < 0.02 * v5); // a random section is as rough as it gets
}

TEST_CASE("stretched family: monotone in lambda, squeezed toward twisting") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  Rng rng(53);
  double area = m.total_area();
  for (int trial = 0; trial < 5; ++trial) {
    DiscreteSection s = random_section(c, rng);
    double tw = twisting(s);
    double prev = volume(s); // lambda = 1 coincides with volume
    CHECK(stretched_volume(s, 1.0) == doctest::Approx(prev).epsilon(1e-12));
    for (double lam : {2.0, 10.0, 100.0, 1000.0}) {
      double val = stretched_volume(s, lam);
      CHECK(val <= prev + 1e-12);
      CHECK(val >= tw - 1e-12);
      CHECK(val - tw <= area / lam + 1e-12);
      prev = val;
    }
  }
}

TEST_CASE("smoothed twisting approaches the exact value") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  Rng rng(59);
  DiscreteSection s = random_section(c, rng);
  double exact = twisting(s);
  double prev_gap = twisting_smoothed(s, 1e-1) - exact;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    double gap = twisting_smoothed(s, eps) - exact;
    CHECK(gap >= 0.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3 * (1.0 + exact));
}

TEST_CASE("energy report bundles the family consistently") {
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = levi_civita_connection(m);
  Rng rng(61);
  DiscreteSection s = random_section(c, rng);
  EnergyReport rep = evaluate_energies(s, {10.0, 100.0, 1000.0});
  CHECK(rep.volume == doctest::Approx(volume(s)).epsilon(1e-12));
  CHECK(rep.twisting == doctest::Approx(twisting(s)).epsilon(1e-12));
  REQUIRE(rep.lambda_table.size() == 3);
  double prev = rep.volume;
  for (const auto& entry : rep.lambda_table) {
    CHECK(entry.value <= prev + 1e-12);
    CHECK(entry.value - rep.twisting <= m.total_area() / entry.lambda + 1e-12);
    prev = entry.value;
  }
  int nsing = 0;
  for (int f = 0; f < m.face_count(); ++f) {
    if (face_index(s, f) != 0) {
      ++nsing;
      CHECK(rep.gradient_norm[f] == 0.0);
    } else {
      CHECK(rep.gradient_norm[f] >= 0.0);
    }
  }
  CHECK(rep.singular_faces == nsing);
  CHECK_THROWS_AS(evaluate_energies(s, {0.5}), Error); // lambda < 1
}

TEST_CASE("mass ratio profile is monotone around an isolated singularity") {
  // exercised against the exact cone elsewhere; here: structure only
  SurfaceMesh m = make_icosphere(2, 1.0);
  Connection c = make_connection(m, 2);
  Rng rng(67);
  DiscreteSection s = random_section(c, rng);
  std::vector<double> radii = {0.2, 0.4, 0.6};
  auto prof = mass_ratio_profile(s, 0, radii);
  REQUIRE(prof.size() == 3);
  for (size_t i = 0; i < prof.size(); ++i) {
    CHECK(prof[i].t == doctest::Approx(radii[i]));
    CHECK(prof[i].mass > 0.0);
    CHECK(prof[i].ratio == doctest::Approx(prof[i].mass / prof[i].t));
    if (i > 0) CHECK(prof[i].mass > prof[i - 1].mass);
  }
  CHECK_THROWS_AS(mass_ratio_profile(s, -1, radii), Error);
  std::vector<double> bad = {0.4, 0.2};
  CHECK_THROWS_AS(mass_ratio_profile(s, 0, bad), Error);
}

TEST_CASE("regularity check flags spikes only") {
  // large enough that one vertex star stays under the percentile window
  SurfaceMesh m = make_flat_torus(30, 30, 1.0, 1.0);
  Connection c = make_connection(m, 0);
  DiscreteSection s =
      DiscreteSection::make(c, Eigen::VectorXd::Zero(m.vertex_count()));
  CHECK(regularity_check(s).empty());
  // one vertex pulled far off a smooth field makes its star spike
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    theta[v] = 0.05 * std::sin(kTwoPi * (v % 30) / 30.0);
  theta[444] += 2.5;
  DiscreteSection spiky = DiscreteSection::make(c, theta);
  REQUIRE(total_index(spiky) == 0);
  auto flagged = regularity_check(spiky);
  CHECK(!flagged.empty());
  for (int f : flagged) CHECK(m.corner_of(f, 444) >= 0); // only the star
}

TEST_CASE("functional validation") {
  SurfaceMesh m = make_icosphere(1, 1.0);
  Connection c = make_connection(m, 0);
  DiscreteSection s =
      DiscreteSection::make(c, Eigen::VectorXd::Zero(m.vertex_count()));
  CHECK_THROWS_AS(stretched_volume(s, 0.5), Error);
  CHECK_THROWS_AS(twisting_smoothed(s, -1.0), Error);
  CHECK_THROWS_AS(volume(s, EvalOptions{-1}), Error);
}
