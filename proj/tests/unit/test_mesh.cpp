#include <doctest.h>

#include "plate/mesh.hpp"

using namespace plate;

TEST_CASE("uniform mesh with the interface on a node") {
  const Mesh1D m = build_mesh(2.0, 0.5, 1.0, 3.0, 41);
  CHECK(m.nodes == 41);
  CHECK(m.spacing == doctest::Approx(0.05));
  CHECK(m.interface_index == 10);
  CHECK(m.x(m.interface_index) == doctest::Approx(0.5));
  CHECK(m.alpha(0) == 1.0);
  CHECK(m.alpha(10) == 1.0);
  CHECK(m.alpha(11) == 3.0);
  CHECK(m.alpha(40) == 3.0);
  CHECK(m.coordinates()(40) == doctest::Approx(2.0));
}

TEST_CASE("interface weight is the sum of the two half cells") {
  const Mesh1D m = build_mesh(1.0, 0.5, 1.0, 4.0, 21);
  const Vec w = m.metric_weights();
  const double h = m.spacing;
  CHECK(w(m.interface_index) == doctest::Approx(h / 2.0 + h / 8.0));
  CHECK(w(0) == doctest::Approx(h / 2.0));
  CHECK(w(20) == doctest::Approx(h / 8.0));
  CHECK(w(5) == doctest::Approx(h));
  CHECK(w(15) == doctest::Approx(h / 4.0));
  CHECK(m.quadrature_weights().sum() == doctest::Approx(1.0));
}

TEST_CASE("misaligned interface reports the nearest admissible position") {
  try {
    build_mesh(1.0, 0.53, 1.0, 2.0, 11);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.nearest_x0() == doctest::Approx(0.5));
    CHECK(std::string(e.what()).find("0.5") != std::string::npos);
  }
  CHECK(snap_interface(1.0, 0.97, 11) == doctest::Approx(0.9));
  CHECK(snap_interface(1.0, 0.01, 11) == doctest::Approx(0.1));
}

TEST_CASE("mesh validation") {
  CHECK_THROWS_AS(build_mesh(0.0, 0.5, 1.0, 1.0, 21), ValidationError);
  CHECK_THROWS_AS(build_mesh(1.0, 0.5, -1.0, 1.0, 21), ValidationError);
  CHECK_THROWS_AS(build_mesh(1.0, 0.5, 1.0, 0.0, 21), ValidationError);
  CHECK_THROWS_AS(build_mesh(1.0, 0.5, 1.0, 1.0, 4), ValidationError);
  CHECK_THROWS_AS(build_mesh(1.0, 1.0, 1.0, 1.0, 21), ValidationError);
  CHECK_THROWS_AS(build_mesh(1.0, 0.0, 1.0, 1.0, 21), ValidationError);
}

TEST_CASE("2D sampling grid") {
  const Grid2D g = build_grid(-1.0, 1.0, 0.0, 2.0, 21, 41);
  CHECK(g.dx() == doctest::Approx(0.1));
  CHECK(g.dy() == doctest::Approx(0.05));
  CHECK(g.point(20, 40).x() == doctest::Approx(1.0));
  CHECK(g.point(20, 40).y() == doctest::Approx(2.0));
  CHECK(g.contains(Vec2(0.0, 1.0)));
  CHECK_FALSE(g.contains(Vec2(1.1, 1.0)));
  CHECK(g.distance_to_boundary(Vec2(0.0, 0.3)) == doctest::Approx(0.3));
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 0.0, 1.0, 8, 32), ValidationError);
  CHECK_THROWS_AS(build_grid(1.0, 0.0, 0.0, 1.0, 32, 32), ValidationError);
}
