#include <doctest.h>

#include <cmath>

#include "plate/flow.hpp"

using namespace plate;

namespace {

Polynomial2 saddle() { return Polynomial2::from_terms({{0, 2, 1.0}, {2, 0, -1.0}, {4, 0, 0.1}, {0, 4, 0.1}}); }

FlowSpec vertical_arc() {
  FlowSpec spec;
  spec.arcs.push_back(Arc{Vec2(0.0, 0.0), Vec2(0.0, 0.5)});
  return spec;
}

}  // namespace

TEST_CASE("smooth cutoff") {
  CHECK(smooth_cutoff(0.0) == 1.0);
  CHECK(smooth_cutoff(0.5) == 1.0);
  CHECK(smooth_cutoff(1.0) == 0.0);
  CHECK(smooth_cutoff(3.0) == 0.0);
  CHECK(smooth_cutoff(0.75) == doctest::Approx(0.5));
  double prev = 1.0;
  for (double r = 0.5; r <= 1.0; r += 0.01) {
    CHECK(smooth_cutoff(r) <= prev);
    prev = smooth_cutoff(r);
  }
}

TEST_CASE("field is the arc velocity on the arc and vanishes away from the tube") {
  const FlowSpec spec = vertical_arc();
  CHECK((flow_field(spec, Vec2(0.0, 0.2)) - Vec2(0.0, 0.5)).norm() == 0.0);
  CHECK(flow_field(spec, Vec2(0.2, 0.0)).norm() == 0.0);
  CHECK(flow_field(spec, Vec2(0.0, 0.75)).norm() == 0.0);
  const Vec2 far(0.5, 0.5);
  CHECK(flow_map(spec, far, 1.0) == far);
  const Vec2 p(0.01, -0.2);
  CHECK((flow_map(spec, flow_map(spec, p, 1.0), -1.0) - p).norm() <= 1e-10);
  // The arc center travels to γ(1).
  CHECK((flow_map(spec, Vec2(0.0, 0.0), 1.0) - Vec2(0.0, 0.5)).norm() <= 1e-10);
}

TEST_CASE("no arcs leaves the weight unchanged") {
  const Grid2D region = build_grid(-1.0, 1.0, -1.0, 1.0, 21, 21);
  const FlowReport r = flow_deform(saddle(), FlowSpec{}, region);
  CHECK((r.psi1 - r.psi2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.band_difference == 0.0);
  CHECK(r.roundtrip_error == 0.0);
}

TEST_CASE("saddle deformation satisfies the weight-pair conditions") {
  const Grid2D region = build_grid(-1.0, 1.0, -1.0, 1.0, 41, 41);
  const FlowReport r = flow_deform(saddle(), vertical_arc(), region);
  REQUIRE(r.critical_psi1.size() == 1);
  REQUIRE(r.critical_psi2.size() == 1);
  CHECK((r.critical_psi2.front() - Vec2(0.0, -0.5)).norm() <= 1e-8);
  const double lift = 0.25 + 0.1 * 0.0625;
  CHECK(r.margin_i == doctest::Approx(lift).epsilon(1e-8));
  CHECK(r.margin_ii == doctest::Approx(lift).epsilon(1e-8));
  CHECK(r.band_difference == 0.0);
  CHECK(r.roundtrip_error <= 1e-8);
  CHECK(r.critical_gradient_residual <= 1e-4);
  CHECK(r.exclusivity_gradient > 0.1);
  CHECK(r.pass());
}

TEST_CASE("flow geometry is validated") {
  const Grid2D region = build_grid(-1.0, 1.0, -1.0, 1.0, 41, 41);
  FlowSpec near_edge;
  near_edge.arcs.push_back(Arc{Vec2(0.0, 0.0), Vec2(0.0, 0.85)});
  CHECK_THROWS_AS(validate_flow(near_edge, region), GeometryError);
  FlowSpec crowded = vertical_arc();
  crowded.arcs.push_back(Arc{Vec2(0.15, 0.0), Vec2(0.0, 0.5)});
  CHECK_THROWS_AS(validate_flow(crowded, region), GeometryError);
  FlowSpec flat = vertical_arc();
  flat.tube_radius = 0.0;
  CHECK_THROWS_AS(validate_flow(flat, region), GeometryError);
  CHECK_NOTHROW(validate_flow(vertical_arc(), region));

  FlowSpec off_center;
  off_center.arcs.push_back(Arc{Vec2(0.2, 0.0), Vec2(0.0, 0.5)});
  CHECK_THROWS_AS(flow_deform(saddle(), off_center, region), ValidationError);
  FlowSpec lopsided;
  lopsided.arcs.push_back(Arc{Vec2(0.0, 0.0), Vec2(0.3, 0.4)});
  CHECK_NOTHROW(flow_deform(saddle(), lopsided, region));
  FlowSpec downhill;
  downhill.arcs.push_back(Arc{Vec2(0.0, 0.0), Vec2(0.5, 0.0)});
  CHECK_THROWS_AS(flow_deform(saddle(), downhill, region), ValidationError);
}
