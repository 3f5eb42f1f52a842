#include "plate/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace plate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double bump_tail(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  if (((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 &&
      d4 != 0.0)
    return 0.0;
  return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                   point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

// Ends of the arc extended by ρ on both sides.
std::pair<Vec2, Vec2> support_segment(const Arc& arc, double rho) {
  const double len = arc.direction.norm();
  const Vec2 reach = (len + rho) / len * arc.direction;
  return {arc.center - reach, arc.center + reach};
}

// Sampled ψ₁ ∘ φ₁ without the flow when x sits outside the support.
double composed(const Polynomial2& psi1, const FlowSpec& spec, const Vec2& x) {
  if (flow_field(spec, x).isZero(0.0)) return psi1(x);
  return psi1(flow_map(spec, x, 1.0));
}

Vec2 composed_gradient(const Polynomial2& psi1, const FlowSpec& spec, const Vec2& x) {
  const double e = 1e-5;
  Vec2 g;
  for (int k = 0; k < 2; ++k) {
    Vec2 dx = Vec2::Zero();
    dx(k) = e;
    g(k) = (composed(psi1, spec, x + dx) - composed(psi1, spec, x - dx)) / (2.0 * e);
  }
  return g;
}

std::string point_string(const Vec2& p) {
  std::ostringstream s;
  s << "(" << p.x() << ", " << p.y() << ")";
  return s.str();
}

}  // namespace

double smooth_cutoff(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  const double inner = bump_tail(1.0 - r);
  return inner / (inner + bump_tail(r - 0.5));
}

Vec2 flow_field(const FlowSpec& spec, const Vec2& x) {
  Vec2 X = Vec2::Zero();
  const double rho = spec.tube_radius;
  for (const Arc& arc : spec.arcs) {
    const double len = arc.direction.norm();
    const Vec2 unit = arc.direction / len;
    const Vec2 rel = x - arc.center;
    const double along = rel.dot(unit);
    const double normal = (rel - along * unit).norm();
    const double overshoot = std::max(0.0, std::abs(along) - len);
    const double weight = smooth_cutoff(normal / rho) * smooth_cutoff(overshoot / rho);
    if (weight != 0.0) X += weight * arc.direction;
  }
  return X;
}

void validate_flow(const FlowSpec& spec, const Grid2D& region) {
  const double rho = spec.tube_radius;
  if (!(rho > 0.0)) throw GeometryError("tube_radius must be positive");
  if (!(spec.step > 0.0)) throw GeometryError("RK4 step must be positive");
  for (size_t k = 0; k < spec.arcs.size(); ++k) {
    const Arc& arc = spec.arcs[k];
    if (!(arc.direction.norm() > 0.0)) throw GeometryError("arc direction must be nonzero");
    const auto [a, b] = support_segment(arc, rho);
    for (const Vec2& end : {a, b}) {
      if (!region.contains(end) || region.distance_to_boundary(end) < 2.0 * rho) {
        std::ostringstream msg;
        msg << "arc " << k << " tube comes within tube_radius of the boundary near " << point_string(end);
        throw GeometryError(msg.str());
      }
    }
    for (size_t l = 0; l < k; ++l) {
      const auto [c, d] = support_segment(spec.arcs[l], rho);
      if (segment_distance(a, b, c, d) < 2.0 * rho) {
        std::ostringstream msg;
        msg << "arcs " << l << " and " << k << " are closer than 2 tube_radius";
        throw GeometryError(msg.str());
      }
    }
  }
}

Vec2 flow_map(const FlowSpec& spec, const Vec2& x, double time) {
  if (time == 0.0) return x;
  const auto steps = std::max<long long>(1, std::llround(std::abs(time) / spec.step));
  const double dt = time / static_cast<double>(steps);
  Vec2 y = x;
  for (long long n = 0; n < steps; ++n) {
    const Vec2 k1 = flow_field(spec, y);
    const Vec2 k2 = flow_field(spec, y + 0.5 * dt * k1);
    const Vec2 k3 = flow_field(spec, y + 0.5 * dt * k2);
    const Vec2 k4 = flow_field(spec, y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!y.allFinite()) throw NumericalError("RK4 flow produced a non-finite point");
  return y;
}

FlowReport flow_deform(const Polynomial2& psi1, const FlowSpec& spec, const Grid2D& region) {
  validate_flow(spec, region);
  FlowReport report;
  report.grid = region;
  report.critical_psi1 = find_critical_points(psi1, region);

  for (size_t k = 0; k < spec.arcs.size(); ++k) {
    const Arc& arc = spec.arcs[k];
    const auto match = std::find_if(report.critical_psi1.begin(), report.critical_psi1.end(),
                                    [&](const CriticalPoint& c) { return (c.x - arc.center).norm() <= 1e-8; });
    if (match == report.critical_psi1.end())
      throw ValidationError("arc " + std::to_string(k) + " is not centered on a critical point of psi1");
    const double up = psi1(arc.at(1.0)), down = psi1(arc.at(-1.0));
    if (std::abs(up - down) > 1e-8 || !(up > match->value + 1e-8))
      throw ValidationError("arc " + std::to_string(k) +
                            " ends must share a psi1 value above the critical value");
  }

  report.psi1.resize(region.nx, region.ny);
  report.psi2.resize(region.nx, region.ny);
  report.band_difference = 0.0;
  report.roundtrip_error = 0.0;
  for (Index i = 0; i < region.nx; ++i) {
    for (Index j = 0; j < region.ny; ++j) {
      const Vec2 x = region.point(i, j);
      report.psi1(i, j) = psi1(x);
      if (flow_field(spec, x).isZero(0.0)) {
        report.psi2(i, j) = report.psi1(i, j);
      } else {
        const Vec2 y = flow_map(spec, x, 1.0);
        report.psi2(i, j) = psi1(y);
        report.roundtrip_error = std::max(report.roundtrip_error, (flow_map(spec, y, -1.0) - x).norm());
      }
      if (region.distance_to_boundary(x) <= spec.tube_radius)
        report.band_difference = std::max(report.band_difference, std::abs(report.psi2(i, j) - report.psi1(i, j)));
    }
  }

  report.margin_i = kInf;
  report.margin_ii = kInf;
  report.exclusivity_gradient = kInf;
  for (const CriticalPoint& c : report.critical_psi1) {
    report.margin_i = std::min(report.margin_i, composed(psi1, spec, c.x) - c.value);
    report.exclusivity_gradient =
        std::min(report.exclusivity_gradient, composed_gradient(psi1, spec, c.x).norm());

    const Vec2 cp = flow_map(spec, c.x, -1.0);
    report.critical_psi2.push_back(cp);
    report.margin_ii = std::min(report.margin_ii, psi1(cp) - composed(psi1, spec, cp));
    report.exclusivity_gradient = std::min(report.exclusivity_gradient, psi1.gradient(cp).norm());
    report.critical_gradient_residual =
        std::max(report.critical_gradient_residual, composed_gradient(psi1, spec, cp).norm());
  }

  report.pass_i = report.margin_i > 0.0;
  report.pass_ii = report.margin_ii > 0.0;
  report.pass_iii = report.band_difference <= 1e-12;
  report.pass_roundtrip = report.roundtrip_error <= 1e-6;
  return report;
}

}  // namespace plate
