#include "plate/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace plate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Powers 0..4 of t.
std::array<double, 5> powers(double t) {
  std::array<double, 5> p{};
  p[0] = 1.0;
  for (int i = 1; i < 5; ++i) p[static_cast<size_t>(i)] = p[static_cast<size_t>(i - 1)] * t;
  return p;
}

Vec2 quarter_turn(const Vec2& v) { return Vec2(-v.y(), v.x()); }

std::string point_string(const Vec2& p) {
  std::ostringstream s;
  s << "(" << p.x() << ", " << p.y() << ")";
  return s.str();
}

}  // namespace

Polynomial2::Polynomial2(const Coefficients& c) : c_(c) {
  for (int i = 0; i <= kMaxDegree; ++i)
    for (int j = 0; j <= kMaxDegree; ++j)
      if (i + j > kMaxDegree && c(i, j) != 0.0)
        throw ValidationError("weight polynomial exceeds total degree 4");
}

Polynomial2 Polynomial2::from_terms(const std::vector<std::tuple<int, int, double>>& terms) {
  Coefficients c = Coefficients::Zero();
  for (const auto& [i, j, value] : terms) {
    if (i < 0 || j < 0 || i + j > kMaxDegree) {
      std::ostringstream msg;
      msg << "monomial x^" << i << " y^" << j << " exceeds total degree 4";
      throw ValidationError(msg.str());
    }
    if (!std::isfinite(value)) throw ValidationError("weight coefficient is not finite");
    c(i, j) += value;
  }
  return Polynomial2(c);
}

double Polynomial2::operator()(const Vec2& p) const {
  const auto px = powers(p.x());
  const auto py = powers(p.y());
  double sum = 0.0;
  for (int i = 0; i <= kMaxDegree; ++i)
    for (int j = 0; i + j <= kMaxDegree; ++j) sum += c_(i, j) * px[static_cast<size_t>(i)] * py[static_cast<size_t>(j)];
  return sum;
}

Vec2 Polynomial2::gradient(const Vec2& p) const {
  const auto px = powers(p.x());
  const auto py = powers(p.y());
  Vec2 g = Vec2::Zero();
  for (int i = 0; i <= kMaxDegree; ++i) {
    for (int j = 0; i + j <= kMaxDegree; ++j) {
      const double c = c_(i, j);
      if (c == 0.0) continue;
      if (i > 0) g.x() += c * i * px[static_cast<size_t>(i - 1)] * py[static_cast<size_t>(j)];
      if (j > 0) g.y() += c * j * px[static_cast<size_t>(i)] * py[static_cast<size_t>(j - 1)];
    }
  }
  return g;
}

Mat2 Polynomial2::hessian(const Vec2& p) const {
  const auto px = powers(p.x());
  const auto py = powers(p.y());
  Mat2 H = Mat2::Zero();
  for (int i = 0; i <= kMaxDegree; ++i) {
    for (int j = 0; i + j <= kMaxDegree; ++j) {
      const double c = c_(i, j);
      if (c == 0.0) continue;
      const auto ui = static_cast<size_t>(i);
      const auto uj = static_cast<size_t>(j);
      if (i > 1) H(0, 0) += c * i * (i - 1) * px[ui - 2] * py[uj];
      if (j > 1) H(1, 1) += c * j * (j - 1) * px[ui] * py[uj - 2];
      if (i > 0 && j > 0) H(0, 1) += c * i * j * px[ui - 1] * py[uj - 1];
    }
  }
  H(1, 0) = H(0, 1);
  return H;
}

bool Polynomial2::is_constant() const {
  for (int i = 0; i <= kMaxDegree; ++i)
    for (int j = 0; j <= kMaxDegree; ++j)
      if (i + j > 0 && c_(i, j) != 0.0) return false;
  return true;
}

double WeightFunction::phi(const Vec2& x) const { return std::exp(lambda_c * psi(x)); }

Vec2 WeightFunction::grad_phi(const Vec2& x) const { return lambda_c * phi(x) * psi.gradient(x); }

Mat2 WeightFunction::hess_phi(const Vec2& x) const {
  const Vec2 g = psi.gradient(x);
  return phi(x) * (lambda_c * lambda_c * g * g.transpose() + lambda_c * psi.hessian(x));
}

Complex conjugated_symbol(const WeightFunction& w, const Vec2& x, const Vec2& xi) {
  const Vec2 g = w.grad_phi(x);
  return {xi.squaredNorm() - g.squaredNorm(), 2.0 * xi.dot(g)};
}

double poisson_bracket(const WeightFunction& w, const Vec2& x, const Vec2& xi) {
  const Vec2 g = w.grad_phi(x);
  const Mat2 H = w.hess_phi(x);
  // Re p = |ξ|² - |∇φ|², Im p = 2 ⟨ξ, ∇φ⟩.
  const Vec2 dxi_re = 2.0 * xi;
  const Vec2 dx_re = -2.0 * H * g;
  const Vec2 dxi_im = 2.0 * g;
  const Vec2 dx_im = 2.0 * H * xi;
  return dxi_re.dot(dx_im) - dx_re.dot(dxi_im);
}

double bracket_closed_form(const WeightFunction& w, const Vec2& x, const Vec2& xi, BracketForm form) {
  const double lam = w.lambda_c;
  const double e = w.phi(x);
  const Vec2 g = w.psi.gradient(x);
  const Mat2 H = w.psi.hessian(x);
  const double g2 = g.squaredNorm();
  const double lead = form == BracketForm::Printed ? g2 : g2 * g2;
  return 4.0 * lam * e * xi.dot(H * xi) +
         4.0 * e * e * e * (std::pow(lam, 4) * lead + std::pow(lam, 3) * g.dot(H * g));
}

std::vector<Vec2> characteristic_covectors(const WeightFunction& w, const Vec2& x) {
  const Vec2 g = w.grad_phi(x);
  if (g.squaredNorm() == 0.0) return {};
  const Vec2 xi = quarter_turn(g);
  return {xi, -xi};
}

std::vector<CriticalPoint> find_critical_points(const Polynomial2& psi, const Grid2D& grid,
                                                bool require_morse) {
  if (psi.is_constant()) {
    if (require_morse) throw ValidationError("constant weight: every point is a degenerate critical point");
    return {{Vec2(0.5 * (grid.x_lo + grid.x_hi), 0.5 * (grid.y_lo + grid.y_hi)), psi(Vec2::Zero()), 0.0}};
  }
  Mat gnorm(grid.nx, grid.ny);
  for (Index i = 0; i < grid.nx; ++i)
    for (Index j = 0; j < grid.ny; ++j) gnorm(i, j) = psi.gradient(grid.point(i, j)).norm();

  const double diameter = std::hypot(grid.x_hi - grid.x_lo, grid.y_hi - grid.y_lo);
  const double merge = 1e-7 * std::max(1.0, diameter);
  std::vector<CriticalPoint> found;
  for (Index i = 0; i < grid.nx; ++i) {
    for (Index j = 0; j < grid.ny; ++j) {
      bool minimum = true;
      for (Index di = -1; di <= 1 && minimum; ++di)
        for (Index dj = -1; dj <= 1; ++dj) {
          const Index k = i + di, l = j + dj;
          if ((di == 0 && dj == 0) || k < 0 || l < 0 || k >= grid.nx || l >= grid.ny) continue;
          if (gnorm(k, l) < gnorm(i, j)) {
            minimum = false;
            break;
          }
        }
      if (!minimum) continue;

      Vec2 x = grid.point(i, j);
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        const Vec2 g = psi.gradient(x);
        if (g.norm() <= 1e-10) {
          converged = true;
          break;
        }
        const Mat2 H = psi.hessian(x);
        if (std::abs(H.determinant()) < 1e-14) break;
        x -= H.inverse() * g;
        if (!x.allFinite()) break;
      }
      if (!converged || !grid.contains(x, 1e-12)) continue;
      const bool duplicate = std::any_of(found.begin(), found.end(),
                                         [&](const CriticalPoint& c) { return (c.x - x).norm() <= merge; });
      if (duplicate) continue;
      const double det = psi.hessian(x).determinant();
      if (require_morse && std::abs(det) < 1e-8)
        throw ValidationError("degenerate critical point at " + point_string(x) + " (|det psi''| < 1e-8)");
      found.push_back({x, psi(x), det});
    }
  }
  std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    if (a.x.x() != b.x.x()) return a.x.x() < b.x.x();
    return a.x.y() < b.x.y();
  });
  return found;
}

SubellipticityReport verify_subellipticity(const WeightFunction& w, const Grid2D& region, Index n_xi) {
  if (n_xi < 8) throw ValidationError("n_xi must be at least 8");
  if (!(w.lambda_c > 0.0)) throw ValidationError("lambda_c must be positive");

  SubellipticityReport report;
  report.point_min = Mat::Constant(region.nx, region.ny, kNaN);
  report.min_bracket = std::numeric_limits<double>::infinity();

  for (Index i = 0; i < region.nx; ++i) {
    for (Index j = 0; j < region.ny; ++j) {
      const Vec2 x = region.point(i, j);
      const auto covectors = characteristic_covectors(w, x);
      if (covectors.empty()) continue;
      const double scale = 2.0 * w.grad_phi(x).squaredNorm();
      double local = std::numeric_limits<double>::infinity();
      for (const Vec2& xi : covectors) {
        report.max_symbol_residual =
            std::max(report.max_symbol_residual, std::abs(conjugated_symbol(w, x, xi)) / scale);
        local = std::min(local, poisson_bracket(w, x, xi));
        ++report.samples;
      }
      report.point_min(i, j) = local;
      if (local < report.min_bracket) {
        report.min_bracket = local;
        report.argmin = x;
      }
    }
  }

  const auto critical = find_critical_points(w.psi, region, false);
  if (!critical.empty()) {
    report.has_witness = true;
    report.witness = critical.front().x;
    report.reason = "grad psi vanishes at " + point_string(report.witness) + " inside the region";
  } else if (!(report.min_bracket > 0.0)) {
    report.has_witness = true;
    report.witness = report.argmin;
    report.reason = "bracket is not positive at " + point_string(report.argmin);
  }
  report.certified = !report.has_witness;
  if (report.certified) report.reason = "bracket positive on all characteristic samples";
  return report;
}

Side parse_side(const std::string& name) {
  if (name == "left") return Side::Left;
  if (name == "right") return Side::Right;
  if (name == "bottom") return Side::Bottom;
  if (name == "top") return Side::Top;
  throw ValidationError("unknown side '" + name + "' (left, right, bottom, top)");
}

std::string side_name(Side side) {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "left";
}

namespace {

Vec2 outward_normal(Side side) {
  switch (side) {
    case Side::Left: return {-1.0, 0.0};
    case Side::Right: return {1.0, 0.0};
    case Side::Bottom: return {0.0, -1.0};
    case Side::Top: return {0.0, 1.0};
  }
  return {-1.0, 0.0};
}

// Distance to the side and its gradient.
std::pair<double, Vec2> side_distance(const Grid2D& g, Side side, const Vec2& x) {
  switch (side) {
    case Side::Left: return {x.x() - g.x_lo, Vec2(1.0, 0.0)};
    case Side::Right: return {g.x_hi - x.x(), Vec2(-1.0, 0.0)};
    case Side::Bottom: return {x.y() - g.y_lo, Vec2(0.0, 1.0)};
    case Side::Top: return {g.y_hi - x.y(), Vec2(0.0, -1.0)};
  }
  return {0.0, Vec2::Zero()};
}

// Grid indices along a side, in order.
std::vector<std::pair<Index, Index>> side_nodes(const Grid2D& g, Side side) {
  std::vector<std::pair<Index, Index>> nodes;
  const bool vertical = side == Side::Left || side == Side::Right;
  const Index count = vertical ? g.ny : g.nx;
  for (Index k = 0; k < count; ++k) {
    switch (side) {
      case Side::Left: nodes.emplace_back(0, k); break;
      case Side::Right: nodes.emplace_back(g.nx - 1, k); break;
      case Side::Bottom: nodes.emplace_back(k, 0); break;
      case Side::Top: nodes.emplace_back(k, g.ny - 1); break;
    }
  }
  return nodes;
}

Vec trapezoid(Index n, double step) {
  Vec w = Vec::Constant(n, step);
  w(0) *= 0.5;
  w(n - 1) *= 0.5;
  return w;
}

}  // namespace

double ManufacturedField::value(const Grid2D& g, const Vec2& x) const {
  const double eta = side_distance(g, gamma, x).first + eta_offset;
  const Vec2 r = x - center;
  return amplitude * eta * std::exp(-r.squaredNorm() / (2.0 * sigma * sigma));
}

Vec2 ManufacturedField::gradient(const Grid2D& g, const Vec2& x) const {
  const auto [dist, deta] = side_distance(g, gamma, x);
  const double eta = dist + eta_offset;
  const Vec2 r = x - center;
  const double s2 = sigma * sigma;
  const double bump = std::exp(-r.squaredNorm() / (2.0 * s2));
  return amplitude * bump * (deta - eta * r / s2);
}

double ManufacturedField::laplacian(const Grid2D& g, const Vec2& x) const {
  const auto [dist, deta] = side_distance(g, gamma, x);
  const double eta = dist + eta_offset;
  const Vec2 r = x - center;
  const double s2 = sigma * sigma;
  const double bump = std::exp(-r.squaredNorm() / (2.0 * s2));
  const Vec2 grad_bump = -bump * r / s2;
  const double lap_bump = bump * (r.squaredNorm() / (s2 * s2) - 2.0 / s2);
  return amplitude * (2.0 * deta.dot(grad_bump) + eta * lap_bump);
}

CarlemanReport carleman_inequality_check(const WeightFunction& w, const Grid2D& grid,
                                         const ManufacturedField& u, const std::vector<double>& h_values) {
  if (h_values.empty()) throw ValidationError("h_values must be nonempty");
  for (size_t k = 0; k < h_values.size(); ++k) {
    if (!(h_values[k] > 0.0)) throw ValidationError("h_values must be positive");
    if (k > 0 && !(h_values[k] < h_values[k - 1])) throw ValidationError("h_values must be decreasing");
  }
  if (!(u.sigma > 0.0)) throw ValidationError("bump sigma must be positive");

  const auto gamma_nodes = side_nodes(grid, u.gamma);
  const Vec2 n_gamma = outward_normal(u.gamma);
  double u_scale = 0.0;
  for (Index i = 0; i < grid.nx; ++i)
    for (Index j = 0; j < grid.ny; ++j) u_scale = std::max(u_scale, std::abs(u.value(grid, grid.point(i, j))));
  for (const auto& [i, j] : gamma_nodes) {
    const Vec2 x = grid.point(i, j);
    if (std::abs(u.value(grid, x)) > 1e-12 * std::max(1.0, u_scale))
      throw ValidationError("u does not vanish on gamma at " + point_string(x));
    if (!(w.psi.gradient(x).dot(n_gamma) < 0.0))
      throw ValidationError("d_nu psi must be negative on gamma (outward normal); fails at " + point_string(x));
  }
  const SubellipticityReport sub = verify_subellipticity(w, grid, 8);
  if (!sub.certified)
    throw ValidationError("sub-ellipticity not certified on the region (see verify_subellipticity): " +
                          sub.reason);

  const Vec wx = trapezoid(grid.nx, grid.dx());
  const Vec wy = trapezoid(grid.ny, grid.dy());
  Mat phi(grid.nx, grid.ny), u2(grid.nx, grid.ny), grad2(grid.nx, grid.ny), f2(grid.nx, grid.ny);
  for (Index i = 0; i < grid.nx; ++i) {
    for (Index j = 0; j < grid.ny; ++j) {
      const Vec2 x = grid.point(i, j);
      phi(i, j) = w.phi(x);
      u2(i, j) = std::pow(u.value(grid, x), 2);
      grad2(i, j) = u.gradient(grid, x).squaredNorm();
      f2(i, j) = std::pow(u.laplacian(grid, x), 2);
    }
  }

  struct BoundaryNode {
    Index i, j;
    double weight;
    double u2, dnu2;
  };
  std::vector<BoundaryNode> boundary;
  for (Side side : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
    if (side == u.gamma) continue;
    const auto nodes = side_nodes(grid, side);
    const bool vertical = side == Side::Left || side == Side::Right;
    const Vec weights = vertical ? wy : wx;
    const Vec2 normal = outward_normal(side);
    for (size_t k = 0; k < nodes.size(); ++k) {
      const auto [i, j] = nodes[k];
      const Vec2 x = grid.point(i, j);
      boundary.push_back({i, j, weights(static_cast<Index>(k)), std::pow(u.value(grid, x), 2),
                          std::pow(u.gradient(grid, x).dot(normal), 2)});
    }
  }

  CarlemanReport report;
  report.h_values = h_values;
  const double phi_max = phi.maxCoeff();
  for (const double h : h_values) {
    const double shift = 2.0 * phi_max / h;
    const Mat weight = ((2.0 / h) * phi.array() - shift).exp().matrix();
    double i_u = 0.0, i_grad = 0.0, i_f = 0.0;
    for (Index i = 0; i < grid.nx; ++i) {
      for (Index j = 0; j < grid.ny; ++j) {
        const double q = wx(i) * wy(j) * weight(i, j);
        i_u += q * u2(i, j);
        i_grad += q * grad2(i, j);
        i_f += q * f2(i, j);
      }
    }
    double b_u = 0.0, b_dnu = 0.0;
    for (const auto& node : boundary) {
      const double q = node.weight * weight(node.i, node.j);
      b_u += q * node.u2;
      b_dnu += q * node.dnu2;
    }
    const double lhs = h * i_u + h * h * h * i_grad;
    const double rhs = std::pow(h, 4) * i_f + h * b_u + h * h * h * b_dnu;
    report.lhs.push_back(lhs);
    report.rhs.push_back(rhs);
    report.log_scale.push_back(shift);
    if (rhs > 0.0)
      report.ratios.push_back(lhs / rhs);
    else if (lhs == 0.0)
      report.ratios.push_back(0.0);
    else
      throw NumericalError("Carleman right-hand side vanishes with a positive left-hand side");
  }

  report.max_ratio = *std::max_element(report.ratios.begin(), report.ratios.end());
  std::vector<double> positive;
  for (double r : report.ratios)
    if (r > 0.0) positive.push_back(r);
  report.min_ratio = *std::min_element(report.ratios.begin(), report.ratios.end());
  if (positive.size() >= 2)
    report.spread = *std::max_element(positive.begin(), positive.end()) /
                    *std::min_element(positive.begin(), positive.end());
  return report;
}

}  // namespace plate
