#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace plate {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Bad input parameters (non-positive lengths, negative damping, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Interface coordinate does not coincide with a grid node.
class AlignmentError : public ValidationError {
 public:
  AlignmentError(const std::string& what, double nearest)
      : ValidationError(what), nearest_x0_(nearest) {}
  double nearest_x0() const { return nearest_x0_; }

 private:
  double nearest_x0_;
};

// A numerical procedure failed (singular solve, non-convergence, blow-up).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a structural assumption (non-monotone energy, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flow arcs or sampling regions that do not fit the domain.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace plate
