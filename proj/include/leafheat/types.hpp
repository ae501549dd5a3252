#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <boost/multiprecision/float128.hpp>

namespace leafheat {

// Phase points and tangent vectors live in R^3; two-dimensional systems leave
// the third component at zero.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Point = Vec3;
using TangentVector = Vec3;

// Extended precision is reserved for orbit segments whose errors are
// amplified by the dynamics (leaf tracing, deep backward orbits).
using Quad = boost::multiprecision::float128;
using QPoint = std::array<Quad, 3>;

inline QPoint to_quad(const Point& p) { return {Quad(p[0]), Quad(p[1]), Quad(p[2])}; }
inline Point to_double(const QPoint& q) {
  return {static_cast<double>(q[0]), static_cast<double>(q[1]), static_cast<double>(q[2])};
}

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: violated preconditions, malformed configs, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver its postcondition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace leafheat
