#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace glat {

using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;
using FaceIndex = std::size_t;

// Coordinates on the base manifold. Fixed capacity avoids heap traffic in the
// holonomy integrator; dimensions above 4 are not supported.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;

template <typename Scalar, int N>
using SquareMatrix = Eigen::Matrix<std::complex<Scalar>, N, N>;

// Fundamental representation of U(1) (N = 1) or SU(N) (N >= 2).
template <int N, typename Scalar = double>
using GroupElement = SquareMatrix<Scalar, N>;

// Anti-Hermitian N x N matrix; traceless for N >= 2.
template <int N, typename Scalar = double>
using AlgebraElement = SquareMatrix<Scalar, N>;

enum class GroupKind { U1, SU2, SU3 };

template <int N>
constexpr GroupKind group_kind() {
  static_assert(N >= 1 && N <= 3, "supported groups are U(1), SU(2), SU(3)");
  if constexpr (N == 1) return GroupKind::U1;
  else if constexpr (N == 2) return GroupKind::SU2;
  else return GroupKind::SU3;
}

inline const char* group_name(GroupKind g) {
  switch (g) {
    case GroupKind::U1: return "U1";
    case GroupKind::SU2: return "SU2";
    case GroupKind::SU3: return "SU3";
  }
  return "?";
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// log_map called on an element with an eigenvalue at -1.
class BranchCutError : public Error {
 public:
  using Error::Error;
};

// Path-ordered integration or quadrature failed to reach its tolerance.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

class UnreachableNodeError : public Error {
 public:
  using Error::Error;
};

class MissingLinkError : public Error {
 public:
  using Error::Error;
};

class OpenPathError : public Error {
 public:
  using Error::Error;
};

class DegenerateFaceError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace glat
