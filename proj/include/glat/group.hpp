#pragma once

// Structure-group arithmetic for U(1), SU(2) and SU(3) in the fundamental
// representation. Everything is templated on the matrix size N and the real
// scalar type; N = 1 is U(1), N >= 2 is SU(N).

#include "glat/types.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>

namespace glat {

template <int N>
inline constexpr int algebra_dimension = (N == 1) ? 1 : N * N - 1;

// Drift above this triggers re-projection onto the group after a product.
inline constexpr double kReprojectThreshold = 1e-13;

template <int N, typename Scalar = double>
GroupElement<N, Scalar> identity() {
  return GroupElement<N, Scalar>::Identity();
}

/// Basis of the Lie algebra: {i} for U(1), {i * lambda_a} for SU(N) where
/// lambda_a are the generalised Gell-Mann matrices, tr(lambda_a lambda_b) = 2
/// delta_ab. For SU(2) these are i times the Pauli matrices.
template <int N, typename Scalar = double>
const std::array<AlgebraElement<N, Scalar>, algebra_dimension<N>>& algebra_basis() {
  static const auto basis = [] {
    using C = std::complex<Scalar>;
    using M = AlgebraElement<N, Scalar>;
    const C i(0, 1);
    std::array<M, algebra_dimension<N>> b;
    if constexpr (N == 1) {
      b[0](0, 0) = i;
    } else {
      int a = 0;
      for (int j = 0; j < N; ++j) {
        for (int k = j + 1; k < N; ++k) {
          M sym = M::Zero();
          sym(j, k) = 1;
          sym(k, j) = 1;
          b[a++] = i * sym;
          M anti = M::Zero();
          anti(j, k) = -i;
          anti(k, j) = i;
          b[a++] = i * anti;
        }
      }
      for (int l = 1; l < N; ++l) {
        const Scalar c = std::sqrt(Scalar(2) / Scalar(l * (l + 1)));
        M diag = M::Zero();
        for (int m = 0; m < l; ++m) diag(m, m) = c;
        diag(l, l) = -Scalar(l) * c;
        b[a++] = i * diag;
      }
    }
    return b;
  }();
  return basis;
}

template <int N, typename Scalar = double>
AlgebraElement<N, Scalar> algebra_element(std::span<const Scalar> coords) {
  if (coords.size() != static_cast<std::size_t>(algebra_dimension<N>))
    throw InvalidArgument("algebra_element: expected " + std::to_string(algebra_dimension<N>) +
                          " coordinates, got " + std::to_string(coords.size()));
  AlgebraElement<N, Scalar> x = AlgebraElement<N, Scalar>::Zero();
  const auto& basis = algebra_basis<N, Scalar>();
  for (int a = 0; a < algebra_dimension<N>; ++a) x += coords[a] * basis[a];
  return x;
}

template <int N, typename Scalar>
std::array<Scalar, algebra_dimension<N>> algebra_coordinates(const AlgebraElement<N, Scalar>& x) {
  const Scalar norm = (N == 1) ? Scalar(1) : Scalar(2);
  std::array<Scalar, algebra_dimension<N>> c;
  const auto& basis = algebra_basis<N, Scalar>();
  for (int a = 0; a < algebra_dimension<N>; ++a)
    c[a] = std::real((basis[a].adjoint() * x).trace()) / norm;
  return c;
}

/// Largest deviation from U^dagger U = I and, for SU(N), from det U = 1.
template <int N, typename Scalar>
Scalar unitarity_drift(const GroupElement<N, Scalar>& u) {
  Scalar d = (u.adjoint() * u - GroupElement<N, Scalar>::Identity()).cwiseAbs().maxCoeff();
  if constexpr (N >= 2) d = std::max(d, std::abs(u.determinant() - Scalar(1)));
  return d;
}

template <int N, typename Scalar>
bool is_group_element(const GroupElement<N, Scalar>& u, Scalar tol = Scalar(1e-12)) {
  return unitarity_drift(u) <= tol;
}

template <int N, typename Scalar>
bool is_algebra_element(const AlgebraElement<N, Scalar>& x, Scalar tol = Scalar(1e-12)) {
  if ((x + x.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if constexpr (N >= 2) return std::abs(x.trace()) <= tol;
  return true;
}

/// Nearest group element: polar factor of u, with the determinant phase
/// removed for SU(N).
template <int N, typename Scalar>
GroupElement<N, Scalar> reproject(const GroupElement<N, Scalar>& u) {
  using M = GroupElement<N, Scalar>;
  if constexpr (N == 1) {
    M r;
    r(0, 0) = u(0, 0) / std::abs(u(0, 0));
    return r;
  } else {
    Eigen::JacobiSVD<M> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    M w = svd.matrixU() * svd.matrixV().adjoint();
    const Scalar phase = std::arg(w.determinant());
    w *= std::polar(Scalar(1), -phase / Scalar(N));
    return w;
  }
}

template <int N, typename Scalar>
GroupElement<N, Scalar> inverse(const GroupElement<N, Scalar>& u) {
  return u.adjoint();
}

/// Group product a * b, re-projected when rounding drift exceeds 1e-13.
template <int N, typename Scalar>
GroupElement<N, Scalar> multiply(const GroupElement<N, Scalar>& a, const GroupElement<N, Scalar>& b) {
  GroupElement<N, Scalar> p = a * b;
  if (unitarity_drift(p) > Scalar(kReprojectThreshold)) p = reproject(p);
  return p;
}

template <int N, typename Scalar>
GroupElement<N, Scalar> exp_map(const AlgebraElement<N, Scalar>& x) {
  using C = std::complex<Scalar>;
  using M = GroupElement<N, Scalar>;
  if constexpr (N == 1) {
    M r;
    r(0, 0) = std::exp(x(0, 0));
    return r;
  } else if constexpr (N == 2) {
    // Cayley-Hamilton: a traceless 2x2 matrix squares to -det times identity.
    const C half_trace = x.trace() / Scalar(2);
    const M x0 = x - half_trace * M::Identity();
    const C s2 = -x0.determinant();
    C ch, sh_over_s;
    if (std::abs(s2) < Scalar(1e-8)) {
      ch = Scalar(1) + s2 / Scalar(2) + s2 * s2 / Scalar(24) + s2 * s2 * s2 / Scalar(720);
      sh_over_s = Scalar(1) + s2 / Scalar(6) + s2 * s2 / Scalar(120) + s2 * s2 * s2 / Scalar(5040);
    } else {
      const C s = std::sqrt(s2);
      ch = std::cosh(s);
      sh_over_s = std::sinh(s) / s;
    }
    M r = ch * M::Identity() + sh_over_s * x0;
    if (half_trace != C(0)) r *= std::exp(half_trace);
    return r;
  } else {
    if ((x + x.adjoint()).cwiseAbs().maxCoeff() > Scalar(1e-12) * (Scalar(1) + x.cwiseAbs().maxCoeff()))
      return x.exp();
    // x = i h with h Hermitian, so exp(x) = V exp(i Lambda) V^dagger exactly unitary.
    const M h = C(0, -1) * x;
    Eigen::SelfAdjointEigenSolver<M> es(h);
    const auto& v = es.eigenvectors();
    Eigen::Matrix<C, N, 1> phases;
    for (int k = 0; k < N; ++k) phases(k) = std::polar(Scalar(1), es.eigenvalues()(k));
    return v * phases.asDiagonal() * v.adjoint();
  }
}

/// Principal logarithm. Throws BranchCutError when an eigenvalue lies within
/// `branch_tolerance` (in angle) of -1.
template <int N, typename Scalar>
AlgebraElement<N, Scalar> log_map(const GroupElement<N, Scalar>& g, Scalar branch_tolerance = Scalar(1e-9)) {
  using C = std::complex<Scalar>;
  using M = AlgebraElement<N, Scalar>;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  if constexpr (N == 1) {
    const C z = g(0, 0);
    const Scalar phi = std::arg(z);
    if (pi - std::abs(phi) < branch_tolerance)
      throw BranchCutError("log_map: U(1) element at the branch cut (-1)");
    M r;
    r(0, 0) = C(std::log(std::abs(z)), phi);
    return r;
  } else if constexpr (N == 2) {
    // g = a0 I + i a.sigma; (g - g^dagger)/2 = i a.sigma with |a| = sin(theta).
    const M b = (g - g.adjoint()) / Scalar(2);
    const Scalar a0 = std::real(g.trace()) / Scalar(2);
    const Scalar s = std::sqrt(std::norm(b(0, 0)) + std::norm(b(0, 1)));
    const Scalar theta = std::atan2(s, a0);
    if (pi - theta < branch_tolerance)
      throw BranchCutError("log_map: SU(2) element with eigenvalue -1");
    const Scalar f = (s < Scalar(1e-12)) ? Scalar(1) + theta * theta / Scalar(6) : theta / s;
    M r = f * b;
    r -= (r.trace() / Scalar(2)) * M::Identity();
    return r;
  } else {
    Eigen::ComplexSchur<M> schur(g);
    const M& q = schur.matrixU();
    Eigen::Matrix<C, N, 1> logs;
    for (int k = 0; k < N; ++k) {
      const C lambda = schur.matrixT()(k, k);
      const Scalar phi = std::arg(lambda);
      if (pi - std::abs(phi) < branch_tolerance)
        throw BranchCutError("log_map: SU(N) element with eigenvalue -1");
      logs(k) = C(std::log(std::abs(lambda)), phi);
    }
    return q * logs.asDiagonal() * q.adjoint();
  }
}

/// Sample from the normalised Haar measure.
template <int N, typename Scalar = double, typename Rng>
GroupElement<N, Scalar> haar_sample(Rng& rng) {
  using C = std::complex<Scalar>;
  using M = GroupElement<N, Scalar>;
  if constexpr (N == 1) {
    std::uniform_real_distribution<Scalar> angle(Scalar(0), Scalar(2) * std::numbers::pi_v<Scalar>);
    M r;
    r(0, 0) = std::polar(Scalar(1), angle(rng));
    return r;
  } else if constexpr (N == 2) {
    // Uniform point on S^3 read as a unit quaternion.
    std::normal_distribution<Scalar> gauss;
    Eigen::Matrix<Scalar, 4, 1> q;
    do {
      for (int k = 0; k < 4; ++k) q(k) = gauss(rng);
    } while (q.norm() < Scalar(1e-12));
    q.normalize();
    M r;
    r << C(q(0), q(3)), C(q(2), q(1)),
        C(-q(2), q(1)), C(q(0), -q(3));
    return r;
  } else {
    // QR of a Ginibre matrix with the phases of diag(R) moved into Q gives
    // Haar on U(N); dividing out det^(1/N) gives Haar on SU(N).
    std::normal_distribution<Scalar> gauss(Scalar(0), std::sqrt(Scalar(0.5)));
    M z;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) z(r, c) = C(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<M> qr(z);
    M q = qr.householderQ();
    const M rr = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (int k = 0; k < N; ++k) {
      const C d = rr(k, k);
      q.col(k) *= d / std::abs(d);
    }
    q *= std::polar(Scalar(1), -std::arg(q.determinant()) / Scalar(N));
    return q;
  }
}

/// exp of an algebra element whose basis coordinates are uniform in
/// [-step, step]. Symmetric: the coordinate law is invariant under c -> -c, so
/// an element and its inverse are equally likely. With a large step this is
/// also the push-forward of the uniform (Lebesgue) box measure on the algebra.
template <int N, typename Scalar = double, typename Rng>
GroupElement<N, Scalar> near_identity_sample(Scalar step, Rng& rng) {
  if (!(step > Scalar(0))) throw InvalidArgument("near_identity_sample: step must be positive");
  std::uniform_real_distribution<Scalar> coord(-step, step);
  std::array<Scalar, algebra_dimension<N>> c;
  for (auto& v : c) v = coord(rng);
  return exp_map(algebra_element<N, Scalar>(std::span<const Scalar>(c)));
}

}  // namespace glat
