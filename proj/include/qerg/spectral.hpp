#pragma once

#include <iosfwd>
#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "qerg/operators.hpp"

namespace qerg {

/// Principal eigentriple of -G together with the spectral gap.
///
/// phi0 is the right eigenfunction (U_t phi0 = e^{-lambda0 t} phi0); psi0 is the
/// eigenfunction of the L^2(mu)-adjoint, so that mu * psi0 is the plain left
/// eigenvector of G. Both are positive and have unit L^2(mu) norm.
struct SpectralData {
  double lambda0 = 0.0;
  Vector phi0;
  Vector psi0;
  double Lambda = 0.0;
  double gap = 0.0;
  /// Eigenvalues of -G sorted by increasing real part.
  Eigen::VectorXcd spectrum;
  std::shared_ptr<const StateSpace> space;

  const Vector& mu() const { return space->mu(); }
  /// ||phi0||_{L^1(mu)}.
  double phi0_l1() const { return phi0.dot(mu()); }
  double psi0_l1() const { return psi0.dot(mu()); }

  /// Text record: `lambda0 gap Lambda` then one `id phi0 psi0` line per point.
  void write(std::ostream& out) const;
};

/// Dense eigendecomposition of G plus shifted inverse iteration for the
/// eigenvectors. Throws NondegeneracyError when the dominant eigenvalue is not
/// simple (relative separation below 1e-10) and PositivityError when the chain
/// is reducible or an eigenvector fails to be strictly positive.
SpectralData principal_triple(const MarkovModel& model);

/// (||U_t phi0 - e^{-lambda0 t} phi0||_inf, ||U*_t psi0 - e^{-lambda0 t} psi0||_inf).
std::pair<double, double> eigen_residuals(const SpectralData& spec, const KernelOperator& op);

}  // namespace qerg
