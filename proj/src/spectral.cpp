#include "qerg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace qerg {

namespace {

constexpr double kSimpleTol = 1e-10;

// Perron vector of the Metzler matrix A for its rightmost eigenvalue `top`.
// (shift I - A) with shift just right of `top` is a nonsingular M-matrix, so
// its inverse is entrywise nonnegative and the iteration stays in the cone.
Vector perron_vector(const Matrix& A, double top, double separation) {
  const Index n = A.rows();
  const double delta = std::max(1e-3 * separation, 1e-12 * std::max(1.0, std::abs(top)));
  Matrix shifted = -A;
  shifted.diagonal().array() += top + delta;
  Eigen::PartialPivLU<Matrix> lu(shifted);
  Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 0; it < 8; ++it) {
    Vector next = lu.solve(v);
    next /= next.norm();
    if (next.sum() < 0.0) next = -next;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change < 1e-15) break;
  }
  return v;
}

void require_positive(const Vector& v, const char* which) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (v.minCoeff() < -1e-12 * scale)
    throw PositivityError(std::string("principal_triple: ") + which + " has mixed signs (A1 violated)");
  if (!(v.minCoeff() > 0.0))
    throw PositivityError(std::string("principal_triple: ") + which + " vanishes somewhere (A1 violated)");
}

}  // namespace

SpectralData principal_triple(const MarkovModel& model) {
  const Matrix G = model.generator();
  const Vector& mu = model.space().mu();
  const Index n = model.size();

  Eigen::VectorXcd spectrum = -Eigen::EigenSolver<Matrix>(G, false).eigenvalues();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return spectrum(a).real() < spectrum(b).real();
  });
  Eigen::VectorXcd sorted(n);
  for (Index k = 0; k < n; ++k) sorted(k) = spectrum(order[k]);

  SpectralData out;
  out.space = model.space_ptr();
  out.spectrum = sorted;
  out.lambda0 = sorted(0).real();
  out.gap = n > 1 ? sorted(1).real() - out.lambda0 : std::numeric_limits<double>::infinity();
  if (n > 1 && out.gap <= kSimpleTol * std::max(1.0, std::abs(out.lambda0)))
    throw NondegeneracyError("principal_triple: dominant eigenvalue is not simple (separation " +
                             std::to_string(out.gap) + ")");
  if (!model.irreducible()) throw PositivityError("principal_triple: jump matrix is reducible (A1 violated)");

  const double sep = n > 1 ? out.gap : 1.0;
  Vector phi = perron_vector(G, -out.lambda0, sep);
  Vector left = perron_vector(G.transpose(), -out.lambda0, sep);
  require_positive(phi, "phi0");
  require_positive(left, "psi0");
  Vector psi = left.cwiseQuotient(mu);

  phi /= std::sqrt(inner(phi, phi, mu));
  psi /= std::sqrt(inner(psi, psi, mu));
  out.phi0 = std::move(phi);
  out.psi0 = std::move(psi);
  out.Lambda = inner(out.phi0, out.psi0, mu);
  return out;
}

std::pair<double, double> eigen_residuals(const SpectralData& spec, const KernelOperator& op) {
  const double decay = std::exp(-spec.lambda0 * op.t());
  const double right = (op.apply(spec.phi0) - decay * spec.phi0).cwiseAbs().maxCoeff();
  const double left = (op.apply_adjoint(spec.psi0) - decay * spec.psi0).cwiseAbs().maxCoeff();
  return {right, left};
}

void SpectralData::write(std::ostream& out) const {
  out << std::setprecision(17) << "lambda0 " << lambda0 << "\ngap " << gap << "\nLambda " << Lambda << '\n';
  out << "# id phi0 psi0\n";
  for (Index i = 0; i < phi0.size(); ++i) out << space->id(i) << ' ' << phi0(i) << ' ' << psi0(i) << '\n';
}

}  // namespace qerg
