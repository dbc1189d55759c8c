#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qerg {

/// Adaptive Gauss-Kronrod (15-point) integral of f over [a, b]; infinite
/// bounds are allowed.
template <typename Scalar = double, typename F>
Scalar integrate(F f, Scalar a, Scalar b, Scalar tol = Scalar(1e-13), unsigned max_depth = 20) {
  return boost::math::quadrature::gauss_kronrod<Scalar, 15>::integrate(f, a, b, max_depth, tol);
}

}  // namespace qerg
