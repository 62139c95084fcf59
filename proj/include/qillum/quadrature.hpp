#pragma once

// Gauss rules via Golub-Welsch and composite Simpson weights.

#include <functional>
#include <vector>

namespace qillum::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  double apply(const std::function<double(double)>& f) const;
};

/// Gauss-Legendre rule with n nodes mapped to [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Gauss-Laguerre rule: integral_0^inf e^{-x} f(x) dx ~ sum w_k f(x_k).
Rule gauss_laguerre(int n);

/// Composite Simpson weights on n uniformly spaced nodes over [a, b]; n odd, n >= 3.
Rule simpson(int n, double a, double b);

/// Uniform grid "lo:hi:count" inclusive of both ends.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace qillum::quad
