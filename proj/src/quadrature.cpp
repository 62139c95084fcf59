#include "qillum/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace qillum::quad {
namespace {

// Nodes are eigenvalues of the Jacobi matrix; weights mu0 * (first eigenvector component)^2.
Rule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  Rule r;
  const auto n = diag.size();
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    r.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    r.weights[static_cast<std::size_t>(k)] = mu0 * v * v;
  }
  return r;
}

}  // namespace

double Rule::apply(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(nodes[k]);
  return s;
}

Rule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Rule r = n == 1 ? Rule{{0.0}, {2.0}} : golub_welsch(diag, off, 2.0);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    r.nodes[k] = mid + half * r.nodes[k];
    r.weights[k] *= half;
  }
  return r;
}

Rule gauss_laguerre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be positive");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + 1.0;
  for (int k = 1; k < n; ++k) off[k - 1] = k;
  if (n == 1) return Rule{{1.0}, {1.0}};
  return golub_welsch(diag, off, 1.0);
}

Rule simpson(int n, double a, double b) {
  if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: node count must be odd and >= 3");
  Rule r;
  const double h = (b - a) / (n - 1);
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(a + h * k);
    double w = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    r.weights.push_back(w * h / 3.0);
  }
  return r;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("linspace: count must be positive");
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
  return v;
}

}  // namespace qillum::quad
