#include "collapselab/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace collapselab {

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs n >= 1");
  // Jacobi matrix of the Hermite recurrence: zero diagonal, off-diagonal sqrt(k/2).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  // Polish with Newton steps on the orthonormal Hermite recurrence; the
  // eigenvector weights alone are only good to a few 1e-15.
  const double p0 = std::pow(std::numbers::pi, -0.25);
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[static_cast<std::size_t>(i)];
    double deriv = 0.0;
    for (int it = 0; it < 4; ++it) {
      double prev = 0.0, cur = p0;
      for (int j = 1; j <= n; ++j) {
        const double next = x * std::sqrt(2.0 / j) * cur - std::sqrt((j - 1.0) / j) * prev;
        prev = cur;
        cur = next;
      }
      deriv = std::sqrt(2.0 * n) * prev;
      const double dx = cur / deriv;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    if (deriv != 0.0 && std::isfinite(deriv)) {
      rule.nodes[static_cast<std::size_t>(i)] = x;
      rule.weights[static_cast<std::size_t>(i)] = 2.0 / (deriv * deriv);
    }
  }
  // The spectrum is symmetric; enforce it exactly so odd integrands vanish.
  for (int i = 0, j = n - 1; i < j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

double gaussian_expectation(const std::function<double(double)>& f, const GaussHermiteRule& rule) {
  // Dz = exp(-z^2/2) dz / sqrt(2 pi); substitute z = sqrt(2) x.
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(std::numbers::sqrt2 * rule.nodes[i]);
  }
  return sum / std::sqrt(std::numbers::pi);
}

}  // namespace collapselab
