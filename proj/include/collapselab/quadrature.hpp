#pragma once

#include <functional>
#include <vector>

namespace collapselab {

/// Nodes and weights for the weight function exp(-x^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point rule by the Golub-Welsch eigenvalue method.
GaussHermiteRule gauss_hermite(int n);

/// Integral of f(z) against the standard Gaussian measure Dz.
double gaussian_expectation(const std::function<double(double)>& f, const GaussHermiteRule& rule);

}  // namespace collapselab
