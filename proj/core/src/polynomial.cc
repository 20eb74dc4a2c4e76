#include "domeport/polynomial.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace domeport {

double EvaluatePolynomial(std::span<const double> coefficients, double x) {
  double value = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
    value = value * x + *it;
  }
  return value;
}

namespace {

double EvaluateDerivative(std::span<const double> coefficients, double x) {
  double value = 0.0;
  for (int k = static_cast<int>(coefficients.size()) - 1; k >= 1; --k) {
    value = value * x + k * coefficients[k];
  }
  return value;
}

double NewtonPolish(std::span<const double> coefficients, double root) {
  for (int iteration = 0; iteration < 4; ++iteration) {
    const double f = EvaluatePolynomial(coefficients, root);
    const double df = EvaluateDerivative(coefficients, root);
    if (df == 0.0 || !std::isfinite(f)) break;
    const double step = f / df;
    const double candidate = root - step;
    if (std::abs(EvaluatePolynomial(coefficients, candidate)) >= std::abs(f)) {
      break;
    }
    root = candidate;
  }
  return root;
}

}  // namespace

std::vector<double> RealPolynomialRoots(std::span<const double> coefficients,
                                        double imaginary_tolerance) {
  double scale = 0.0;
  for (double c : coefficients) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};

  int degree = static_cast<int>(coefficients.size()) - 1;
  while (degree > 0 && std::abs(coefficients[degree]) <= 1e-14 * scale) {
    --degree;
  }
  std::vector<double> roots;
  if (degree <= 0) return roots;
  const std::span<const double> trimmed = coefficients.first(degree + 1);

  if (degree == 1) {
    roots.push_back(-trimmed[0] / trimmed[1]);
    return roots;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  companion.block(1, 0, degree - 1, degree - 1).setIdentity();
  for (int k = 0; k < degree; ++k) {
    companion(k, degree - 1) = -trimmed[k] / trimmed[degree];
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const Eigen::VectorXcd eigenvalues = solver.eigenvalues();
  for (int k = 0; k < degree; ++k) {
    const std::complex<double> z = eigenvalues[k];
    if (std::abs(z.imag()) < imaginary_tolerance * (1.0 + std::abs(z.real()))) {
      roots.push_back(NewtonPolish(trimmed, z.real()));
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace domeport
