#pragma once

#include <span>
#include <vector>

namespace domeport {

// Coefficients are ordered from the constant term upwards.
double EvaluatePolynomial(std::span<const double> coefficients, double x);

// Real roots of a polynomial from the eigenvalues of its companion matrix,
// each refined by a few Newton steps. Leading coefficients that are
// negligible relative to the largest are dropped first. A root is real when
// |imag| < imaginary_tolerance * (1 + |real|). Roots are sorted ascending.
std::vector<double> RealPolynomialRoots(std::span<const double> coefficients,
                                        double imaginary_tolerance = 1e-8);

}  // namespace domeport
