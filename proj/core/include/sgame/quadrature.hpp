#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace sgame {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1],
/// computed by Newton iteration on the Legendre recurrence.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// Composite Gauss-Legendre integral of f over [lo, hi], `panels` equal
/// panels of `order` points each.
double integrate(const std::function<double(double)>& f, double lo, double hi, int panels,
                 int order = 20);

/// Tensorized composite rule over the box [lo1,hi1] x [lo2,hi2].
double integrate2d(const std::function<double(double, double)>& f, double lo1, double hi1,
                   double lo2, double hi2, int panels, int order = 20);

/// Half-width t with P(|Z| > t) <= tail for a standard normal, via bisection
/// on the complementary error function.
double normal_tail_halfwidth(double tail);

}  // namespace sgame
