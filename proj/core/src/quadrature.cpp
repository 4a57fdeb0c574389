#include "sgame/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace sgame {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 2) throw std::invalid_argument("gauss_legendre: order must be >= 2");
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  return {x, w};
}

namespace {

const std::pair<std::vector<double>, std::vector<double>>& cached_rule(int order) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, gauss_legendre(order)).first;
  return it->second;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi, int panels,
                 int order) {
  if (panels < 1) throw std::invalid_argument("integrate: need at least one panel");
  const auto& [x, w] = cached_rule(order);
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    const double c = a + 0.5 * h;
    double acc = 0.0;
    for (int i = 0; i < order; ++i) acc += w[i] * f(c + 0.5 * h * x[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

double integrate2d(const std::function<double(double, double)>& f, double lo1, double hi1,
                   double lo2, double hi2, int panels, int order) {
  return integrate(
      [&](double u) {
        return integrate([&](double v) { return f(u, v); }, lo2, hi2, panels, order);
      },
      lo1, hi1, panels, order);
}

double normal_tail_halfwidth(double tail) {
  if (!(tail > 0.0) || tail >= 1.0)
    throw std::invalid_argument("normal_tail_halfwidth: tail must be in (0,1)");
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > tail)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace sgame
