#include "spal/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "spal/raster.hpp"

namespace spal {
namespace {

void check_lengths(std::span<const double> p, std::span<const double> q, const char* what) {
  if (p.size() != q.size()) throw InvariantError(std::string(what) + ": distribution length mismatch");
}

// p * ln(p / m) with 0 ln 0 := 0. m > 0 whenever p > 0 because m = (p + q) / 2.
double kl_term(double p, double m) { return p > 0.0 ? p * std::log(p / m) : 0.0; }

}  // namespace

double js_distance(std::span<const double> p, std::span<const double> q) {
  check_lengths(p, q, "js_distance");
  double divergence = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double m = 0.5 * (p[c] + q[c]);
    divergence += kl_term(p[c], m) + kl_term(q[c], m);
  }
  return std::sqrt(std::max(0.0, 0.5 * divergence));
}

double euclidean_distance(std::span<const double> p, std::span<const double> q) {
  check_lengths(p, q, "euclidean_distance");
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) sum += (p[c] - q[c]) * (p[c] - q[c]);
  return std::sqrt(sum);
}

double pixel_uncertainty(std::span<const double> p) {
  if (p.size() < 2) throw InvariantError("pixel_uncertainty: need at least two classes");
  double first = -1.0, second = -1.0;
  for (double v : p) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  if (first <= 0.0) throw InvariantError("pixel_uncertainty: not a distribution");
  return std::clamp(second / first, 0.0, 1.0);
}

}  // namespace spal
