#pragma once

#include <span>

namespace spal {

/// Square root of the Jensen-Shannon divergence (natural log). A metric on
/// the probability simplex, bounded above by sqrt(ln 2).
double js_distance(std::span<const double> p, std::span<const double> q);

/// L2 norm of p - q; the alternative merge criterion.
double euclidean_distance(std::span<const double> p, std::span<const double> q);

/// Best-versus-second-best ratio: second largest probability over the
/// largest. 0 for one-hot, 1 when the top two tie. Requires C >= 2.
double pixel_uncertainty(std::span<const double> p);

}  // namespace spal
