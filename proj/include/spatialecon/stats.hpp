#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>

#include <boost/math/distributions/chi_squared.hpp>

#include "error.hpp"

namespace spatialecon {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail P(X >= x) of a chi-square with `df` degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (df <= 0.0) return x > 0.0 ? 0.0 : 1.0;
  if (x <= 0.0) return 1.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

enum class Alternative { two_sided, greater, less };

inline std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two_sided";
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
  }
  return "two_sided";
}

inline Alternative parse_alternative(std::string_view s) {
  if (s == "two_sided" || s == "two-sided") return Alternative::two_sided;
  if (s == "greater") return Alternative::greater;
  if (s == "less") return Alternative::less;
  throw InputError(ErrorKind::invalid_input, "unknown alternative '" + std::string(s) + "'");
}

inline double normal_p_value(double z, Alternative alt) {
  switch (alt) {
    case Alternative::two_sided: return std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
    case Alternative::greater: return normal_cdf(-z);
    case Alternative::less: return normal_cdf(z);
  }
  return 1.0;
}

}  // namespace spatialecon
