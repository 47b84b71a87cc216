#pragma once

#include <cmath>
#include <cstdint>

namespace wp {

inline double poisson_pmf(std::int64_t k, double mean) {
    if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-mean + static_cast<double>(k) * std::log(mean) -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

// Pr(Po(mean) >= k)
inline double poisson_upper_tail(std::int64_t k, double mean) {
    if (k <= 0) return 1.0;
    if (mean <= 0.0) return 0.0;
    double below = 0.0;
    for (std::int64_t j = 0; j < k; ++j) below += poisson_pmf(j, mean);
    return below > 1.0 ? 0.0 : 1.0 - below;
}

}  // namespace wp
