#pragma once

#include "skillgp/kernels.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace testing_helpers {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline skillgp::Kernel random_leaf(std::mt19937_64& rng, int which) {
    using skillgp::Kernel;
    const double var = uniform(rng, 0.2, 2.0);
    switch (which) {
        case 0: return Kernel::constant(var);
        case 1: return Kernel::wiener(var);
        case 2: return Kernel::matern12(var, uniform(rng, 0.3, 3.0));
        case 3: return Kernel::matern32(var, uniform(rng, 0.3, 3.0));
        case 4: return Kernel::linear(var * 0.1);
        default: return Kernel::piecewise_constant(var, {uniform(rng, 0.5, 1.5), uniform(rng, 2.0, 3.0)});
    }
}

inline constexpr int kLeafKinds = 6;

// A leaf or a sum of two or three leaves.
inline skillgp::Kernel random_kernel(std::mt19937_64& rng, bool allow_sum = true) {
    std::uniform_int_distribution<int> kind(0, kLeafKinds - 1);
    if (!allow_sum || uniform(rng, 0.0, 1.0) < 0.5) return random_leaf(rng, kind(rng));
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    std::vector<skillgp::Kernel> children;
    for (int i = 0; i < n; ++i) children.push_back(random_leaf(rng, kind(rng)));
    return skillgp::Kernel::sum(children);
}

// Sorted times in [lo, hi], with occasional exact duplicates.
inline std::vector<double> random_times(std::mt19937_64& rng, int n, double lo, double hi) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) {
        if (!t.empty() && uniform(rng, 0.0, 1.0) < 0.1) {
            t.push_back(t.back());
        } else {
            t.push_back(uniform(rng, lo, hi));
        }
    }
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace testing_helpers
