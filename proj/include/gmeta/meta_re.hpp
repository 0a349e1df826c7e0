#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gmeta {

struct EffectEstimate {
    double g = 0.0;
    double v = 0.0;
};

struct MetaResult {
    double g_wm = 0.0;
    double v_wm = 0.0;
    double tau2 = 0.0;
    double q = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t k = 0;
    /// Normalized random-effects weights, in input order.
    std::vector<double> weights;
};

/// DerSimonian-Laird random-effects pooling with a z-based 95% interval.
/// k = 1 returns the single study with tau2 = 0.
MetaResult pool_random_effects(std::span<const EffectEstimate> effects);

} // namespace gmeta
