#include "gmeta/meta_re.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmeta {

MetaResult pool_random_effects(std::span<const EffectEstimate> effects) {
    if (effects.empty()) throw std::invalid_argument("pool_random_effects: no studies");
    for (const auto& e : effects) {
        if (!(e.v > 0.0) || !std::isfinite(e.v))
            throw std::domain_error("pool_random_effects: variances must be positive");
        if (!std::isfinite(e.g)) throw std::domain_error("pool_random_effects: effect is not finite");
    }

    const std::size_t k = effects.size();
    double sw = 0.0, sw2 = 0.0, swg = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / e.v;
        sw += w;
        sw2 += w * w;
        swg += w * e.g;
    }
    const double g_fixed = swg / sw;
    double q = 0.0;
    for (const auto& e : effects) q += (e.g - g_fixed) * (e.g - g_fixed) / e.v;

    double tau2 = 0.0;
    if (k > 1) {
        const double c = sw - sw2 / sw;
        tau2 = c > 0.0 ? std::max(0.0, (q - static_cast<double>(k - 1)) / c) : 0.0;
    }

    MetaResult r;
    r.k = k;
    r.q = q;
    r.tau2 = tau2;
    r.weights.reserve(k);
    double sws = 0.0, swsg = 0.0;
    for (const auto& e : effects) {
        const double w = 1.0 / (e.v + tau2);
        r.weights.push_back(w);
        sws += w;
        swsg += w * e.g;
    }
    for (double& w : r.weights) w /= sws;
    r.g_wm = swsg / sws;
    // Rounding can push the weighted mean a hair outside the data range.
    const auto [lo, hi] = std::minmax_element(effects.begin(), effects.end(),
                                              [](const auto& a, const auto& b) { return a.g < b.g; });
    r.g_wm = std::clamp(r.g_wm, lo->g, hi->g);
    r.v_wm = 1.0 / sws;
    const double half = 1.96 * std::sqrt(r.v_wm);
    r.ci_lo = r.g_wm - half;
    r.ci_hi = r.g_wm + half;
    return r;
}

} // namespace gmeta
