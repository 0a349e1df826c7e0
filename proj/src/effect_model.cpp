#include "gmeta/effect_model.hpp"

#include <cmath>
#include <stdexcept>

namespace gmeta {

void validate(const StudySummary& s) {
    for (std::size_t k = 0; k < 3; ++k) {
        if (!(s.sd[k] > 0.0) || !std::isfinite(s.sd[k]))
            throw std::invalid_argument("study '" + s.study_id + "': sd" + std::to_string(k + 1) +
                                        " must be positive");
        if (!std::isfinite(s.m[k]))
            throw std::invalid_argument("study '" + s.study_id + "': m" + std::to_string(k + 1) +
                                        " is not finite");
        if (s.n[k] < 2)
            throw std::invalid_argument("study '" + s.study_id + "': n" + std::to_string(k + 1) +
                                        " must be at least 2");
    }
}

const char* to_string(EffectMethod m) noexcept {
    return m == EffectMethod::crude ? "crude" : "sim";
}

const char* to_string(CrudeStandardizer c) noexcept {
    return c == CrudeStandardizer::pairwise_mean ? "pairwise" : "pooled-all";
}

CrudeStandardizer parse_crude_standardizer(std::string_view text) {
    if (text == "pairwise") return CrudeStandardizer::pairwise_mean;
    if (text == "pooled-all") return CrudeStandardizer::pooled_all;
    throw std::invalid_argument("unknown crude standardizer '" + std::string(text) + "' (expected pairwise|pooled-all)");
}

double pooled_sd(double sd_a, long n_a, double sd_b, long n_b) {
    if (!(sd_a > 0.0) || !(sd_b > 0.0)) throw std::domain_error("pooled_sd: standard deviations must be positive");
    if (n_a < 1 || n_b < 1 || n_a + n_b <= 2) throw std::domain_error("pooled_sd: need n_a, n_b >= 1 and n_a + n_b > 2");
    const double ss = (n_a - 1) * sd_a * sd_a + (n_b - 1) * sd_b * sd_b;
    return std::sqrt(ss / static_cast<double>(n_a + n_b - 2));
}

double pooled_sd_all(const StudySummary& s) {
    validate(s);
    double ss = 0.0;
    long total = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        ss += (s.n[k] - 1) * s.sd[k] * s.sd[k];
        total += s.n[k];
    }
    return std::sqrt(ss / static_cast<double>(total - 3));
}

SlopeAndScale crude_beta(const StudySummary& s, CrudeStandardizer standardizer) {
    validate(s);
    // OLS slope of (m1, m2, m3) on codes (1, 2, 3).
    const double beta = (s.m[2] - s.m[0]) / 2.0;
    double scale = 0.0;
    switch (standardizer) {
    case CrudeStandardizer::pairwise_mean:
        scale = (pooled_sd(s.sd[0], s.n[0], s.sd[1], s.n[1]) + pooled_sd(s.sd[1], s.n[1], s.sd[2], s.n[2])) / 2.0;
        break;
    case CrudeStandardizer::pooled_all:
        scale = pooled_sd_all(s);
        break;
    }
    return {beta, scale};
}

double cohens_d_variance(long n_a, long n_b, double d) {
    if (n_a < 1 || n_b < 1) throw std::domain_error("cohens_d_variance: group sizes must be positive");
    const double a = static_cast<double>(n_a);
    const double b = static_cast<double>(n_b);
    return (a + b) / (a * b) + d * d / (2.0 * (a + b));
}

double hedges_j(long n_a, long n_b) {
    const double denom = 4.0 * static_cast<double>(n_a + n_b - 2) - 1.0;
    if (n_a + n_b <= 2 || denom <= 0.0) throw std::domain_error("hedges_j: need n_a + n_b > 2");
    return 1.0 - 3.0 / denom;
}

PairEffect make_pair_effect(double d, long n_a, long n_b) {
    PairEffect p;
    p.d = d;
    p.v_d = cohens_d_variance(n_a, n_b, d);
    p.j = hedges_j(n_a, n_b);
    p.g = p.j * d;
    p.v_g = p.j * p.j * p.v_d;
    p.n_lo = n_a;
    p.n_hi = n_b;
    return p;
}

CombinedG combine_pairs(const PairEffect& pair12, const PairEffect& pair23) {
    if (!(pair12.v_g > 0.0) || !(pair23.v_g > 0.0))
        throw std::domain_error("combine_pairs: variances must be positive");
    const double w12 = 1.0 / pair12.v_g;
    const double w23 = 1.0 / pair23.v_g;
    const double wsum = w12 + w23;
    return {(pair12.g * w12 + pair23.g * w23) / wsum, 1.0 / wsum};
}

AdditiveEffect assemble_additive_effect(std::string study_id, EffectMethod method, double beta,
                                        double sd_beta, double d, const std::array<long, 3>& n) {
    AdditiveEffect e;
    e.study_id = std::move(study_id);
    e.method = method;
    e.beta = beta;
    e.sd_beta = sd_beta;
    e.d = d;
    e.pair12 = make_pair_effect(d, n[0], n[1]);
    e.pair23 = make_pair_effect(d, n[1], n[2]);
    const CombinedG c = combine_pairs(e.pair12, e.pair23);
    e.g = c.g;
    e.v_g = c.v_g;
    return e;
}

AdditiveEffect crude_effect(const StudySummary& s, CrudeStandardizer standardizer) {
    const SlopeAndScale bs = crude_beta(s, standardizer);
    return assemble_additive_effect(s.study_id, EffectMethod::crude, bs.beta, bs.sd_beta, bs.beta / bs.sd_beta, s.n);
}

} // namespace gmeta
