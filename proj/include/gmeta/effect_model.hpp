#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

namespace gmeta {

/// Reported per-genotype summaries of one study. Index 0 = AA, 1 = AB, 2 = BB.
struct StudySummary {
    std::string study_id;
    std::array<double, 3> m{};
    std::array<double, 3> sd{};
    std::array<long, 3> n{};
};

/// Throws std::invalid_argument unless every sd > 0 and every n >= 2.
void validate(const StudySummary& s);

struct PairEffect {
    double d = 0.0;
    double v_d = 0.0;
    double j = 0.0;
    double g = 0.0;
    double v_g = 0.0;
    long n_lo = 0;
    long n_hi = 0;
};

enum class EffectMethod { crude, simulation };

const char* to_string(EffectMethod m) noexcept;

struct AdditiveEffect {
    std::string study_id;
    double beta = 0.0;
    double sd_beta = 0.0;
    double d = 0.0;
    double g = 0.0;
    double v_g = 0.0;
    EffectMethod method = EffectMethod::crude;
    PairEffect pair12;
    PairEffect pair23;
};

/// How the crude estimator standardizes the slope.
///  pairwise_mean: mean of the AA/AB and AB/BB pooled SDs.
///  pooled_all:    within-group SD pooled over all three groups.
enum class CrudeStandardizer { pairwise_mean, pooled_all };

/// "pairwise" / "pooled-all".
const char* to_string(CrudeStandardizer c) noexcept;
CrudeStandardizer parse_crude_standardizer(std::string_view text);

struct SlopeAndScale {
    double beta = 0.0;
    double sd_beta = 0.0;
};

double pooled_sd(double sd_a, long n_a, double sd_b, long n_b);

/// Within-group SD pooled across all three groups (N - 3 denominator).
double pooled_sd_all(const StudySummary& s);

SlopeAndScale crude_beta(const StudySummary& s,
                         CrudeStandardizer standardizer = CrudeStandardizer::pairwise_mean);

double cohens_d_variance(long n_a, long n_b, double d);

double hedges_j(long n_a, long n_b);

/// Pairwise record for a common d over groups of size n_a and n_b.
PairEffect make_pair_effect(double d, long n_a, long n_b);

struct CombinedG {
    double g = 0.0;
    double v_g = 0.0;
};

/// Inverse-variance weighted mean of the two pair g's.
CombinedG combine_pairs(const PairEffect& pair12, const PairEffect& pair23);

/// Builds the AA/AB and AB/BB pair records for a single additive d and
/// combines them. Shared by every estimator and by the Monte Carlo truth.
AdditiveEffect assemble_additive_effect(std::string study_id, EffectMethod method, double beta,
                                        double sd_beta, double d, const std::array<long, 3>& n);

AdditiveEffect crude_effect(const StudySummary& s,
                            CrudeStandardizer standardizer = CrudeStandardizer::pairwise_mean);

} // namespace gmeta
