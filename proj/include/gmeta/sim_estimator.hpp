#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gmeta/effect_model.hpp"
#include "gmeta/rng.hpp"

namespace gmeta {

inline constexpr std::uint64_t kDefaultSeed = 20240611ULL;

struct SimConfig {
    long iterations = 10000;
    std::uint64_t seed = kDefaultSeed;
    int workers = 1;
};

/// Raised when a sample has zero residual variance.
class DegenerateSample : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Straight-line regression of individual values on genotype codes 1, 2, 3,
/// laid out as an ANOVA table with one model degree of freedom.
struct LinearTrendFit {
    double intercept = 0.0;
    double beta = 0.0;
    double ss_model = 0.0;
    double ss_error = 0.0;
    long df_error = 0;
    double ms_model = 0.0;
    double ms_error = 0.0;
    double f_stat = 0.0;
    /// sqrt(MS_model / F), the standardizer of the simulated Cohen's d.
    double anova_sd() const;
};

/// Fits `values`, stored group-blocked: n[0] values coded 1, then n[1] coded 2,
/// then n[2] coded 3.
LinearTrendFit fit_linear_trend(std::span<const double> values, const std::array<long, 3>& n);

/// Within-group SD pooled over the three groups of a group-blocked sample.
double pooled_within_sd(std::span<const double> values, const std::array<long, 3>& n);

/// Sample mean and SD (n - 1 denominator) of each group.
struct GroupMoments {
    std::array<double, 3> mean{};
    std::array<double, 3> sd{};
};
GroupMoments group_moments(std::span<const double> values, const std::array<long, 3>& n);

struct SimDraw {
    double beta = 0.0;
    double sd = 0.0;
    double d = 0.0;
};

/// Standardized slope of an observed group-blocked sample.
SimDraw draw_from_sample(std::span<const double> values, const std::array<long, 3>& n);

/// One synthetic dataset drawn from Normal(m_k, sd_k) per group. `scratch` is
/// reused between calls to avoid reallocations.
SimDraw simulate_study_once(const StudySummary& s, Xoshiro256& rng, std::vector<double>& scratch);
SimDraw simulate_study_once(const StudySummary& s, Xoshiro256& rng);

/// Per-iteration draws; iteration i uses the substream (seed, i).
std::vector<SimDraw> simulate_draws(const StudySummary& s, const SimConfig& config);

AdditiveEffect sim_effect(const StudySummary& s, const SimConfig& config);

} // namespace gmeta
