#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gmeta/effect_model.hpp"
#include "gmeta/mixture.hpp"
#include "gmeta/rng.hpp"
#include "gmeta/sim_estimator.hpp"

namespace gmeta {

/// Replacement rule for negative perturbed means.
///  first_anchor ("paper" on the command line): every group falls back to mean_vec[0].
///  per_group: group k falls back to mean_vec[k].
enum class Truncation { first_anchor, per_group };

/// What the estimators see as a study's "reported" summary.
///  parameters: the generated study means/SDs with the scenario n's.
///  sample:     moments of the original sample.
enum class ReportedSummary { parameters, sample };

std::string_view to_string(Truncation t) noexcept;
Truncation parse_truncation(std::string_view text);
std::string_view to_string(ReportedSummary r) noexcept;
ReportedSummary parse_reported(std::string_view text);

inline constexpr std::array<int, 3> kStudyCounts{5, 10, 15};
inline constexpr std::array<std::array<double, 3>, 3> kMeanVectors{{{4, 5.5, 7}, {4, 5.5, 9}, {4, 5.5, 11}}};
inline constexpr std::array<double, 2> kWithinStudySds{1, 5};
inline constexpr std::array<std::array<long, 3>, 8> kSampleSizeTriplets{{{10, 15, 5},
                                                                        {15, 20, 10},
                                                                        {15, 20, 30},
                                                                        {15, 45, 30},
                                                                        {35, 45, 30},
                                                                        {75, 100, 60},
                                                                        {150, 200, 120},
                                                                        {300, 400, 240}}};

/// Approximate true g for a (mean_vec, sigma_ws) pair; NaN for other inputs.
double approximate_true_g(const std::array<double, 3>& mean_vec, double sigma_ws);

struct Scenario {
    DensityId density = DensityId::normal;
    int studies = 10;
    std::array<double, 3> mean_vec{4, 5.5, 7};
    double sigma_ws = 1.0;
    std::array<long, 3> n{35, 45, 30};
    long mc_reps = 100;
    long inner_iterations = 2000;
    std::uint64_t seed = kDefaultSeed;
    Truncation truncation = Truncation::first_anchor;
    ReportedSummary reported = ReportedSummary::parameters;
    CrudeStandardizer crude_sd = CrudeStandardizer::pairwise_mean;
    /// SD of the study-level perturbation of means and SDs.
    double perturb_sd = 2.0;
    int workers = 1;

    /// Throws std::invalid_argument on non-positive counts or SDs.
    void validate() const;
    /// True if every field is one of the standard grid values.
    bool is_grid_cell() const;
};

/// Every cell of the standard grid, sharing the replicate settings of `base`.
std::vector<Scenario> standard_grid(const Scenario& base);

struct StudyParams {
    std::array<double, 3> m{};
    std::array<double, 3> sd{};
};

std::array<double, 3> truncate_means(std::array<double, 3> draws, const std::array<double, 3>& mean_vec,
                                     Truncation truncation);
double truncate_sd(double draw, double sigma_ws);

std::vector<StudyParams> perturb_study_params(const std::array<double, 3>& mean_vec, double sigma_ws, int studies,
                                              Xoshiro256& rng, Truncation truncation = Truncation::first_anchor,
                                              double perturb_sd = 2.0);

struct BiasReport {
    Scenario scenario;
    double bias_g_crude = 0.0;
    double bias_gwm_crude = 0.0;
    double bias_g_sim = 0.0;
    double bias_gwm_sim = 0.0;
    /// Monte Carlo SEs, same order as the four biases.
    std::array<double, 4> mc_se{};
    long replicates = 0;
    long retries = 0;
};

/// Per-replicate bias values, exposed for batch-level properties.
struct ReplicateBias {
    double g_crude = 0.0;
    double gwm_crude = 0.0;
    double g_sim = 0.0;
    double gwm_sim = 0.0;
    long retries = 0;
};

/// Replaces the simulation estimator, e.g. with an oracle.
using SimEstimatorHook =
    std::function<AdditiveEffect(const StudySummary& reported, const AdditiveEffect& truth, std::uint64_t seed)>;

std::vector<ReplicateBias> run_replicates(const Scenario& scenario, const SimEstimatorHook& sim_hook = {});
BiasReport summarize(const Scenario& scenario, const std::vector<ReplicateBias>& replicates);
BiasReport run_scenario(const Scenario& scenario, const SimEstimatorHook& sim_hook = {});

struct PresenceFixture {
    std::array<long, 3> n{30, 30, 30};
    /// Group-blocked phenotype values (AA, AB, BB).
    std::vector<double> values;
    std::array<long, 3> present{};
    std::array<long, 3> absent{};
};

/// 30 draws per group from Normal((4, 5.5, 7), 5), dichotomized at `cutoff`
/// (present iff value > cutoff).
PresenceFixture presence_fixture(Xoshiro256& rng, double cutoff = 6.0);

} // namespace gmeta
