#include "gmeta/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "gmeta/meta_re.hpp"

namespace gmeta {

namespace {

// Substream tags under the scenario seed.
enum StreamTag : std::uint64_t { kParamsStream = 1, kDataStream = 2, kSimStream = 3 };

constexpr int kMaxAttempts = 100;

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pooled_g(const std::vector<AdditiveEffect>& effects) {
    std::vector<EffectEstimate> est;
    est.reserve(effects.size());
    for (const auto& e : effects) est.push_back({e.g, e.v_g});
    return pool_random_effects(est).g_wm;
}

ReplicateBias run_one_replicate(const Scenario& sc, const MixtureDensity& density, const SimEstimatorHook& hook,
                                std::uint64_t rep) {
    std::vector<double> sample;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const auto a = static_cast<std::uint64_t>(attempt);
        try {
            Xoshiro256 param_rng = make_stream(sc.seed, {kParamsStream, rep, a});
            const auto params =
                perturb_study_params(sc.mean_vec, sc.sigma_ws, sc.studies, param_rng, sc.truncation, sc.perturb_sd);

            std::vector<AdditiveEffect> truth, crude, sim;
            std::vector<double> dev_crude, dev_sim;
            for (std::size_t l = 0; l < params.size(); ++l) {
                const auto study = static_cast<std::uint64_t>(l);
                Xoshiro256 data_rng = make_stream(sc.seed, {kDataStream, rep, a, study});
                sample.resize(static_cast<std::size_t>(sc.n[0] + sc.n[1] + sc.n[2]));
                std::size_t offset = 0;
                for (std::size_t k = 0; k < 3; ++k) {
                    const std::span<double> group(sample.data() + offset, static_cast<std::size_t>(sc.n[k]));
                    sample_standardized(density, params[l].m[k], params[l].sd[k], data_rng, group);
                    offset += group.size();
                }

                const SimDraw observed = draw_from_sample(sample, sc.n);
                const std::string id = "study" + std::to_string(l + 1);
                truth.push_back(assemble_additive_effect(id, EffectMethod::simulation, observed.beta, observed.sd,
                                                         observed.d, sc.n));

                StudySummary reported{id, params[l].m, params[l].sd, sc.n};
                if (sc.reported == ReportedSummary::sample) {
                    const GroupMoments gm = group_moments(sample, sc.n);
                    reported.m = gm.mean;
                    reported.sd = gm.sd;
                }

                crude.push_back(crude_effect(reported, sc.crude_sd));
                const std::uint64_t sim_seed = derive_seed(sc.seed, {kSimStream, rep, a, study});
                if (hook) {
                    sim.push_back(hook(reported, truth.back(), sim_seed));
                } else {
                    sim.push_back(sim_effect(reported, SimConfig{sc.inner_iterations, sim_seed, 1}));
                }
                dev_crude.push_back(std::abs(truth.back().g - crude.back().g));
                dev_sim.push_back(std::abs(truth.back().g - sim.back().g));
            }

            const double gwm_true = pooled_g(truth);
            ReplicateBias out;
            out.g_crude = mean_of(dev_crude);
            out.g_sim = mean_of(dev_sim);
            out.gwm_crude = std::abs(gwm_true - pooled_g(crude));
            out.gwm_sim = std::abs(gwm_true - pooled_g(sim));
            out.retries = attempt;
            return out;
        } catch (const DegenerateSample&) {
            // Retry the replicate on the next substream.
        }
    }
    throw DegenerateSample("replicate " + std::to_string(rep) + " degenerate after " +
                           std::to_string(kMaxAttempts) + " attempts");
}

} // namespace

std::string_view to_string(Truncation t) noexcept { return t == Truncation::first_anchor ? "paper" : "per-group"; }

Truncation parse_truncation(std::string_view text) {
    if (text == "paper") return Truncation::first_anchor;
    if (text == "per-group" || text == "per_group") return Truncation::per_group;
    throw std::invalid_argument("unknown truncation '" + std::string(text) + "' (expected paper|per-group)");
}

std::string_view to_string(ReportedSummary r) noexcept {
    return r == ReportedSummary::parameters ? "params" : "sample";
}

ReportedSummary parse_reported(std::string_view text) {
    if (text == "params" || text == "parameters") return ReportedSummary::parameters;
    if (text == "sample") return ReportedSummary::sample;
    throw std::invalid_argument("unknown reported summary '" + std::string(text) + "' (expected params|sample)");
}

double approximate_true_g(const std::array<double, 3>& mean_vec, double sigma_ws) {
    static constexpr std::array<double, 3> sigma1{0.82, 1.28, 1.64};
    static constexpr std::array<double, 3> sigma5{0.30, 0.48, 0.65};
    for (std::size_t i = 0; i < kMeanVectors.size(); ++i) {
        if (mean_vec != kMeanVectors[i]) continue;
        if (sigma_ws == 1.0) return sigma1[i];
        if (sigma_ws == 5.0) return sigma5[i];
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void Scenario::validate() const {
    if (studies < 1) throw std::invalid_argument("scenario: L must be at least 1");
    if (mc_reps < 1) throw std::invalid_argument("scenario: mc_reps must be at least 1");
    if (inner_iterations < 1) throw std::invalid_argument("scenario: inner_iterations must be at least 1");
    if (!(sigma_ws > 0.0)) throw std::invalid_argument("scenario: sigma_ws must be positive");
    if (!(perturb_sd >= 0.0)) throw std::invalid_argument("scenario: perturbation SD must be non-negative");
    for (long nk : n)
        if (nk < 2) throw std::invalid_argument("scenario: every group size must be at least 2");
}

bool Scenario::is_grid_cell() const {
    const auto contains = [](const auto& range, const auto& value) {
        return std::find(range.begin(), range.end(), value) != range.end();
    };
    return contains(kStudyCounts, studies) && contains(kMeanVectors, mean_vec) &&
           contains(kWithinStudySds, sigma_ws) && contains(kSampleSizeTriplets, n);
}

std::vector<Scenario> standard_grid(const Scenario& base) {
    std::vector<Scenario> grid;
    for (DensityId density : {DensityId::normal, DensityId::skewed, DensityId::bimodal, DensityId::kurtotic})
        for (int studies : kStudyCounts)
            for (double sigma : kWithinStudySds)
                for (const auto& means : kMeanVectors)
                    for (const auto& n : kSampleSizeTriplets) {
                        Scenario s = base;
                        s.density = density;
                        s.studies = studies;
                        s.sigma_ws = sigma;
                        s.mean_vec = means;
                        s.n = n;
                        grid.push_back(s);
                    }
    return grid;
}

std::array<double, 3> truncate_means(std::array<double, 3> draws, const std::array<double, 3>& mean_vec,
                                     Truncation truncation) {
    for (std::size_t k = 0; k < 3; ++k)
        if (draws[k] < 0.0) draws[k] = truncation == Truncation::first_anchor ? mean_vec[0] : mean_vec[k];
    return draws;
}

double truncate_sd(double draw, double sigma_ws) {
    // A zero SD is as unusable as a negative one.
    return draw > 0.0 ? draw : sigma_ws;
}

std::vector<StudyParams> perturb_study_params(const std::array<double, 3>& mean_vec, double sigma_ws, int studies,
                                              Xoshiro256& rng, Truncation truncation, double perturb_sd) {
    if (studies < 1) throw std::invalid_argument("perturb_study_params: L must be at least 1");
    std::vector<StudyParams> out(static_cast<std::size_t>(studies));
    std::normal_distribution<double> z(0.0, 1.0);
    // Group-major order: all L means of group 1, then group 2, ... as in rnorm(L, ...).
    for (std::size_t k = 0; k < 3; ++k)
        for (auto& p : out) p.m[k] = mean_vec[k] + perturb_sd * z(rng);
    for (std::size_t k = 0; k < 3; ++k)
        for (auto& p : out) p.sd[k] = truncate_sd(sigma_ws + perturb_sd * z(rng), sigma_ws);
    for (auto& p : out) p.m = truncate_means(p.m, mean_vec, truncation);
    return out;
}

std::vector<ReplicateBias> run_replicates(const Scenario& scenario, const SimEstimatorHook& sim_hook) {
    scenario.validate();
    const MixtureDensity density(scenario.density);
    const auto reps = static_cast<std::size_t>(scenario.mc_reps);
    std::vector<ReplicateBias> out(reps);

    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(scenario.workers, 1)), 1, reps);
    if (workers == 1) {
        for (std::size_t r = 0; r < reps; ++r) out[r] = run_one_replicate(scenario, density, sim_hook, r);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t r = w; r < reps; r += workers)
                        out[r] = run_one_replicate(scenario, density, sim_hook, r);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

BiasReport summarize(const Scenario& scenario, const std::vector<ReplicateBias>& replicates) {
    if (replicates.empty()) throw std::invalid_argument("summarize: no replicates");
    BiasReport report;
    report.scenario = scenario;
    report.replicates = static_cast<long>(replicates.size());
    const double r = static_cast<double>(replicates.size());

    std::array<double, 4> sum{}, sum_sq{};
    for (const auto& rep : replicates) {
        const std::array<double, 4> v{rep.g_crude, rep.gwm_crude, rep.g_sim, rep.gwm_sim};
        for (std::size_t i = 0; i < 4; ++i) sum[i] += v[i];
        report.retries += rep.retries;
    }
    std::array<double, 4> mean{};
    for (std::size_t i = 0; i < 4; ++i) mean[i] = sum[i] / r;
    for (const auto& rep : replicates) {
        const std::array<double, 4> v{rep.g_crude, rep.gwm_crude, rep.g_sim, rep.gwm_sim};
        for (std::size_t i = 0; i < 4; ++i) sum_sq[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
    }
    for (std::size_t i = 0; i < 4; ++i)
        report.mc_se[i] = replicates.size() > 1 ? std::sqrt(sum_sq[i] / (r - 1.0) / r) : 0.0;

    report.bias_g_crude = mean[0];
    report.bias_gwm_crude = mean[1];
    report.bias_g_sim = mean[2];
    report.bias_gwm_sim = mean[3];
    return report;
}

BiasReport run_scenario(const Scenario& scenario, const SimEstimatorHook& sim_hook) {
    return summarize(scenario, run_replicates(scenario, sim_hook));
}

PresenceFixture presence_fixture(Xoshiro256& rng, double cutoff) {
    static constexpr std::array<double, 3> means{4.0, 5.5, 7.0};
    PresenceFixture fx;
    fx.values.reserve(90);
    for (std::size_t k = 0; k < 3; ++k) {
        std::normal_distribution<double> dist(means[k], 5.0);
        for (long i = 0; i < fx.n[k]; ++i) {
            const double v = dist(rng);
            fx.values.push_back(v);
            if (v > cutoff)
                ++fx.present[k];
            else
                ++fx.absent[k];
        }
    }
    return fx;
}

} // namespace gmeta
