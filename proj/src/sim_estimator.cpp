#include "gmeta/sim_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace gmeta {

namespace {

long total_count(const std::array<long, 3>& n) { return n[0] + n[1] + n[2]; }

void check_layout(std::span<const double> values, const std::array<long, 3>& n) {
    for (long nk : n)
        if (nk < 1) throw std::invalid_argument("group sizes must be positive");
    if (static_cast<long>(values.size()) != total_count(n))
        throw std::invalid_argument("sample length does not match group sizes");
}

struct GroupStats {
    std::array<double, 3> mean{};
    std::array<double, 3> ss{};
};

GroupStats group_stats(std::span<const double> values, const std::array<long, 3>& n) {
    GroupStats gs;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto group = values.subspan(offset, static_cast<std::size_t>(n[k]));
        double sum = 0.0;
        for (double v : group) sum += v;
        const double mean = sum / static_cast<double>(n[k]);
        double ss = 0.0;
        for (double v : group) ss += (v - mean) * (v - mean);
        gs.mean[k] = mean;
        gs.ss[k] = ss;
        offset += group.size();
    }
    return gs;
}

// Kahan-compensated running sum.
struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

} // namespace

double LinearTrendFit::anova_sd() const {
    if (f_stat > 0.0 && std::isfinite(f_stat)) return std::sqrt(ms_model / f_stat);
    return std::sqrt(ms_error);
}

LinearTrendFit fit_linear_trend(std::span<const double> values, const std::array<long, 3>& n) {
    check_layout(values, n);
    const long total = total_count(n);
    if (total < 3) throw std::invalid_argument("linear trend fit needs at least 3 observations");
    const GroupStats gs = group_stats(values, n);

    const double N = static_cast<double>(total);
    double code_mean = 0.0, grand_mean = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        code_mean += n[k] * static_cast<double>(k + 1);
        grand_mean += n[k] * gs.mean[k];
    }
    code_mean /= N;
    grand_mean /= N;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double dx = static_cast<double>(k + 1) - code_mean;
        sxx += n[k] * dx * dx;
        sxy += n[k] * dx * (gs.mean[k] - grand_mean);
    }

    LinearTrendFit fit;
    fit.beta = sxy / sxx;
    fit.intercept = grand_mean - fit.beta * code_mean;
    fit.ss_model = fit.beta * sxy;

    // Residual SS = pure error within groups + lack of fit of group means.
    double ss_error = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double lack = gs.mean[k] - (fit.intercept + fit.beta * static_cast<double>(k + 1));
        ss_error += gs.ss[k] + n[k] * lack * lack;
    }
    fit.ss_error = ss_error;
    fit.df_error = total - 2;
    fit.ms_model = fit.ss_model;
    fit.ms_error = ss_error / static_cast<double>(fit.df_error);
    fit.f_stat = fit.ms_error > 0.0 ? fit.ms_model / fit.ms_error : std::numeric_limits<double>::infinity();
    return fit;
}

double pooled_within_sd(std::span<const double> values, const std::array<long, 3>& n) {
    check_layout(values, n);
    const long total = total_count(n);
    if (total <= 3) throw std::invalid_argument("pooled within-group SD needs more than 3 observations");
    const GroupStats gs = group_stats(values, n);
    return std::sqrt((gs.ss[0] + gs.ss[1] + gs.ss[2]) / static_cast<double>(total - 3));
}

GroupMoments group_moments(std::span<const double> values, const std::array<long, 3>& n) {
    check_layout(values, n);
    const GroupStats gs = group_stats(values, n);
    GroupMoments out;
    for (std::size_t k = 0; k < 3; ++k) {
        if (n[k] < 2) throw std::invalid_argument("group SD needs at least 2 observations");
        out.mean[k] = gs.mean[k];
        out.sd[k] = std::sqrt(gs.ss[k] / static_cast<double>(n[k] - 1));
    }
    return out;
}

SimDraw draw_from_sample(std::span<const double> values, const std::array<long, 3>& n) {
    const LinearTrendFit fit = fit_linear_trend(values, n);
    if (!(fit.ss_error > 0.0)) throw DegenerateSample("sample has zero residual variance");
    const double sd = fit.anova_sd();
    return {fit.beta, sd, fit.beta / sd};
}

SimDraw simulate_study_once(const StudySummary& s, Xoshiro256& rng, std::vector<double>& scratch) {
    if (total_count(s.n) < 4) throw std::invalid_argument("simulation needs n1 + n2 + n3 >= 4");
    scratch.resize(static_cast<std::size_t>(total_count(s.n)));
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        std::normal_distribution<double> dist(s.m[k], s.sd[k]);
        for (long i = 0; i < s.n[k]; ++i) scratch[pos++] = dist(rng);
    }
    return draw_from_sample(scratch, s.n);
}

SimDraw simulate_study_once(const StudySummary& s, Xoshiro256& rng) {
    std::vector<double> scratch;
    return simulate_study_once(s, rng, scratch);
}

std::vector<SimDraw> simulate_draws(const StudySummary& s, const SimConfig& config) {
    validate(s);
    if (config.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    const auto iterations = static_cast<std::size_t>(config.iterations);
    std::vector<SimDraw> draws(iterations);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::vector<double> scratch;
        for (std::size_t i = begin; i < end; ++i) {
            Xoshiro256 rng = make_stream(config.seed, {static_cast<std::uint64_t>(i)});
            draws[i] = simulate_study_once(s, rng, scratch);
        }
    };

    const std::size_t workers =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(config.workers, 1)), 1, iterations);
    if (workers == 1) {
        run_range(0, iterations);
        return draws;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (iterations + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(iterations, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return draws;
}

AdditiveEffect sim_effect(const StudySummary& s, const SimConfig& config) {
    const std::vector<SimDraw> draws = simulate_draws(s, config);
    KahanSum beta, sd, d;
    for (const SimDraw& draw : draws) {
        beta.add(draw.beta);
        sd.add(draw.sd);
        d.add(draw.d);
    }
    const double count = static_cast<double>(draws.size());
    return assemble_additive_effect(s.study_id, EffectMethod::simulation, beta.sum / count, sd.sum / count,
                                    d.sum / count, s.n);
}

} // namespace gmeta
