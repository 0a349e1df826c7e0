#include "gmeta/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace gmeta {

namespace {

std::vector<MixtureComponent> components_for(DensityId id) {
    switch (id) {
    case DensityId::normal:
        return {{1.0, 0.0, 1.0}};
    case DensityId::skewed: {
        std::vector<MixtureComponent> c;
        for (int l = 0; l < 8; ++l) {
            const double r = std::pow(2.0 / 3.0, l);
            c.push_back({1.0 / 8.0, 3.0 * (r - 1.0), r});
        }
        return c;
    }
    case DensityId::bimodal:
        return {{0.75, 0.0, 1.0}, {0.25, 1.5, 1.0 / 3.0}};
    case DensityId::kurtotic:
        // Second component has variance 1/10.
        return {{2.0 / 3.0, 0.0, 1.0}, {1.0 / 3.0, 0.0, std::sqrt(0.1)}};
    }
    throw std::invalid_argument("unknown density");
}

} // namespace

std::string_view to_string(DensityId id) noexcept {
    switch (id) {
    case DensityId::normal: return "f1";
    case DensityId::skewed: return "f2";
    case DensityId::bimodal: return "f3";
    case DensityId::kurtotic: return "f4";
    }
    return "?";
}

DensityId parse_density(std::string_view text) {
    if (text == "f1" || text == "normal") return DensityId::normal;
    if (text == "f2" || text == "skewed") return DensityId::skewed;
    if (text == "f3" || text == "bimodal") return DensityId::bimodal;
    if (text == "f4" || text == "kurtotic") return DensityId::kurtotic;
    throw std::invalid_argument("unknown density '" + std::string(text) + "' (expected f1..f4)");
}

MixtureDensity::MixtureDensity(DensityId id) : MixtureDensity(id, components_for(id)) {}

MixtureDensity::MixtureDensity(DensityId id, std::vector<MixtureComponent> components)
    : id_(id), components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0, second = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0) || !(c.sigma > 0.0))
            throw std::invalid_argument("mixture weights and sigmas must be positive");
        total += c.weight;
        mean_ += c.weight * c.mu;
        second += c.weight * (c.sigma * c.sigma + c.mu * c.mu);
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
    var_ = second - mean_ * mean_;
    cumulative_.back() = 1.0;
}

void MixtureDensity::draw(Xoshiro256& rng, std::span<double> out) const {
    std::normal_distribution<double> z(0.0, 1.0);
    if (components_.size() == 1) {
        const auto& c = components_.front();
        for (double& x : out) x = c.mu + c.sigma * z(rng);
        return;
    }
    for (double& x : out) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const auto& c = components_[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cumulative_.begin(), static_cast<std::ptrdiff_t>(components_.size()) - 1))];
        x = c.mu + c.sigma * z(rng);
    }
}

void sample_standardized(const MixtureDensity& density, double target_mean, double target_sd, Xoshiro256& rng,
                         std::span<double> out) {
    if (!(target_sd > 0.0)) throw std::invalid_argument("target_sd must be positive");
    density.draw(rng, out);
    const double scale = target_sd / std::sqrt(density.analytic_var());
    const double shift = density.analytic_mean();
    for (double& x : out) x = target_mean + scale * (x - shift);
}

std::vector<double> sample_standardized(const MixtureDensity& density, std::size_t n, double target_mean,
                                        double target_sd, Xoshiro256& rng) {
    if (n < 1) throw std::invalid_argument("sample size must be at least 1");
    std::vector<double> out(n);
    sample_standardized(density, target_mean, target_sd, rng, out);
    return out;
}

} // namespace gmeta
