#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmeta/rng.hpp"

namespace gmeta {

/// Normal-mixture shapes used to generate "original" study data.
enum class DensityId { normal, skewed, bimodal, kurtotic };

/// "f1".."f4".
std::string_view to_string(DensityId id) noexcept;
/// Accepts "f1".."f4" or the shape names ("normal", "skewed", ...).
DensityId parse_density(std::string_view text);

struct MixtureComponent {
    double weight = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
};

class MixtureDensity {
public:
    explicit MixtureDensity(DensityId id);
    MixtureDensity(DensityId id, std::vector<MixtureComponent> components);

    DensityId id() const noexcept { return id_; }
    const std::vector<MixtureComponent>& components() const noexcept { return components_; }
    double analytic_mean() const noexcept { return mean_; }
    double analytic_var() const noexcept { return var_; }

    /// Fills `out` with raw (unstandardized) draws.
    void draw(Xoshiro256& rng, std::span<double> out) const;

private:
    DensityId id_;
    std::vector<MixtureComponent> components_;
    std::vector<double> cumulative_;
    double mean_ = 0.0;
    double var_ = 0.0;
};

/// Fills `out` with draws rescaled to population mean `target_mean` and SD
/// `target_sd`: target_mean + target_sd * (x - mean) / sqrt(var).
void sample_standardized(const MixtureDensity& density, double target_mean, double target_sd, Xoshiro256& rng,
                         std::span<double> out);

std::vector<double> sample_standardized(const MixtureDensity& density, std::size_t n, double target_mean,
                                        double target_sd, Xoshiro256& rng);

} // namespace gmeta
