#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gmeta/mc_harness.hpp"

using namespace gmeta;

namespace {

Scenario small_scenario() {
    Scenario s;
    s.density = DensityId::skewed;
    s.studies = 5;
    s.mean_vec = {4, 5.5, 9};
    s.sigma_ws = 1;
    s.n = {15, 20, 10};
    s.mc_reps = 12;
    s.inner_iterations = 100;
    s.seed = 31;
    return s;
}

} // namespace

TEST_CASE("zero perturbation returns the anchors") {
    Xoshiro256 rng(1);
    const auto params = perturb_study_params({4, 5.5, 9}, 5.0, 7, rng, Truncation::first_anchor, 0.0);
    REQUIRE(params.size() == 7);
    for (const auto& p : params) {
        CHECK(p.m == std::array<double, 3>{4, 5.5, 9});
        CHECK(p.sd == std::array<double, 3>{5, 5, 5});
    }
}

TEST_CASE("negative draws are replaced") {
    const std::array<double, 3> anchors{4, 5.5, 9};
    CHECK(truncate_means({5.0, 6.0, -1.0}, anchors, Truncation::first_anchor) == std::array<double, 3>{5.0, 6.0, 4.0});
    CHECK(truncate_means({-0.5, -2.0, 3.0}, anchors, Truncation::first_anchor) == std::array<double, 3>{4.0, 4.0, 3.0});
    CHECK(truncate_means({5.0, -2.0, -1.0}, anchors, Truncation::per_group) == std::array<double, 3>{5.0, 5.5, 9.0});
    CHECK(truncate_sd(-0.3, 5.0) == 5.0);
    CHECK(truncate_sd(0.0, 1.0) == 1.0);
    CHECK(truncate_sd(0.2, 1.0) == 0.2);
}

TEST_CASE("perturbed parameters replay from a fixed seed") {
    Xoshiro256 a(2718), b(2718);
    const auto first = perturb_study_params({4, 5.5, 9}, 1.0, 10, a);
    const auto second = perturb_study_params({4, 5.5, 9}, 1.0, 10, b);
    REQUIRE(first.size() == 10);
    for (std::size_t l = 0; l < first.size(); ++l) {
        CHECK(first[l].m == second[l].m);
        CHECK(first[l].sd == second[l].sd);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(first[l].m[k] >= 0.0);
            CHECK(first[l].sd[k] > 0.0);
        }
    }
    // Frozen at first implementation.
    CHECK(first[0].m[0] == doctest::Approx(3.5056204461728311).epsilon(1e-12));
    CHECK(first[9].sd[2] == doctest::Approx(0.58719948621250606).epsilon(1e-12));
}

TEST_CASE("oracle substitution gives zero simulation bias") {
    const SimEstimatorHook oracle = [](const StudySummary&, const AdditiveEffect& truth, std::uint64_t) { return truth; };
    const BiasReport r = run_scenario(small_scenario(), oracle);
    CHECK(r.bias_g_sim == 0.0);
    CHECK(r.bias_gwm_sim == 0.0);
    CHECK(r.bias_g_crude > 0.0);
    CHECK(r.replicates == 12);
}

TEST_CASE("run_scenario is deterministic across worker counts") {
    Scenario s = small_scenario();
    const BiasReport serial = run_scenario(s);
    for (int w : {2, 5}) {
        s.workers = w;
        const BiasReport parallel = run_scenario(s);
        CHECK(parallel.bias_g_crude == serial.bias_g_crude);
        CHECK(parallel.bias_gwm_crude == serial.bias_gwm_crude);
        CHECK(parallel.bias_g_sim == serial.bias_g_sim);
        CHECK(parallel.bias_gwm_sim == serial.bias_gwm_sim);
        CHECK(parallel.mc_se == serial.mc_se);
    }
    for (double v : {serial.bias_g_crude, serial.bias_gwm_crude, serial.bias_g_sim, serial.bias_gwm_sim})
        CHECK(v >= 0.0);
}

TEST_CASE("alternative reported summaries and truncation run") {
    Scenario s = small_scenario();
    s.reported = ReportedSummary::sample;
    s.truncation = Truncation::per_group;
    s.crude_sd = CrudeStandardizer::pooled_all;
    const BiasReport r = run_scenario(s);
    CHECK(r.bias_g_sim >= 0.0);
    CHECK(std::isfinite(r.bias_gwm_crude));
}

TEST_CASE("simulation beats crude in nearly every batch at a large effect") {
    Scenario s;
    s.density = DensityId::normal;
    s.studies = 10;
    s.mean_vec = {4, 5.5, 11};
    s.sigma_ws = 1;
    s.n = {150, 200, 120};
    s.mc_reps = 40;
    s.inner_iterations = 200;
    s.seed = 404;
    const auto reps = run_replicates(s);
    int wins = 0;
    for (std::size_t b = 0; b < reps.size(); b += 2) {
        const double crude = (reps[b].gwm_crude + reps[b + 1].gwm_crude) / 2;
        const double sim = (reps[b].gwm_sim + reps[b + 1].gwm_sim) / 2;
        wins += sim < crude;
    }
    CHECK(wins >= 19);
}

TEST_CASE("simulation g-WM bias shrinks as sample sizes grow") {
    Scenario s;
    s.density = DensityId::normal;
    s.studies = 10;
    s.mean_vec = {4, 5.5, 11};
    s.sigma_ws = 1;
    s.mc_reps = 30;
    s.inner_iterations = 300;
    s.seed = 8;
    double prev = std::numeric_limits<double>::infinity();
    int inversions = 0;
    for (const auto& n : kSampleSizeTriplets) {
        s.n = n;
        const double bias = run_scenario(s).bias_gwm_sim;
        MESSAGE("n = (" << n[0] << ", " << n[1] << ", " << n[2] << ") sim g-WM bias " << bias);
        inversions += bias >= prev;
        prev = bias;
    }
    CHECK(inversions <= 1);
}

TEST_CASE("scenario validation and grid") {
    Scenario s;
    CHECK(s.is_grid_cell());
    s.studies = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = Scenario{};
    s.n = {12, 20, 10};
    CHECK_NOTHROW(s.validate());
    CHECK_FALSE(s.is_grid_cell());

    const auto grid = standard_grid(Scenario{});
    CHECK(grid.size() == 576);
    for (const auto& cell : grid) CHECK(cell.is_grid_cell());

    CHECK(approximate_true_g({4, 5.5, 11}, 1.0) == 1.64);
    CHECK(approximate_true_g({4, 5.5, 7}, 5.0) == 0.30);
    CHECK(std::isnan(approximate_true_g({1, 2, 3}, 1.0)));
}

TEST_CASE("presence fixture counts") {
    Xoshiro256 rng(1);
    const PresenceFixture fx = presence_fixture(rng);
    CHECK(fx.values.size() == 90);
    for (std::size_t k = 0; k < 3; ++k) CHECK(fx.present[k] + fx.absent[k] == 30);

    // Mean present counts against 30 * P(N(mu, 5) > 6).
    const std::array<double, 3> expected{10.337347751690274, 13.80516488168913, 17.37779128317309};
    const int fixtures = 4000;
    std::array<double, 3> total{};
    for (int i = 0; i < fixtures; ++i) {
        Xoshiro256 r = make_stream(55, {static_cast<std::uint64_t>(i)});
        const auto f = presence_fixture(r);
        for (std::size_t k = 0; k < 3; ++k) total[k] += f.present[k];
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const double p = expected[k] / 30;
        const double se = std::sqrt(30 * p * (1 - p) / fixtures);
        CHECK(std::abs(total[k] / fixtures - expected[k]) <= 4 * se);
    }

    Xoshiro256 r2(9);
    const auto all = presence_fixture(r2, -std::numeric_limits<double>::infinity());
    CHECK(all.present == std::array<long, 3>{30, 30, 30});
}
