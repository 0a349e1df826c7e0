#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gmeta/binary_recon.hpp"

using namespace gmeta;

namespace {

const OrRecord kAbAa{OrLabel::ab_vs_aa, 3.00, 1.05, 8.60, 30, 30};
const OrRecord kBbAb{OrLabel::bb_vs_ab, 1.00, 0.36, 2.81, 30, 30};

MergedTable table_of(std::array<long, 2> bb, std::array<long, 2> ab, std::array<long, 2> aa) {
    MergedTable t;
    t.rows = {bb, ab, aa};
    return t;
}

double log_lik(const MergedTable& t, double b0, double b1) {
    double ll = 0;
    for (std::size_t r = 0; r < 3; ++r) {
        const double eta = b0 + b1 * static_cast<double>(3 - r);
        // log p = -log(1 + e^-eta), log(1-p) = -log(1 + e^eta)
        ll -= t.rows[r][0] * std::log1p(std::exp(-eta)) + t.rows[r][1] * std::log1p(std::exp(eta));
    }
    return ll;
}

// Profile likelihood over a slope grid; intercept by bisection on its score.
double grid_search_slope(const MergedTable& t, double lo, double hi, double step) {
    auto best_b0 = [&](double b1) {
        double a = -60, b = 60;
        for (int it = 0; it < 200; ++it) {
            const double mid = (a + b) / 2;
            double score = 0;
            for (std::size_t r = 0; r < 3; ++r) {
                const double p = 1 / (1 + std::exp(-(mid + b1 * static_cast<double>(3 - r))));
                score += t.rows[r][0] - (t.rows[r][0] + t.rows[r][1]) * p;
            }
            (score > 0 ? a : b) = mid;
        }
        return (a + b) / 2;
    };
    double best = lo, best_ll = -INFINITY;
    for (double b1 = lo; b1 <= hi; b1 += step) {
        const double ll = log_lik(t, best_b0(b1), b1);
        if (ll > best_ll) best_ll = ll, best = b1;
    }
    return best;
}

bool same_counts(const CandidateTable& c, std::array<long, 4> expected) { return c.counts == expected; }

} // namespace

TEST_CASE("standard error from a confidence interval") {
    CHECK(se_from_ci(1.05, 8.60) == doctest::Approx(0.5364724589515382).epsilon(1e-12));
    CHECK(se_from_ci(0.36, 2.81) == doctest::Approx(0.5241927884891928).epsilon(1e-12));
    CHECK(se_from_ci(std::exp(-1.96), std::exp(1.96)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(se_from_ci(0.0, 2.0), std::domain_error);
    CHECK_THROWS_AS(se_from_ci(2.0, 1.0), std::domain_error);
}

TEST_CASE("candidate tables for the worked example") {
    const auto t5 = recover_tables(kAbAa);
    REQUIRE(t5.size() == 2);
    CHECK(same_counts(t5[0], {18, 12, 10, 20}));
    CHECK(same_counts(t5[1], {20, 10, 12, 18}));
    CHECK(t5[0].cells[0] == doctest::Approx(18.36).epsilon(0.01));
    CHECK(t5[1].cells[0] == doctest::Approx(19.68).epsilon(0.01));

    const auto t6 = recover_tables(kBbAb);
    REQUIRE(t6.size() == 2);
    CHECK(same_counts(t6[0], {12, 18, 12, 18}));
    CHECK(same_counts(t6[1], {18, 12, 18, 12}));
    CHECK(t6[0].cells[0] == doctest::Approx(12.42).epsilon(0.01));
    CHECK(t6[1].cells[0] == doctest::Approx(17.58).epsilon(0.01));
    // OR = 1, equal margins: mirror images.
    CHECK(t6[0].cells[0] + t6[1].cells[0] == doctest::Approx(30.0));
}

TEST_CASE("unrounded candidates reproduce the reported OR") {
    for (const auto& rec : {kAbAa, kBbAb, OrRecord{OrLabel::ab_vs_aa, 0.4, 0.2, 0.8, 120, 90}}) {
        for (const auto& c : recover_tables(rec)) {
            const auto& x = c.cells;
            CHECK(x[0] * x[3] / (x[1] * x[2]) == doctest::Approx(rec.or_value).epsilon(1e-6));
            CHECK(x[0] + x[1] == doctest::Approx(static_cast<double>(rec.m_top)));
            CHECK(x[2] + x[3] == doctest::Approx(static_cast<double>(rec.m_bottom)));
        }
    }
}

TEST_CASE("round trip over random tables") {
    std::mt19937_64 gen(12345);
    std::uniform_int_distribution<long> cell(1, 250);
    int hits = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
        const std::array<long, 4> t{cell(gen), cell(gen), cell(gen), cell(gen)};
        const double a = t[0], b = t[1], c = t[2], d = t[3];
        const double lor = std::log(a * d / (b * c));
        const double se = std::sqrt(1 / a + 1 / b + 1 / c + 1 / d);
        const OrRecord rec{OrLabel::ab_vs_aa, std::exp(lor), std::exp(lor - 1.96 * se), std::exp(lor + 1.96 * se),
                           t[0] + t[1], t[2] + t[3]};
        const auto cands = recover_tables(rec);
        const bool found =
            std::any_of(cands.begin(), cands.end(), [&](const CandidateTable& ct) { return ct.counts == t; });
        if (!found) MESSAGE("table " << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << " not recovered");
        hits += found;
    }
    CHECK(hits == trials);
}

TEST_CASE("reconstruction errors") {
    // A CI far too narrow for 30/30 margins.
    CHECK_THROWS_AS(recover_tables(OrRecord{OrLabel::ab_vs_aa, 3.0, 2.99, 3.01, 30, 30}), ReconstructionError);
    CHECK_THROWS_AS(recover_tables(OrRecord{OrLabel::ab_vs_aa, 3.0, 1.05, 8.6, 0, 30}), std::invalid_argument);
    CHECK_THROWS_AS(recover_tables(OrRecord{OrLabel::ab_vs_aa, -1.0, 1.05, 8.6, 30, 30}), std::invalid_argument);
}

TEST_CASE("pairing selection on the worked example") {
    const auto t5 = recover_tables(kAbAa);
    const auto t6 = recover_tables(kBbAb);
    const MergedTable m = select_pairing(t5, t6);
    REQUIRE(m.distances.size() == 4);
    CHECK(m.distances[0] == doctest::Approx(std::sqrt(72.0)));
    CHECK(m.distances[1] == doctest::Approx(0.0));
    CHECK(m.distances[2] == doctest::Approx(std::sqrt(128.0)));
    CHECK(m.distances[3] == doctest::Approx(std::sqrt(8.0)));
    CHECK(m.ab_aa_index == 0);
    CHECK(m.bb_ab_index == 1);
    CHECK(m.rows[kRowBB] == std::array<long, 2>{18, 12});
    CHECK(m.rows[kRowAB] == std::array<long, 2>{18, 12});
    CHECK(m.rows[kRowAA] == std::array<long, 2>{10, 20});

    // Reordering candidates picks the same merged table.
    std::vector<CandidateTable> r5(t5.rbegin(), t5.rend()), r6(t6.rbegin(), t6.rend());
    const MergedTable r = select_pairing(r5, r6);
    CHECK(r.rows == m.rows);
    CHECK(r.ab_distance == m.ab_distance);
}

TEST_CASE("pairing averages AB rows and breaks ties on the first pairing") {
    CandidateTable ab_aa;
    ab_aa.counts = {17, 13, 10, 20};
    CandidateTable bb_ab;
    bb_ab.counts = {15, 15, 18, 12};
    const std::vector<CandidateTable> left{ab_aa}, right{bb_ab};
    const MergedTable m = select_pairing(left, right);
    CHECK(m.ab_distance == doctest::Approx(std::sqrt(2.0)));
    CHECK(m.rows[kRowAB] == std::array<long, 2>{18, 12});
    CHECK(m.rows[kRowBB] == std::array<long, 2>{15, 15});
    CHECK(m.rows[kRowAA] == std::array<long, 2>{10, 20});

    CandidateTable same_ab = bb_ab;
    same_ab.counts = {9, 21, 17, 13};
    const std::vector<CandidateTable> twins{ab_aa, ab_aa}, tied{same_ab, same_ab};
    const MergedTable t = select_pairing(twins, tied);
    CHECK(t.ab_aa_index == 0);
    CHECK(t.bb_ab_index == 0);
    CHECK(t.ab_distance == 0.0);

    const std::vector<CandidateTable> none;
    CHECK_THROWS(select_pairing(none, right));
}

TEST_CASE("indicator expansion") {
    const MergedTable t7 = table_of({18, 12}, {18, 12}, {10, 20});
    const IndicatorData d = expand_indicators(t7);
    REQUIRE(d.phenotype.size() == 90);
    REQUIRE(d.genotype.size() == 90);
    std::array<int, 4> ones{}, sizes{};
    for (std::size_t i = 0; i < d.phenotype.size(); ++i) {
        ones[d.genotype[i]] += d.phenotype[i];
        ++sizes[d.genotype[i]];
    }
    CHECK(ones == std::array<int, 4>{0, 10, 18, 18});
    CHECK(sizes == std::array<int, 4>{0, 30, 30, 30});

    const IndicatorData none = expand_indicators(table_of({0, 4}, {0, 7}, {0, 2}));
    CHECK(none.phenotype.size() == 13);
    CHECK(std::count(none.phenotype.begin(), none.phenotype.end(), 1) == 0);
}

TEST_CASE("combined OR for the worked example") {
    const CombinedOr c = combined_or(select_pairing(recover_tables(kAbAa), recover_tables(kBbAb)));
    CHECK(std::abs(c.or_value - 1.727401) <= 0.002);
    CHECK(std::abs(c.ci_lo - 1.021726) <= 0.005);
    CHECK(std::abs(c.ci_hi - 2.920464) <= 0.005);
    CHECK(c.or_value > 1.0);
    CHECK(c.or_value < 3.0);
    CHECK(c.or_value == doctest::Approx(std::exp(c.beta)));
    CHECK(c.ci_lo == doctest::Approx(std::exp(c.beta - 1.96 * c.se_beta)));
    CHECK(c.ci_hi == doctest::Approx(std::exp(c.beta + 1.96 * c.se_beta)));
}

TEST_CASE("logistic fit matches a likelihood grid search") {
    for (const auto& t : {table_of({9, 1}, {5, 5}, {1, 9}), table_of({18, 12}, {18, 12}, {10, 20}),
                          table_of({3, 40}, {7, 22}, {2, 30})}) {
        const CombinedOr c = combined_or(t);
        // Coarse pass then a fine pass with step 1e-4.
        const double coarse = grid_search_slope(t, -6, 6, 1e-2);
        const double fine = grid_search_slope(t, coarse - 0.02, coarse + 0.02, 1e-4);
        CHECK(std::abs(c.beta - fine) <= 1e-3);
    }
}

TEST_CASE("no association and separation") {
    const CombinedOr flat = combined_or(table_of({6, 9}, {6, 9}, {6, 9}));
    CHECK(flat.beta == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(flat.or_value == doctest::Approx(1.0));

    CHECK_THROWS_AS(combined_or(table_of({30, 0}, {0, 30}, {0, 30})), LogisticFitError);
    CHECK_THROWS_AS(combined_or(table_of({0, 30}, {0, 30}, {0, 30})), LogisticFitError);
}
