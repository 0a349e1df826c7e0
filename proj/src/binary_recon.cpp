#include "gmeta/binary_recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gmeta {

namespace {

constexpr double kZ95 = 1.96;

bool feasible(const std::array<double, 4>& cells, long m_top, long m_bottom) {
    const auto in_range = [](double v, long margin) {
        return std::isfinite(v) && v >= -0.5 && v <= static_cast<double>(margin) + 0.5;
    };
    return in_range(cells[0], m_top) && in_range(cells[1], m_top) && in_range(cells[2], m_bottom) &&
           in_range(cells[3], m_bottom);
}

long round_within(double v, long margin) {
    return std::clamp(static_cast<long>(std::round(v)), 0L, margin);
}

} // namespace

std::string_view to_string(OrLabel label) noexcept {
    return label == OrLabel::ab_vs_aa ? "AB_vs_AA" : "BB_vs_AB";
}

OrLabel parse_or_label(std::string_view text) {
    if (text == "AB_vs_AA") return OrLabel::ab_vs_aa;
    if (text == "BB_vs_AB") return OrLabel::bb_vs_ab;
    throw std::invalid_argument("unknown OR label '" + std::string(text) + "' (expected AB_vs_AA|BB_vs_AB)");
}

void validate(const OrRecord& r) {
    if (!(r.or_value > 0.0) || !std::isfinite(r.or_value)) throw std::invalid_argument("odds ratio must be positive");
    if (!(r.ci_lo > 0.0) || !(r.ci_lo < r.ci_hi) || !std::isfinite(r.ci_hi))
        throw std::invalid_argument("confidence interval must satisfy 0 < ci_lo < ci_hi");
    if (r.or_value < r.ci_lo || r.or_value > r.ci_hi)
        throw std::invalid_argument("odds ratio lies outside its confidence interval");
    if (r.m_top < 1 || r.m_bottom < 1) throw std::invalid_argument("row margins must be at least 1");
}

double se_from_ci(double ci_lo, double ci_hi) {
    if (!(ci_lo > 0.0) || !(ci_lo < ci_hi)) throw std::domain_error("se_from_ci: need 0 < ci_lo < ci_hi");
    return (std::log(ci_hi) - std::log(ci_lo)) / (2.0 * kZ95);
}

std::vector<CandidateTable> recover_tables(const OrRecord& record) {
    validate(record);
    const double odds = record.or_value;
    const double m1 = static_cast<double>(record.m_top);
    const double m2 = static_cast<double>(record.m_bottom);
    const double se = se_from_ci(record.ci_lo, record.ci_hi);
    const double se2 = se * se;

    const double alpha = (1.0 - odds) * (1.0 - odds) + odds * m2 * se2;
    const double lambda = odds * m1 * (2.0 * (1.0 - odds) - m2 * se2);
    const double gamma = odds * m1 * (odds * m1 + m2);
    double disc = lambda * lambda - 4.0 * alpha * gamma;
    if (disc < 0.0) {
        if (disc > -1e-12 * lambda * lambda) {
            disc = 0.0;
        } else {
            std::ostringstream msg;
            msg << to_string(record.label) << " (OR " << odds << ", CI " << record.ci_lo << "-" << record.ci_hi
                << ", margins " << record.m_top << "/" << record.m_bottom << "): negative discriminant " << disc;
            throw ReconstructionError(msg.str());
        }
    }
    const double root = std::sqrt(disc);

    std::vector<CandidateTable> out;
    for (RootBranch branch : {RootBranch::plus, RootBranch::minus}) {
        const double a = branch == RootBranch::plus ? -(lambda + root) / (2.0 * alpha) : -(lambda - root) / (2.0 * alpha);
        const double denom = odds * m1 + a * (1.0 - odds);
        CandidateTable t;
        t.root_branch = branch;
        t.cells = {a, m1 - a, a * m2 / denom, odds * m2 * (m1 - a) / denom};
        if (!feasible(t.cells, record.m_top, record.m_bottom)) continue;
        const long a_int = round_within(t.cells[0], record.m_top);
        const long c_int = round_within(t.cells[2], record.m_bottom);
        t.counts = {a_int, record.m_top - a_int, c_int, record.m_bottom - c_int};
        out.push_back(t);
    }
    if (out.empty()) {
        std::ostringstream msg;
        msg << to_string(record.label) << " (OR " << odds << "): both reconstructed tables are infeasible";
        throw ReconstructionError(msg.str());
    }
    return out;
}

MergedTable select_pairing(std::span<const CandidateTable> ab_aa_candidates,
                           std::span<const CandidateTable> bb_ab_candidates) {
    if (ab_aa_candidates.empty() || bb_ab_candidates.empty())
        throw std::invalid_argument("select_pairing: each record needs at least one candidate table");

    MergedTable merged;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ab_aa_candidates.size(); ++i) {
        for (std::size_t j = 0; j < bb_ab_candidates.size(); ++j) {
            const auto& lower = ab_aa_candidates[i].counts; // AB on top
            const auto& upper = bb_ab_candidates[j].counts; // AB on the bottom
            const double dp = static_cast<double>(lower[0] - upper[2]);
            const double da = static_cast<double>(lower[1] - upper[3]);
            const double dist = std::sqrt(dp * dp + da * da);
            merged.distances.push_back(dist);
            if (dist < best) {
                best = dist;
                merged.ab_aa_index = i;
                merged.bb_ab_index = j;
            }
        }
    }
    merged.ab_distance = best;

    const auto& lower = ab_aa_candidates[merged.ab_aa_index].counts;
    const auto& upper = bb_ab_candidates[merged.bb_ab_index].counts;
    const long ab_margin = lower[0] + lower[1];
    if (ab_margin != upper[2] + upper[3])
        throw std::invalid_argument("select_pairing: the two records disagree on the AB group size");

    merged.rows[kRowBB] = {upper[0], upper[1]};
    const long present =
        std::clamp(static_cast<long>(std::round(static_cast<double>(lower[0] + upper[2]) / 2.0)), 0L, ab_margin);
    merged.rows[kRowAB] = {present, ab_margin - present};
    merged.rows[kRowAA] = {lower[2], lower[3]};
    return merged;
}

IndicatorData expand_indicators(const MergedTable& merged) {
    IndicatorData out;
    // Codes 1 (AA), 2 (AB), 3 (BB) map to rows AA, AB, BB.
    for (const auto& [row, code] : {std::pair{kRowAA, 1}, std::pair{kRowAB, 2}, std::pair{kRowBB, 3}}) {
        const auto [present, absent] = merged.rows[row];
        for (long i = 0; i < present; ++i) {
            out.phenotype.push_back(1);
            out.genotype.push_back(code);
        }
        for (long i = 0; i < absent; ++i) {
            out.phenotype.push_back(0);
            out.genotype.push_back(code);
        }
    }
    return out;
}

LogisticFit fit_logistic(std::span<const int> y, std::span<const int> x, int max_iterations, double tolerance) {
    if (y.size() != x.size() || y.empty())
        throw std::invalid_argument("fit_logistic: y and x must be non-empty and equal length");
    if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); }))
        throw LogisticFitError("fit_logistic: outcome is constant");

    struct Moments {
        double u0 = 0.0, u1 = 0.0, i00 = 0.0, i01 = 0.0, i11 = 0.0;
        double det() const { return i00 * i11 - i01 * i01; }
    };
    const auto evaluate = [&](double b0, double b1) {
        Moments m;
        for (std::size_t r = 0; r < y.size(); ++r) {
            const double xr = static_cast<double>(x[r]);
            const double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * xr)));
            const double w = p * (1.0 - p);
            m.u0 += y[r] - p;
            m.u1 += (y[r] - p) * xr;
            m.i00 += w;
            m.i01 += w * xr;
            m.i11 += w * xr * xr;
        }
        if (!(m.det() > 1e-12 * std::max(1.0, m.i00 * m.i11)))
            throw LogisticFitError("fit_logistic: information matrix is singular (separation)");
        return m;
    };
    const auto result = [](double b0, double b1, const Moments& m, int iterations) {
        LogisticFit fit;
        fit.intercept = b0;
        fit.slope = b1;
        fit.se_intercept = std::sqrt(m.i11 / m.det());
        fit.se_slope = std::sqrt(m.i00 / m.det());
        fit.iterations = iterations;
        return fit;
    };

    double b0 = 0.0, b1 = 0.0;
    std::ostringstream trace;
    for (int it = 1; it <= max_iterations; ++it) {
        const Moments m = evaluate(b0, b1);
        if (std::max(std::abs(m.u0), std::abs(m.u1)) < tolerance) return result(b0, b1, m, it - 1);

        const double step0 = (m.i11 * m.u0 - m.i01 * m.u1) / m.det();
        const double step1 = (m.i00 * m.u1 - m.i01 * m.u0) / m.det();
        b0 += step0;
        b1 += step1;
        trace << "  iter " << it << ": b0=" << b0 << " b1=" << b1
              << " max|score|=" << std::max(std::abs(m.u0), std::abs(m.u1)) << "\n";
        if (!std::isfinite(b1) || std::abs(b1) > 50.0)
            throw LogisticFitError("fit_logistic: slope diverges (separation)\n" + trace.str());
        if (std::max(std::abs(step0), std::abs(step1)) < tolerance) return result(b0, b1, evaluate(b0, b1), it);
    }
    throw LogisticFitError("fit_logistic: no convergence after " + std::to_string(max_iterations) +
                           " iterations\n" + trace.str());
}

CombinedOr combined_or(const MergedTable& merged) {
    const IndicatorData data = expand_indicators(merged);
    const LogisticFit fit = fit_logistic(data.phenotype, data.genotype);
    CombinedOr out;
    out.beta = fit.slope;
    out.se_beta = fit.se_slope;
    out.or_value = std::exp(fit.slope);
    out.ci_lo = std::exp(fit.slope - kZ95 * fit.se_slope);
    out.ci_hi = std::exp(fit.slope + kZ95 * fit.se_slope);
    out.iterations_used = fit.iterations;
    return out;
}

} // namespace gmeta
