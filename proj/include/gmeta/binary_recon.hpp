#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gmeta {

enum class OrLabel { ab_vs_aa, bb_vs_ab };

std::string_view to_string(OrLabel label) noexcept;
OrLabel parse_or_label(std::string_view text);

/// A reported odds ratio for one genotype contrast. The "top" row is the
/// higher-risk group (AB for AB_vs_AA, BB for BB_vs_AB).
struct OrRecord {
    OrLabel label = OrLabel::ab_vs_aa;
    double or_value = 1.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long m_top = 0;
    long m_bottom = 0;
};

void validate(const OrRecord& r);

enum class RootBranch { plus, minus };

/// One reconstructed 2x2 table. Top row (a, b), bottom row (c, d); columns are
/// (present, absent).
struct CandidateTable {
    std::array<double, 4> cells{};
    std::array<long, 4> counts{};
    RootBranch root_branch = RootBranch::plus;
};

/// A 2x2 table cannot be recovered from the reported record.
class ReconstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Logistic fit failures (separation, non-convergence).
class LogisticFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// (ln UL - ln LL) / (2 * 1.96).
double se_from_ci(double ci_lo, double ci_hi);

/// Both roots of the cell-recovery quadratic, completed to tables and rounded
/// with margins preserved. Infeasible candidates are dropped; index 0 is the
/// plus branch when both survive.
std::vector<CandidateTable> recover_tables(const OrRecord& record);

/// Rows ordered BB, AB, AA; columns (present, absent).
struct MergedTable {
    std::array<std::array<long, 2>, 3> rows{};
    /// Pairing index: ab_aa_index * 2 + bb_ab_index for two candidates each.
    std::size_t ab_aa_index = 0;
    std::size_t bb_ab_index = 0;
    double ab_distance = 0.0;
    /// AB-row distance for every pairing, in evaluation order.
    std::vector<double> distances;

    long margin(std::size_t row) const { return rows[row][0] + rows[row][1]; }
};

inline constexpr std::size_t kRowBB = 0;
inline constexpr std::size_t kRowAB = 1;
inline constexpr std::size_t kRowAA = 2;

/// Picks the pairing whose AB rows are closest (ties go to the first in
/// ab_aa-major order) and merges it into a 3x2 table.
MergedTable select_pairing(std::span<const CandidateTable> ab_aa_candidates,
                           std::span<const CandidateTable> bb_ab_candidates);

struct IndicatorData {
    std::vector<int> phenotype;
    std::vector<int> genotype;
};

/// Individual-level rows: AA coded 1, AB 2, BB 3; within a group the present
/// rows come first.
IndicatorData expand_indicators(const MergedTable& merged);

struct LogisticFit {
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    int iterations = 0;
};

/// Newton-Raphson fit of logit P(y = 1) = b0 + b1 * x.
LogisticFit fit_logistic(std::span<const int> y, std::span<const int> x, int max_iterations = 50,
                         double tolerance = 1e-10);

struct CombinedOr {
    double or_value = 1.0;
    double ci_lo = 1.0;
    double ci_hi = 1.0;
    double beta = 0.0;
    double se_beta = 0.0;
    int iterations_used = 0;
};

CombinedOr combined_or(const MergedTable& merged);

} // namespace gmeta
