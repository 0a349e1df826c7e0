#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmeta/binary_recon.hpp"
#include "gmeta/effect_model.hpp"
#include "gmeta/mc_harness.hpp"
#include "gmeta/meta_re.hpp"

namespace gmeta::io {

/// Input error tied to a 1-based line of the source file (0 = whole file).
class InputError : public std::runtime_error {
public:
    InputError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Header-indexed CSV rows. Fields are trimmed; blank lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    struct Row {
        std::size_t line = 0;
        std::vector<std::string> fields;
    };
    std::vector<Row> rows;

    /// Column index; throws InputError if `name` is missing from the header.
    std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

double parse_double(const std::string& text, std::size_t line, const std::string& field);
long parse_long(const std::string& text, std::size_t line, const std::string& field);

// Study summaries: study_id,m1,m2,m3,sd1,sd2,sd3,n1,n2,n3
std::vector<StudySummary> read_study_summaries(std::istream& in);
std::vector<StudySummary> read_study_summaries_json(std::istream& in);
void write_study_summaries_json(std::ostream& out, const std::vector<StudySummary>& studies);

// Effects: study_id,method,beta,sd_beta,d,g,v_g,seed,iterations
struct EffectRow {
    AdditiveEffect effect;
    std::string seed;
    std::string iterations;
};
void write_effects(std::ostream& out, const std::vector<EffectRow>& rows, int precision);
std::vector<EffectEstimate> read_effect_estimates(std::istream& in);

// Pooled: k,g_wm,v_wm,tau2,ci_lo,ci_hi
void write_meta_result(std::ostream& out, const MetaResult& result, int precision);

// OR records: study_id,label,or,ci_lo,ci_hi,m_top,m_bottom
struct StudyOrRecords {
    std::string study_id;
    OrRecord ab_vs_aa;
    OrRecord bb_vs_ab;
};
std::vector<StudyOrRecords> read_or_records(std::istream& in);

// Combined: study_id,or_combined,ci_lo,ci_hi,pairing,ab_distance
struct CombinedOrRow {
    std::string study_id;
    CombinedOr combined;
    std::string pairing;
    double ab_distance = 0.0;
};
void write_combined_ors(std::ostream& out, const std::vector<CombinedOrRow>& rows, int precision);

/// Pairing label such as "a-b": candidate letters for AB_vs_AA then BB_vs_AB.
std::string pairing_label(const MergedTable& merged);

void write_bias_header(std::ostream& out);
void write_bias_row(std::ostream& out, const BiasReport& report, int precision);

/// Scenario from a JSON object; missing keys keep the values in `base`.
Scenario parse_scenario_json(std::istream& in, const Scenario& base = {});

/// Shortest round-trippable text for `value` at `precision` significant digits.
std::string format_double(double value, int precision);

} // namespace gmeta::io
