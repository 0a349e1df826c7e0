#include "gmeta/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace gmeta::io {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                                 : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

} // namespace

InputError::InputError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(1, "missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw InputError(line_no, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                          std::to_string(fields.size()));
        table.rows.push_back({line_no, std::move(fields)});
    }
    if (!have_header) throw InputError(0, "input is empty (a header row is required)");
    return table;
}

double parse_double(const std::string& text, std::size_t line, const std::string& field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw InputError(line, "field '" + field + "': '" + text + "' is not a finite number");
    return value;
}

long parse_long(const std::string& text, std::size_t line, const std::string& field) {
    long value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw InputError(line, "field '" + field + "': '" + text + "' is not an integer");
    return value;
}

std::string format_double(double value, int precision) {
    std::ostringstream os;
    os.precision(precision);
    os << value;
    return os.str();
}

std::vector<StudySummary> read_study_summaries(std::istream& in) {
    const CsvTable table = read_csv(in);
    static const std::array<const char*, 3> m_cols{"m1", "m2", "m3"};
    static const std::array<const char*, 3> sd_cols{"sd1", "sd2", "sd3"};
    static const std::array<const char*, 3> n_cols{"n1", "n2", "n3"};
    const std::size_t id_col = table.column("study_id");
    std::array<std::size_t, 3> mi{}, si{}, ni{};
    for (std::size_t k = 0; k < 3; ++k) {
        mi[k] = table.column(m_cols[k]);
        si[k] = table.column(sd_cols[k]);
        ni[k] = table.column(n_cols[k]);
    }

    std::vector<StudySummary> out;
    for (const auto& row : table.rows) {
        StudySummary s;
        s.study_id = row.fields[id_col];
        for (std::size_t k = 0; k < 3; ++k) {
            s.m[k] = parse_double(row.fields[mi[k]], row.line, m_cols[k]);
            s.sd[k] = parse_double(row.fields[si[k]], row.line, sd_cols[k]);
            s.n[k] = parse_long(row.fields[ni[k]], row.line, n_cols[k]);
        }
        try {
            validate(s);
        } catch (const std::invalid_argument& e) {
            throw InputError(row.line, e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StudySummary> read_study_summaries_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw InputError(0, "expected a JSON array of study objects");
    std::vector<StudySummary> out;
    std::size_t index = 0;
    for (const auto& obj : doc) {
        ++index;
        try {
            StudySummary s;
            s.study_id = obj.at("study_id").get<std::string>();
            for (std::size_t k = 0; k < 3; ++k) {
                const std::string idx = std::to_string(k + 1);
                s.m[k] = obj.at("m" + idx).get<double>();
                s.sd[k] = obj.at("sd" + idx).get<double>();
                s.n[k] = obj.at("n" + idx).get<long>();
            }
            validate(s);
            out.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw InputError(0, "study #" + std::to_string(index) + ": " + e.what());
        }
    }
    return out;
}

void write_study_summaries_json(std::ostream& out, const std::vector<StudySummary>& studies) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& s : studies) {
        nlohmann::json obj{{"study_id", s.study_id}};
        for (std::size_t k = 0; k < 3; ++k) {
            const std::string idx = std::to_string(k + 1);
            obj["m" + idx] = s.m[k];
            obj["sd" + idx] = s.sd[k];
            obj["n" + idx] = s.n[k];
        }
        doc.push_back(std::move(obj));
    }
    out << doc.dump(2) << "\n";
}

void write_effects(std::ostream& out, const std::vector<EffectRow>& rows, int precision) {
    out << "study_id,method,beta,sd_beta,d,g,v_g,seed,iterations\n";
    for (const auto& r : rows) {
        const auto& e = r.effect;
        out << e.study_id << ',' << to_string(e.method) << ',' << format_double(e.beta, precision) << ','
            << format_double(e.sd_beta, precision) << ',' << format_double(e.d, precision) << ','
            << format_double(e.g, precision) << ',' << format_double(e.v_g, precision) << ',' << r.seed << ','
            << r.iterations << '\n';
    }
}

std::vector<EffectEstimate> read_effect_estimates(std::istream& in) {
    const CsvTable table = read_csv(in);
    const std::size_t g_col = table.column("g");
    const std::size_t v_col = table.column("v_g");
    std::vector<EffectEstimate> out;
    for (const auto& row : table.rows) {
        const double g = parse_double(row.fields[g_col], row.line, "g");
        const double v = parse_double(row.fields[v_col], row.line, "v_g");
        if (!(v > 0.0)) throw InputError(row.line, "field 'v_g' must be positive");
        out.push_back({g, v});
    }
    return out;
}

void write_meta_result(std::ostream& out, const MetaResult& r, int precision) {
    out << "k,g_wm,v_wm,tau2,ci_lo,ci_hi\n"
        << r.k << ',' << format_double(r.g_wm, precision) << ',' << format_double(r.v_wm, precision) << ','
        << format_double(r.tau2, precision) << ',' << format_double(r.ci_lo, precision) << ','
        << format_double(r.ci_hi, precision) << '\n';
}

std::vector<StudyOrRecords> read_or_records(std::istream& in) {
    const CsvTable table = read_csv(in);
    const std::size_t id_col = table.column("study_id");
    const std::size_t label_col = table.column("label");
    const std::size_t or_col = table.column("or");
    const std::size_t lo_col = table.column("ci_lo");
    const std::size_t hi_col = table.column("ci_hi");
    const std::size_t top_col = table.column("m_top");
    const std::size_t bottom_col = table.column("m_bottom");

    struct Partial {
        std::size_t first_line = 0;
        std::optional<OrRecord> ab_aa;
        std::optional<OrRecord> bb_ab;
    };
    std::vector<std::string> order;
    std::map<std::string, Partial> by_study;
    for (const auto& row : table.rows) {
        OrRecord rec;
        try {
            rec.label = parse_or_label(row.fields[label_col]);
        } catch (const std::invalid_argument& e) {
            throw InputError(row.line, e.what());
        }
        rec.or_value = parse_double(row.fields[or_col], row.line, "or");
        rec.ci_lo = parse_double(row.fields[lo_col], row.line, "ci_lo");
        rec.ci_hi = parse_double(row.fields[hi_col], row.line, "ci_hi");
        rec.m_top = parse_long(row.fields[top_col], row.line, "m_top");
        rec.m_bottom = parse_long(row.fields[bottom_col], row.line, "m_bottom");
        try {
            validate(rec);
        } catch (const std::invalid_argument& e) {
            throw InputError(row.line, e.what());
        }

        const std::string& id = row.fields[id_col];
        auto [it, inserted] = by_study.try_emplace(id);
        if (inserted) {
            order.push_back(id);
            it->second.first_line = row.line;
        }
        auto& slot = rec.label == OrLabel::ab_vs_aa ? it->second.ab_aa : it->second.bb_ab;
        if (slot) throw InputError(row.line, "study '" + id + "' has more than one " + std::string(to_string(rec.label)) + " row");
        slot = rec;
    }

    std::vector<StudyOrRecords> out;
    for (const auto& id : order) {
        const Partial& p = by_study.at(id);
        if (!p.ab_aa || !p.bb_ab)
            throw InputError(p.first_line, "study '" + id + "' needs exactly one AB_vs_AA and one BB_vs_AB row");
        out.push_back({id, *p.ab_aa, *p.bb_ab});
    }
    return out;
}

std::string pairing_label(const MergedTable& merged) {
    std::string label;
    label += static_cast<char>('a' + merged.ab_aa_index);
    label += '-';
    label += static_cast<char>('a' + merged.bb_ab_index);
    return label;
}

void write_combined_ors(std::ostream& out, const std::vector<CombinedOrRow>& rows, int precision) {
    out << "study_id,or_combined,ci_lo,ci_hi,pairing,ab_distance\n";
    for (const auto& r : rows)
        out << r.study_id << ',' << format_double(r.combined.or_value, precision) << ','
            << format_double(r.combined.ci_lo, precision) << ',' << format_double(r.combined.ci_hi, precision) << ','
            << r.pairing << ',' << format_double(r.ab_distance, precision) << '\n';
}

void write_bias_header(std::ostream& out) {
    out << "density,L,sigma_ws,m1,m2,m3,n1,n2,n3,bias_g_crude,bias_gwm_crude,bias_g_sim,bias_gwm_sim,"
           "mc_se_g_crude,mc_se_gwm_crude,mc_se_g_sim,mc_se_gwm_sim,reps,inner_iterations,retries\n";
}

void write_bias_row(std::ostream& out, const BiasReport& r, int precision) {
    const Scenario& s = r.scenario;
    const auto f = [precision](double v) { return format_double(v, precision); };
    out << to_string(s.density) << ',' << s.studies << ',' << f(s.sigma_ws) << ',' << f(s.mean_vec[0]) << ','
        << f(s.mean_vec[1]) << ',' << f(s.mean_vec[2]) << ',' << s.n[0] << ',' << s.n[1] << ',' << s.n[2] << ','
        << f(r.bias_g_crude) << ',' << f(r.bias_gwm_crude) << ',' << f(r.bias_g_sim) << ',' << f(r.bias_gwm_sim);
    for (double se : r.mc_se) out << ',' << f(se);
    out << ',' << r.replicates << ',' << s.inner_iterations << ',' << r.retries << '\n';
}

Scenario parse_scenario_json(std::istream& in, const Scenario& base) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(0, std::string("invalid scenario JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError(0, "scenario config must be a JSON object");

    Scenario s = base;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "density") s.density = parse_density(value.get<std::string>());
            else if (key == "L") s.studies = value.get<int>();
            else if (key == "mean_vec") s.mean_vec = value.get<std::array<double, 3>>();
            else if (key == "sigma_ws") s.sigma_ws = value.get<double>();
            else if (key == "n_triplet") s.n = value.get<std::array<long, 3>>();
            else if (key == "mc_reps") s.mc_reps = value.get<long>();
            else if (key == "inner_iterations") s.inner_iterations = value.get<long>();
            else if (key == "seed") s.seed = value.get<std::uint64_t>();
            else if (key == "truncation") s.truncation = parse_truncation(value.get<std::string>());
            else if (key == "reported") s.reported = parse_reported(value.get<std::string>());
            else if (key == "crude_sd") s.crude_sd = parse_crude_standardizer(value.get<std::string>());
            else throw std::invalid_argument("unknown scenario key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(0, std::string("scenario config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(0, std::string("scenario config: ") + e.what());
    }
    return s;
}

} // namespace gmeta::io
