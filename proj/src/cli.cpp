#include "gmeta/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmeta/binary_recon.hpp"
#include "gmeta/effect_model.hpp"
#include "gmeta/io.hpp"
#include "gmeta/mc_harness.hpp"
#include "gmeta/meta_re.hpp"
#include "gmeta/sim_estimator.hpp"

namespace gmeta::cli {

namespace {

constexpr const char* kWorkersEnv = "GMETA_WORKERS";

struct CommonOptions {
    std::string input;
    std::string output;
    int precision = 6;
    int workers = 0;
};

int resolve_workers(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv(kWorkersEnv)) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input '" + path + "'");
    return in;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_manifest(const std::string& output, nlohmann::json manifest) {
    manifest["output_path"] = output;
    manifest["timestamp"] = utc_timestamp();
    write_file(output + ".manifest.json", manifest.dump(2) + "\n");
}

bool has_json_extension(const std::string& path) {
    return std::filesystem::path(path).extension() == ".json";
}

int cmd_effect(const CommonOptions& common, const std::string& method, long iterations, std::uint64_t seed,
               const std::string& crude_sd, std::ostream& out) {
    auto in = open_input(common.input);
    const auto studies =
        has_json_extension(common.input) ? io::read_study_summaries_json(in) : io::read_study_summaries(in);
    if (studies.empty()) throw io::InputError(0, "no studies in '" + common.input + "'");
    const CrudeStandardizer standardizer = parse_crude_standardizer(crude_sd);

    std::vector<io::EffectRow> rows;
    for (const auto& s : studies) {
        if (method == "crude") {
            rows.push_back({crude_effect(s, standardizer), "", ""});
        } else {
            const SimConfig config{iterations, seed, resolve_workers(common.workers)};
            rows.push_back({sim_effect(s, config), std::to_string(seed), std::to_string(iterations)});
        }
    }
    std::ostringstream csv;
    io::write_effects(csv, rows, common.precision);
    write_file(common.output, csv.str());

    nlohmann::json manifest{{"command", "effect"},      {"input_path", common.input}, {"method", method},
                            {"precision", common.precision}, {"crude_sd", crude_sd}};
    if (method == "sim") {
        manifest["seed"] = seed;
        manifest["iterations"] = iterations;
        manifest["workers"] = resolve_workers(common.workers);
    }
    write_manifest(common.output, manifest);
    out << "effect: wrote " << rows.size() << " studies to " << common.output << "\n";
    return 0;
}

int cmd_meta(const CommonOptions& common, std::ostream& out) {
    auto in = open_input(common.input);
    const auto effects = io::read_effect_estimates(in);
    if (effects.empty()) throw io::InputError(0, "no studies in '" + common.input + "'");
    const MetaResult result = pool_random_effects(effects);
    std::ostringstream csv;
    io::write_meta_result(csv, result, common.precision);
    write_file(common.output, csv.str());
    write_manifest(common.output, {{"command", "meta"},
                                   {"input_path", common.input},
                                   {"estimator", "DerSimonian-Laird"},
                                   {"precision", common.precision}});
    out << "meta: pooled " << result.k << " studies into " << common.output << "\n";
    return 0;
}

struct McOptions {
    std::string config;
    long reps = 0;
    long inner_iterations = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string truncation;
    std::string reported;
    std::string crude_sd;
    bool full_grid = false;
    bool allow_custom = false;
};

int cmd_mc(const CommonOptions& common, const McOptions& opt, std::ostream& out, std::ostream& err) {
    Scenario base;
    if (!opt.config.empty()) {
        auto in = open_input(opt.config);
        base = io::parse_scenario_json(in);
    }
    if (opt.reps > 0) base.mc_reps = opt.reps;
    if (opt.inner_iterations > 0) base.inner_iterations = opt.inner_iterations;
    if (opt.seed_set) base.seed = opt.seed;
    if (!opt.truncation.empty()) base.truncation = parse_truncation(opt.truncation);
    if (!opt.reported.empty()) base.reported = parse_reported(opt.reported);
    if (!opt.crude_sd.empty()) base.crude_sd = parse_crude_standardizer(opt.crude_sd);
    base.workers = resolve_workers(common.workers);

    const std::vector<Scenario> scenarios = opt.full_grid ? standard_grid(base) : std::vector<Scenario>{base};
    for (const auto& s : scenarios) {
        s.validate();
        if (!opt.allow_custom && !s.is_grid_cell())
            throw std::invalid_argument("scenario is not a cell of the standard grid (use --allow-custom)");
    }

    std::ostringstream csv;
    io::write_bias_header(csv);
    std::size_t done = 0;
    for (const auto& s : scenarios) {
        io::write_bias_row(csv, run_scenario(s), common.precision);
        if (scenarios.size() > 1) err << "mc: " << ++done << "/" << scenarios.size() << "\r" << std::flush;
    }
    if (scenarios.size() > 1) err << "\n";
    write_file(common.output, csv.str());

    nlohmann::json manifest{{"command", "mc"},
                            {"config_path", opt.config},
                            {"full_grid", opt.full_grid},
                            {"seed", base.seed},
                            {"replicates", base.mc_reps},
                            {"inner_iterations", base.inner_iterations},
                            {"truncation", to_string(base.truncation)},
                            {"reported", to_string(base.reported)},
                            {"crude_sd", to_string(base.crude_sd)},
                            {"workers", base.workers},
                            {"precision", common.precision}};
    if (!opt.full_grid) {
        manifest["scenario"] = {{"density", to_string(base.density)}, {"L", base.studies},
                                {"mean_vec", base.mean_vec},          {"sigma_ws", base.sigma_ws},
                                {"n_triplet", base.n}};
    }
    write_manifest(common.output, manifest);
    out << "mc: wrote " << scenarios.size() << " scenario rows to " << common.output << "\n";
    return 0;
}

int cmd_or(const CommonOptions& common, std::ostream& out) {
    auto in = open_input(common.input);
    const auto studies = io::read_or_records(in);
    if (studies.empty()) throw io::InputError(0, "no studies in '" + common.input + "'");
    std::vector<io::CombinedOrRow> rows;
    for (const auto& st : studies) {
        try {
            const auto lower = recover_tables(st.ab_vs_aa);
            const auto upper = recover_tables(st.bb_vs_ab);
            const MergedTable merged = select_pairing(lower, upper);
            rows.push_back({st.study_id, combined_or(merged), io::pairing_label(merged), merged.ab_distance});
        } catch (const std::exception& e) {
            throw std::runtime_error("study '" + st.study_id + "': " + e.what());
        }
    }
    std::ostringstream csv;
    io::write_combined_ors(csv, rows, common.precision);
    write_file(common.output, csv.str());
    write_manifest(common.output, {{"command", "or"}, {"input_path", common.input}, {"precision", common.precision}});
    out << "or: wrote " << rows.size() << " studies to " << common.output << "\n";
    return 0;
}

void add_common(CLI::App* sub, CommonOptions& common, bool needs_input) {
    if (needs_input) sub->add_option("-i,--input", common.input, "Input file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", common.output, "Output CSV (a .manifest.json is written beside it)")->required();
    sub->add_option("--precision", common.precision, "Significant digits for floats")
        ->capture_default_str()
        ->check(CLI::Range(1, 17));
    sub->add_option("--workers", common.workers,
                    std::string("Worker threads (default: $") + kWorkersEnv + " or 1)")
        ->check(CLI::PositiveNumber);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Meta-analysis of genetic association studies under the additive model", "gmeta"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* effect = app.add_subcommand("effect", "Per-study additive effect sizes from summary statistics");
    add_common(effect, common, true);
    std::string method = "crude";
    long iterations = 10000;
    std::uint64_t seed = kDefaultSeed;
    std::string crude_sd = "pooled-all";
    effect->add_option("--method", method, "crude | sim")->capture_default_str()->check(CLI::IsMember({"crude", "sim"}));
    effect->add_option("--iterations", iterations, "Simulation iterations")->capture_default_str()->check(CLI::PositiveNumber);
    effect->add_option("--seed", seed, "Simulation seed")->capture_default_str();
    effect->add_option("--crude-sd", crude_sd, "Crude standardizer: pooled-all | pairwise")
        ->capture_default_str()
        ->check(CLI::IsMember({"pooled-all", "pairwise"}));

    auto* meta = app.add_subcommand("meta", "Random-effects pooling of per-study g");
    add_common(meta, common, true);

    auto* mc = app.add_subcommand("mc", "Monte Carlo bias study");
    add_common(mc, common, false);
    McOptions mc_opt;
    mc->add_option("-c,--config", mc_opt.config, "Scenario JSON")->check(CLI::ExistingFile);
    mc->add_option("--reps", mc_opt.reps, "Monte Carlo replicates")->check(CLI::PositiveNumber);
    mc->add_option("--inner-iterations", mc_opt.inner_iterations, "Simulation iterations per study")
        ->check(CLI::PositiveNumber);
    mc->add_option("--seed", mc_opt.seed, "Scenario seed")->each([&](const std::string&) { mc_opt.seed_set = true; });
    mc->add_option("--truncation", mc_opt.truncation, "paper | per-group")->check(CLI::IsMember({"paper", "per-group"}));
    mc->add_option("--reported", mc_opt.reported, "params | sample")->check(CLI::IsMember({"params", "sample"}));
    mc->add_option("--crude-sd", mc_opt.crude_sd, "pairwise | pooled-all")
        ->check(CLI::IsMember({"pairwise", "pooled-all"}));
    mc->add_flag("--full-grid", mc_opt.full_grid, "Run every cell of the standard grid");
    mc->add_flag("--allow-custom", mc_opt.allow_custom, "Accept scenarios outside the standard grid");

    auto* orc = app.add_subcommand("or", "Combined additive odds ratio from two reported pairwise ORs");
    add_common(orc, common, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*effect) return cmd_effect(common, method, iterations, seed, crude_sd, out);
        if (*meta) return cmd_meta(common, out);
        if (*mc) return cmd_mc(common, mc_opt, out, err);
        if (*orc) return cmd_or(common, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace gmeta::cli
