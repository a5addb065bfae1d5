#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "powerstate/pipeline.hpp"
#include "powerstate/timeparse.hpp"
#include "powerstate/version.hpp"

namespace {

using powerstate::PipelineConfig;

struct CommonFlags {
    std::string config_file;
    std::string location;
    std::string data_dir;
    std::string out_dir;
    std::string timestamp_format;
    std::string phase_mode;
    bool standardize = false;
    bool standardize_set = false;
    int k = 0;
    bool k_set = false;
    int k_min = 0;
    bool k_min_set = false;
    int k_max = 0;
    bool k_max_set = false;
    std::string train_start;
    std::string train_end;
    std::vector<std::string> dates;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_file, "Config JSON file");
    cmd->add_option("--location", flags.location, "Location id (data_dir/<location>/)");
    cmd->add_option("--data-dir", flags.data_dir, "Input data directory");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--timestamp-format", flags.timestamp_format,
                    "Input timestamp format (%d-%m-%Y %H:%M:%S tokens, or epoch_ms)");
    cmd->add_option("--phase-mode", flags.phase_mode, "Feature phase mode: mean or concat")
        ->check(CLI::IsMember({"mean", "concat"}));
    cmd->add_flag_callback("--standardize", [&flags] {
        flags.standardize = true;
        flags.standardize_set = true;
    });
    cmd->add_option("--k", flags.k, "Explicit cluster count (skips the sweep)")
        ->check(CLI::PositiveNumber)
        ->each([&flags](const std::string&) { flags.k_set = true; });
    cmd->add_option("--k-min", flags.k_min, "Sweep lower bound")
        ->check(CLI::PositiveNumber)
        ->each([&flags](const std::string&) { flags.k_min_set = true; });
    cmd->add_option("--k-max", flags.k_max, "Sweep upper bound")
        ->check(CLI::PositiveNumber)
        ->each([&flags](const std::string&) { flags.k_max_set = true; });
    cmd->add_option("--train-start", flags.train_start, "Training window start (YYYY-MM-DD)");
    cmd->add_option("--train-end", flags.train_end, "Training window end, inclusive (YYYY-MM-DD)");
    cmd->add_option("--dates", flags.dates, "Evaluation/assignment dates (YYYY-MM-DD)")
        ->delimiter(',');
    cmd->add_option("--seed", flags.seed, "Master seed")->each([&flags](const std::string&) {
        flags.seed_set = true;
    });
}

PipelineConfig make_config(const CommonFlags& flags) {
    PipelineConfig config;
    if (!flags.config_file.empty()) config = powerstate::load_config(flags.config_file);
    if (!flags.location.empty()) config.location = flags.location;
    if (!flags.data_dir.empty()) config.data_dir = flags.data_dir;
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
    if (!flags.timestamp_format.empty()) config.timestamp_format = flags.timestamp_format;
    if (!flags.phase_mode.empty())
        config.phase_mode = flags.phase_mode == "concat" ? powerstate::PhaseMode::concat_phases
                                                         : powerstate::PhaseMode::mean_of_phases;
    if (flags.standardize_set) config.standardize = flags.standardize;
    if (flags.k_set) config.explicit_k = flags.k;
    if (flags.k_min_set) config.k_min = flags.k_min;
    if (flags.k_max_set) config.k_max = flags.k_max;
    if (!flags.train_start.empty())
        config.train_start_ts = powerstate::parse_config_time(flags.train_start, false);
    if (!flags.train_end.empty())
        config.train_end_ts = powerstate::parse_config_time(flags.train_end, true);
    if (!flags.dates.empty()) {
        config.eval_dates.clear();
        for (const auto& d : flags.dates)
            config.eval_dates.push_back(
                powerstate::day_start(powerstate::parse_config_time(d, false)));
    }
    if (flags.seed_set) config.seed = flags.seed;

    if (config.location.empty()) throw powerstate::ConfigError("--location (or config file) is required");
    if (config.timestamp_format.empty())
        std::cerr << "note: assuming day-first timestamps (" << powerstate::kDefaultTimestampFormat
                  << "); pass --timestamp-format to override\n";
    return config;
}

int exit_code_for(const powerstate::Error& e) {
    switch (e.category()) {
        case powerstate::Error::Category::config: return 2;
        case powerstate::Error::Category::data: return 3;
        case powerstate::Error::Category::numeric: return 4;
    }
    return 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(powerstate::kToolName) +
                 " - state identification for MiDAS power/harmonics data"};
    app.set_version_flag("--version", powerstate::kToolVersion);
    app.require_subcommand(1);

    CommonFlags flags;

    auto* cmd_ingest = app.add_subcommand("ingest", "Parse the data files and report gaps");
    add_common_flags(cmd_ingest, flags);
    auto* cmd_clean = app.add_subcommand("clean", "Impute the harmonics stream to a gap-free CSV");
    add_common_flags(cmd_clean, flags);
    auto* cmd_discover = app.add_subcommand("discover", "Sweep k and fit the state model");
    add_common_flags(cmd_discover, flags);
    auto* cmd_assign = app.add_subcommand("assign", "Assign states for the given dates");
    add_common_flags(cmd_assign, flags);
    auto* cmd_eval = app.add_subcommand("eval", "Train the classifier and write the leaderboard");
    add_common_flags(cmd_eval, flags);
    auto* cmd_report = app.add_subcommand("report", "Summarize the artifacts in the output directory");
    add_common_flags(cmd_report, flags);

    auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic MiDAS-schema data");
    std::string preset = "india-4";
    int days = 2;
    std::string synth_out = "data";
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    double gap_fraction = -1.0;
    int n_states = 0;
    double separation = 5.0;
    double noise = 0.35;
    std::int64_t harmonics_period = 0;
    std::int64_t ecd_period = 0;
    std::string synth_name;
    cmd_synth->add_option("--preset", preset,
                          "Profile preset: " + [] {
                              std::string names;
                              for (const auto& n : powerstate::preset_profile_names())
                                  names += (names.empty() ? "" : ", ") + n;
                              return names;
                          }() + ", or blob");
    cmd_synth->add_option("--days", days, "Number of days")->check(CLI::PositiveNumber);
    cmd_synth->add_option("--out", synth_out, "Data directory to write into");
    cmd_synth->add_option("--seed", synth_seed, "Profile seed")->each([&](const std::string&) {
        synth_seed_set = true;
    });
    cmd_synth->add_option("--gap-fraction", gap_fraction, "Override the preset's missing-data rate");
    cmd_synth->add_option("--states", n_states, "Blob preset: number of states");
    cmd_synth->add_option("--separation", separation, "Blob preset: centroid separation");
    cmd_synth->add_option("--noise", noise, "Blob preset: per-feature noise stddev");
    cmd_synth->add_option("--harmonics-period-ms", harmonics_period,
                          "Harmonics cadence override (default 500)");
    cmd_synth->add_option("--ecd-period-ms", ecd_period, "ECD cadence override (default 300)");
    cmd_synth->add_option("--name", synth_name, "Location name override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags/subcommands are config errors
    }

    try {
        if (cmd_synth->parsed()) {
            powerstate::SyntheticProfile profile;
            if (preset == "blob") {
                if (n_states < 1) throw powerstate::ConfigError("--states is required for the blob preset");
                profile = powerstate::make_blob_profile(n_states, separation, noise,
                                                        synth_seed_set ? synth_seed : 1);
            } else {
                profile = powerstate::preset_profile(preset);
                if (synth_seed_set) profile.seed = synth_seed;
            }
            if (gap_fraction >= 0.0) profile.gap_fraction = gap_fraction;
            if (harmonics_period > 0) profile.harmonics_period_ms = harmonics_period;
            if (ecd_period > 0) profile.ecd_period_ms = ecd_period;
            if (!synth_name.empty()) profile.name = synth_name;
            powerstate::run_synth(profile, days, synth_out);
            std::cout << "wrote " << days << " day(s) of " << profile.name << " under " << synth_out
                      << "\n";
            return 0;
        }

        PipelineConfig config = make_config(flags);
        if (cmd_ingest->parsed()) {
            auto summaries = powerstate::run_ingest(config);
            for (const auto& s : summaries) {
                std::printf("%s: %lld/%lld points present, missing %.4f%%, %zu gap span(s), %zu duplicate(s)\n",
                            s.file.c_str(), static_cast<long long>(s.report.present_count),
                            static_cast<long long>(s.report.expected_count),
                            100.0 * s.report.missing_fraction, s.report.gap_spans.size(),
                            s.report.dropped_duplicates);
            }
        } else if (cmd_clean->parsed()) {
            std::cout << "wrote " << powerstate::run_clean(config) << "\n";
        } else if (cmd_discover->parsed()) {
            auto result = powerstate::run_discover(config);
            if (result.sweep) {
                std::cout << "elbow band [" << result.sweep->elbow_band.k_lo << ", "
                          << result.sweep->elbow_band.k_hi << "], chosen k = " << result.sweep->chosen_k
                          << " (" << result.sweep->selection_rule << ")\n";
            }
            std::cout << "state model: k=" << result.model.kmeans.k
                      << " inertia=" << result.model.kmeans.inertia << " -> "
                      << powerstate::state_model_path(config) << "\n";
        } else if (cmd_assign->parsed()) {
            if (config.eval_dates.empty())
                throw powerstate::ConfigError("assign needs --dates (or eval_dates in the config)");
            for (std::int64_t date : config.eval_dates) {
                auto result = powerstate::run_assign(config, date);
                std::cout << powerstate::format_iso_date(date) << ": "
                          << result.assignment.distinct_states() << " distinct state(s) -> "
                          << result.results_file << "\n";
            }
        } else if (cmd_eval->parsed()) {
            auto rows = powerstate::run_eval(config);
            for (const auto& row : rows) {
                std::printf("%s: f1 macro %.4f micro %.4f weighted %.4f (%d predicted / %d true states)\n",
                            powerstate::format_iso_date(row.date_start_ts).c_str(),
                            row.report.f1_macro, row.report.f1_micro, row.report.f1_weighted,
                            row.report.distinct_pred_states, row.report.distinct_truth_states);
            }
            std::cout << "wrote " << powerstate::leaderboard_path(config) << "\n";
        } else if (cmd_report->parsed()) {
            std::cout << powerstate::run_report(config);
        }
    } catch (const powerstate::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
