#include "powerstate/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "powerstate/csv.hpp"
#include "powerstate/rng.hpp"
#include "powerstate/timeparse.hpp"
#include "powerstate/version.hpp"

namespace fs = std::filesystem;

namespace powerstate {

namespace {

std::string join(const std::string& a, const std::string& b) {
    return (fs::path(a) / b).string();
}

std::map<std::string, std::string> artifact_meta(const PipelineConfig& c) {
    return {{"tool", std::string(kToolName) + " " + kToolVersion},
            {"config", config_hash(c)},
            {"seed", std::to_string(c.seed)}};
}

nlohmann::ordered_json gap_report_json(const GapReport& r) {
    nlohmann::ordered_json spans = nlohmann::ordered_json::array();
    for (const auto& [lo, hi] : r.gap_spans)
        spans.push_back({{"start", format_timestamp(lo, kIsoTimestampFormat)},
                         {"end", format_timestamp(hi, kIsoTimestampFormat)}});
    return {{"start", format_timestamp(r.start_ts, kIsoTimestampFormat)},
            {"end", format_timestamp(r.end_ts, kIsoTimestampFormat)},
            {"nominal_period_ms", r.nominal_period_ms},
            {"expected_count", r.expected_count},
            {"present_count", r.present_count},
            {"missing_fraction", r.missing_fraction},
            {"dropped_duplicates", r.dropped_duplicates},
            {"gap_spans", spans}};
}

}  // namespace

std::string harmonics_path(const PipelineConfig& c) {
    return join(join(c.data_dir, c.location), "harmonics.csv");
}

std::string ecd_path(const PipelineConfig& c) {
    return join(join(c.data_dir, c.location), "ecd.csv");
}

std::string location_out_dir(const PipelineConfig& c) {
    return join(c.output_dir, c.location);
}

std::string state_model_path(const PipelineConfig& c) {
    return join(location_out_dir(c), "state_model.json");
}

std::string pca_model_path(const PipelineConfig& c) {
    return join(location_out_dir(c), "pca_model.json");
}

std::string forest_model_path(const PipelineConfig& c) {
    return join(location_out_dir(c), "forest_model.json");
}

std::string results_dir(const PipelineConfig& c) {
    return join(join(c.output_dir, "results"), c.location);
}

std::string leaderboard_path(const PipelineConfig& c) {
    return join(join(c.output_dir, "leaderboard"), c.location + ".csv");
}

std::vector<std::string> output_comment_header(const PipelineConfig& c) {
    return {std::string(kToolName) + " " + kToolVersion, "config " + config_hash(c),
            "seed " + std::to_string(c.seed)};
}

TimestampedFrame load_harmonics(const PipelineConfig& c) {
    return parse_harmonics_csv(harmonics_path(c), c.effective_timestamp_format());
}

std::optional<TimestampedFrame> load_ecd(const PipelineConfig& c) {
    if (!fs::exists(ecd_path(c))) return std::nullopt;
    return parse_ecd_csv(ecd_path(c), c.effective_timestamp_format());
}

FeatureMatrix build_features(const PipelineConfig& c, const TimestampedFrame& harmonics,
                             std::int64_t start_ts, std::int64_t end_ts) {
    TimestampedFrame odd = select_odd_current_harmonics(harmonics, PhaseMode::concat_phases);
    std::int64_t period = c.grid_period_ms > 0 ? c.grid_period_ms : harmonics.nominal_period_ms();
    if (period <= 0) throw DataError("cannot determine the harmonics grid period");

    TimestampedFrame windowed = odd.slice_time(
        start_ts - static_cast<std::int64_t>(c.imputation.max_lookback_days) * kMillisPerDay,
        end_ts + static_cast<std::int64_t>(c.imputation.max_lookahead_days) * kMillisPerDay);
    ImputationResult imputed =
        impute_same_timestamp(windowed, {start_ts, end_ts, period}, c.imputation);

    TimestampedFrame feature_frame =
        c.phase_mode == PhaseMode::mean_of_phases
            ? select_odd_current_harmonics(imputed.frame, PhaseMode::mean_of_phases)
            : std::move(imputed.frame);
    return resample_mean(feature_frame, kMillisPerMinute);
}

std::vector<IngestSummary> run_ingest(const PipelineConfig& c) {
    std::vector<IngestSummary> summaries;
    nlohmann::ordered_json out;
    out["tool"] = std::string(kToolName) + " " + kToolVersion;
    out["config"] = config_hash(c);
    out["seed"] = c.seed;

    TimestampedFrame harmonics = load_harmonics(c);
    if (!harmonics.empty()) {
        GapReport r = detect_gaps(harmonics, harmonics.nominal_period_ms(),
                                  harmonics.timestamps().front(), harmonics.timestamps().back());
        out["harmonics"] = gap_report_json(r);
        summaries.push_back({harmonics_path(c), std::move(r)});
    }
    if (auto ecd = load_ecd(c); ecd && !ecd->empty()) {
        GapReport r = detect_gaps(*ecd, ecd->nominal_period_ms(), ecd->timestamps().front(),
                                  ecd->timestamps().back());
        out["ecd"] = gap_report_json(r);
        summaries.push_back({ecd_path(c), std::move(r)});
    }
    write_file_atomic(join(location_out_dir(c), "gap_report.json"), out.dump(2) + "\n");
    return summaries;
}

std::string run_clean(const PipelineConfig& c) {
    TimestampedFrame harmonics = load_harmonics(c);
    if (harmonics.empty()) throw DataError("harmonics file has no rows: " + harmonics_path(c));
    std::int64_t period = c.grid_period_ms > 0 ? c.grid_period_ms : harmonics.nominal_period_ms();
    ImputationResult imputed = impute_same_timestamp(
        harmonics, {harmonics.timestamps().front(), harmonics.timestamps().back(), period},
        c.imputation);
    std::string path = join(location_out_dir(c), "harmonics_clean.csv");
    write_frame_csv(imputed.frame, path, c.effective_timestamp_format(), output_comment_header(c));
    return path;
}

namespace {

void write_sweep_csv(const PipelineConfig& c, const KSweepReport& sweep, const std::string& path) {
    std::string out;
    for (const auto& line : output_comment_header(c)) out += "# " + line + "\n";
    out += "# elbow_band " + std::to_string(sweep.elbow_band.k_lo) + ".." +
           std::to_string(sweep.elbow_band.k_hi) + " chosen_k " + std::to_string(sweep.chosen_k) +
           " rule " + sweep.selection_rule + "\n";
    out += "k,inertia,silhouette\n";
    for (std::size_t i = 0; i < sweep.k_values.size(); ++i) {
        out += std::to_string(sweep.k_values[i]);
        out += ',';
        out += format_double(sweep.inertias[i]);
        out += ',';
        if (!std::isnan(sweep.silhouettes[i])) out += format_double(sweep.silhouettes[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace

namespace {

void require_train_window(const PipelineConfig& c) {
    if (c.train_end_ts <= c.train_start_ts)
        throw ConfigError("training window not set (need train_start < train_end)");
}

}  // namespace

DiscoverResult run_discover(const PipelineConfig& c) {
    require_train_window(c);
    TimestampedFrame harmonics = load_harmonics(c);
    FeatureMatrix matrix = build_features(c, harmonics, c.train_start_ts, c.train_end_ts);
    if (c.standardize) matrix = standardize(matrix);

    DiscoverResult result;
    int k;
    if (c.explicit_k) {
        k = *c.explicit_k;
    } else {
        result.sweep = sweep_k(matrix, c.k_min, c.k_max, c.seed, c.kmeans);
        k = result.sweep->chosen_k;
    }
    result.model = fit_state_model(matrix, k, c.seed, c.kmeans);
    result.pca = pca_fit(matrix, 2);

    if (result.sweep) write_sweep_csv(c, *result.sweep, join(location_out_dir(c), "sweep.csv"));
    save_state_model(result.model, state_model_path(c), artifact_meta(c));
    save_pca_model(result.pca, pca_model_path(c), artifact_meta(c));
    write_feature_matrix_csv(matrix, join(location_out_dir(c), "features.csv"),
                             output_comment_header(c));
    save_config(c, join(location_out_dir(c), "effective_config.json"));
    return result;
}

AssignResult run_assign(const PipelineConfig& c, std::int64_t date_start_ts) {
    StateModel model = load_state_model(state_model_path(c));
    PcaModel pca = load_pca_model(pca_model_path(c));
    TimestampedFrame harmonics = load_harmonics(c);

    std::int64_t day_end = date_start_ts + kMillisPerDay - 1;
    FeatureMatrix matrix = build_features(c, harmonics, date_start_ts, day_end);
    StateAssignment assignment = assign_nearest(model, matrix);

    std::string date_name = format_iso_date(date_start_ts);
    std::string results_file = join(results_dir(c), date_name + ".csv");

    // Per-day results: centroid block as a commented header, then the series.
    std::string out;
    for (const auto& line : output_comment_header(c)) out += "# " + line + "\n";
    out += "# k " + std::to_string(model.kmeans.k) + " training_window " +
           format_timestamp(model.training_start_ts, kIsoTimestampFormat) + ".." +
           format_timestamp(model.training_end_ts, kIsoTimestampFormat) + "\n";
    out += "# state,population";
    for (const auto& name : model.feature_names) out += "," + name;
    out += '\n';
    for (int s = 0; s < model.kmeans.k; ++s) {
        out += "# " + std::to_string(s) + "," + std::to_string(model.populations[static_cast<std::size_t>(s)]);
        for (double v : model.state_centroid_unscaled(s)) out += "," + format_double(v);
        out += '\n';
    }
    out += "timestamp,state_label\n";
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out += format_timestamp(assignment.timestamps[i], kIsoTimestampFormat);
        out += ',';
        out += std::to_string(assignment.labels[i]);
        out += '\n';
    }
    write_file_atomic(results_file, out);

    // PCA projection in the space the model was fitted in.
    const FeatureMatrix* for_pca = &matrix;
    FeatureMatrix scaled;
    if (model.scaling && !matrix.scaling()) {
        scaled = apply_standardization(matrix, *model.scaling);
        for_pca = &scaled;
    }
    std::vector<double> projection = pca_project(pca, *for_pca);
    std::string pca_out;
    for (const auto& line : output_comment_header(c)) pca_out += "# " + line + "\n";
    pca_out += "timestamp,component_1,component_2,state_label\n";
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        pca_out += format_timestamp(assignment.timestamps[i], kIsoTimestampFormat);
        pca_out += ',' + format_double(projection[i * 2]) + ',' + format_double(projection[i * 2 + 1]);
        pca_out += ',' + std::to_string(assignment.labels[i]) + '\n';
    }
    write_file_atomic(join(results_dir(c), date_name + "_pca.csv"), pca_out);

    // Active-power view of the states (plot data: ActivePT vs time).
    std::string power_out;
    for (const auto& line : output_comment_header(c)) power_out += "# " + line + "\n";
    power_out += "timestamp,active_pt,state_label\n";
    std::optional<TimestampedFrame> ecd = load_ecd(c);
    int active_pt = ecd ? ecd->channel_index("ActivePT") : -1;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        std::int64_t minute = assignment.timestamps[i];
        power_out += format_timestamp(minute, kIsoTimestampFormat);
        power_out += ',';
        if (ecd && active_pt >= 0) {
            // Per-minute mean of whatever ECD rows landed in the minute.
            const auto& ts = ecd->timestamps();
            auto lo = std::lower_bound(ts.begin(), ts.end(), minute);
            double sum = 0.0;
            std::size_t count = 0;
            for (auto it = lo; it != ts.end() && *it < minute + kMillisPerMinute; ++it) {
                double v = ecd->value(static_cast<std::size_t>(it - ts.begin()),
                                      static_cast<std::size_t>(active_pt));
                if (!is_missing(v)) {
                    sum += v;
                    ++count;
                }
            }
            if (count > 0) power_out += format_double(sum / static_cast<double>(count));
        }
        power_out += ',' + std::to_string(assignment.labels[i]) + '\n';
    }
    write_file_atomic(join(results_dir(c), date_name + "_active_power.csv"), power_out);

    return {std::move(assignment), results_file};
}

std::vector<EvalRow> run_eval(const PipelineConfig& c) {
    require_train_window(c);
    StateModel model = load_state_model(state_model_path(c));
    TimestampedFrame harmonics = load_harmonics(c);

    FeatureMatrix training = build_features(c, harmonics, c.train_start_ts, c.train_end_ts);
    StateAssignment training_labels = assign_nearest(model, training);
    ForestModel forest =
        train_forest(training, training_labels, c.forest, derive_seed(c.seed, 0x6576, 0));
    save_forest_model(forest, forest_model_path(c), artifact_meta(c));

    std::string model_hash;
    {
        std::ifstream stream(forest_model_path(c));
        std::string text((std::istreambuf_iterator<char>(stream)), std::istreambuf_iterator<char>());
        std::uint64_t h = fnv1a64(text);
        char buf[17];
        for (int i = 15; i >= 0; --i) {
            buf[i] = "0123456789abcdef"[h & 0xf];
            h >>= 4;
        }
        buf[16] = '\0';
        model_hash = buf;
    }

    std::vector<EvalRow> rows;
    std::string out;
    for (const auto& line : output_comment_header(c)) out += "# " + line + "\n";
    out += "date,f1_macro,f1_micro,f1_weighted,n_states_pred,n_states_truth,model_hash,seed\n";
    for (std::int64_t date : c.eval_dates) {
        FeatureMatrix day = build_features(c, harmonics, date, date + kMillisPerDay - 1);
        EvaluationReport report = evaluate_day(forest, model, day);
        report.day_start_ts = date;
        out += format_iso_date(date);
        out += ',' + format_double(report.f1_macro);
        out += ',' + format_double(report.f1_micro);
        out += ',' + format_double(report.f1_weighted);
        out += ',' + std::to_string(report.distinct_pred_states);
        out += ',' + std::to_string(report.distinct_truth_states);
        out += ',' + model_hash;
        out += ',' + std::to_string(c.seed);
        out += '\n';
        rows.push_back({date, std::move(report)});
    }
    write_file_atomic(leaderboard_path(c), out);
    return rows;
}

void run_synth(const SyntheticProfile& profile, int n_days, const std::string& data_dir) {
    SyntheticData data = generate_days(profile, n_days);
    std::string dir = join(data_dir, profile.name);
    write_frame_csv(data.ecd, join(dir, "ecd.csv"), kDefaultTimestampFormat);
    write_frame_csv(data.harmonics, join(dir, "harmonics.csv"), kDefaultTimestampFormat);

    std::string truth;
    truth += "timestamp,state\n";
    for (std::size_t i = 0; i < data.truth.size(); ++i) {
        truth += format_timestamp(data.truth.timestamps[i], kDefaultTimestampFormat);
        truth += ',' + std::to_string(data.truth.labels[i]) + '\n';
    }
    write_file_atomic(join(dir, "truth.csv"), truth);
}

std::string run_report(const PipelineConfig& c) {
    std::ostringstream out;
    out << kToolName << ' ' << kToolVersion << " report for location " << c.location << "\n";

    std::string sweep_file = join(location_out_dir(c), "sweep.csv");
    if (fs::exists(sweep_file)) {
        std::ifstream stream(sweep_file);
        std::string line;
        while (std::getline(stream, line)) {
            if (line.rfind("# elbow_band", 0) == 0) {
                out << "  sweep: " << line.substr(2) << "\n";
                break;
            }
        }
    }
    if (fs::exists(state_model_path(c))) {
        StateModel model = load_state_model(state_model_path(c));
        out << "  state model: k=" << model.kmeans.k << " inertia=" << model.kmeans.inertia
            << " window=" << format_timestamp(model.training_start_ts, kIsoTimestampFormat) << ".."
            << format_timestamp(model.training_end_ts, kIsoTimestampFormat) << "\n";
        out << "  state populations:";
        for (std::size_t s = 0; s < model.populations.size(); ++s)
            out << ' ' << s << ':' << model.populations[s];
        out << "\n";
    } else {
        out << "  state model: not fitted yet (run discover)\n";
    }
    if (fs::exists(leaderboard_path(c))) {
        std::ifstream stream(leaderboard_path(c));
        std::string line;
        out << "  leaderboard:\n";
        while (std::getline(stream, line)) {
            if (line.empty() || line[0] == '#') continue;
            out << "    " << line << "\n";
        }
    }
    return out.str();
}

}  // namespace powerstate
