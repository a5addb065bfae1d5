#include "powerstate/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "powerstate/csv.hpp"
#include "powerstate/rng.hpp"
#include "powerstate/timeparse.hpp"

namespace powerstate {

namespace {

char hex_digit(std::uint64_t v) { return "0123456789abcdef"[v & 0xf]; }

std::string hex64(std::uint64_t v) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = hex_digit(v);
        v >>= 4;
    }
    return s;
}

std::string fallback_name(ImputeFallback f) {
    switch (f) {
        case ImputeFallback::carry_nearest: return "carry-nearest";
        case ImputeFallback::leave_missing: return "leave-missing";
        default: return "linear-interpolate";
    }
}

ImputeFallback fallback_from_name(const std::string& name) {
    if (name == "linear-interpolate") return ImputeFallback::linear_interpolate;
    if (name == "carry-nearest") return ImputeFallback::carry_nearest;
    if (name == "leave-missing") return ImputeFallback::leave_missing;
    throw ConfigError("unknown imputation fallback: " + name);
}

std::string time_to_config(std::int64_t ms) {
    return format_timestamp(ms, kIsoTimestampFormat);
}

}  // namespace

std::string PipelineConfig::effective_timestamp_format() const {
    return timestamp_format.empty() ? kDefaultTimestampFormat : timestamp_format;
}

std::int64_t parse_config_time(const std::string& text, bool end_of_day) {
    if (auto full = parse_timestamp(text, kIsoTimestampFormat)) return *full;
    if (auto date_only = parse_timestamp(text, "%Y-%m-%d"))
        return end_of_day ? *date_only + kMillisPerDay - 1 : *date_only;
    throw ConfigError("cannot parse time \"" + text + "\" (expected YYYY-MM-DD or YYYY-MM-DD HH:MM:SS)");
}

std::string config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["location"] = c.location;
    j["data_dir"] = c.data_dir;
    j["output_dir"] = c.output_dir;
    j["timestamp_format"] = c.timestamp_format;
    j["grid_period_ms"] = c.grid_period_ms;
    j["imputation"] = {{"max_lookback_days", c.imputation.max_lookback_days},
                       {"max_lookahead_days", c.imputation.max_lookahead_days},
                       {"fallback", fallback_name(c.imputation.fallback)},
                       {"donors_per_side", c.imputation.donors_per_side},
                       {"match_weekday_class", c.imputation.match_weekday_class}};
    j["phase_mode"] = c.phase_mode == PhaseMode::mean_of_phases ? "mean" : "concat";
    j["standardize"] = c.standardize;
    if (c.explicit_k)
        j["k"] = *c.explicit_k;
    else
        j["k"] = nullptr;
    j["k_min"] = c.k_min;
    j["k_max"] = c.k_max;
    j["train_start"] = time_to_config(c.train_start_ts);
    j["train_end"] = time_to_config(c.train_end_ts);
    nlohmann::ordered_json dates = nlohmann::ordered_json::array();
    for (std::int64_t d : c.eval_dates) dates.push_back(format_iso_date(d));
    j["eval_dates"] = dates;
    j["seed"] = c.seed;
    j["kmeans"] = {{"restarts", c.kmeans.restarts},
                   {"max_iter", c.kmeans.max_iter},
                   {"tol", c.kmeans.tol}};
    j["forest"] = {{"n_trees", c.forest.n_trees},
                   {"max_depth", c.forest.max_depth},
                   {"min_samples_leaf", c.forest.min_samples_leaf},
                   {"features_per_split", c.forest.features_per_split}};
    return j.dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }

    PipelineConfig c;
    try {
        c.location = j.value("location", "");
        c.data_dir = j.value("data_dir", c.data_dir);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.timestamp_format = j.value("timestamp_format", "");
        c.grid_period_ms = j.value("grid_period_ms", static_cast<std::int64_t>(0));
        if (j.contains("imputation")) {
            const auto& imp = j.at("imputation");
            c.imputation.max_lookback_days = imp.value("max_lookback_days", 7);
            c.imputation.max_lookahead_days = imp.value("max_lookahead_days", 7);
            c.imputation.fallback = fallback_from_name(imp.value("fallback", "linear-interpolate"));
            c.imputation.donors_per_side = imp.value("donors_per_side", 1);
            c.imputation.match_weekday_class = imp.value("match_weekday_class", false);
        }
        std::string phase = j.value("phase_mode", "mean");
        if (phase == "mean")
            c.phase_mode = PhaseMode::mean_of_phases;
        else if (phase == "concat")
            c.phase_mode = PhaseMode::concat_phases;
        else
            throw ConfigError("unknown phase_mode: " + phase);
        c.standardize = j.value("standardize", false);
        if (j.contains("k") && !j.at("k").is_null()) c.explicit_k = j.at("k").get<int>();
        c.k_min = j.value("k_min", 1);
        c.k_max = j.value("k_max", 20);
        if (j.contains("train_start"))
            c.train_start_ts = parse_config_time(j.at("train_start").get<std::string>(), false);
        if (j.contains("train_end"))
            c.train_end_ts = parse_config_time(j.at("train_end").get<std::string>(), true);
        if (j.contains("eval_dates"))
            for (const auto& d : j.at("eval_dates"))
                c.eval_dates.push_back(day_start(parse_config_time(d.get<std::string>(), false)));
        c.seed = j.value("seed", static_cast<std::uint64_t>(42));
        if (j.contains("kmeans")) {
            const auto& k = j.at("kmeans");
            c.kmeans.restarts = k.value("restarts", 10);
            c.kmeans.max_iter = k.value("max_iter", 300);
            c.kmeans.tol = k.value("tol", 1e-6);
        }
        if (j.contains("forest")) {
            const auto& f = j.at("forest");
            c.forest.n_trees = f.value("n_trees", 100);
            c.forest.max_depth = f.value("max_depth", 0);
            c.forest.min_samples_leaf = f.value("min_samples_leaf", 1);
            c.forest.features_per_split = f.value("features_per_split", 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(stream)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_config(const PipelineConfig& config, const std::string& path) {
    write_file_atomic(path, config_to_json(config));
}

std::string config_hash(const PipelineConfig& config) {
    // Canonical form: sorted keys, compact dump. Filesystem locations are
    // excluded so the same analysis hashes identically wherever it runs.
    nlohmann::json canonical = nlohmann::json::parse(config_to_json(config));
    canonical.erase("data_dir");
    canonical.erase("output_dir");
    return hex64(fnv1a64(canonical.dump()));
}

}  // namespace powerstate
