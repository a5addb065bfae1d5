#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "powerstate/cluster.hpp"
#include "powerstate/features.hpp"
#include "powerstate/forest.hpp"
#include "powerstate/impute.hpp"

namespace powerstate {

/// A run is reproducible from this config plus the data directory alone.
struct PipelineConfig {
    std::string location;
    std::string data_dir = "data";
    std::string output_dir = "out";
    std::string timestamp_format;  // empty = day-first default
    std::int64_t grid_period_ms = 0;  // 0 = the parsed frame's nominal period

    ImputationPolicy imputation;
    PhaseMode phase_mode = PhaseMode::mean_of_phases;
    bool standardize = false;

    std::optional<int> explicit_k;
    int k_min = 1;
    int k_max = 20;

    std::int64_t train_start_ts = 0;
    std::int64_t train_end_ts = 0;  // inclusive
    std::vector<std::int64_t> eval_dates;  // day starts

    std::uint64_t seed = 42;
    KMeansOptions kmeans;
    ForestParams forest;

    std::string effective_timestamp_format() const;
};

PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);

/// Hash of the canonical (sorted-key) config serialization; stamped into
/// every output file header.
std::string config_hash(const PipelineConfig& config);

/// Parse "YYYY-MM-DD" (whole day) or "YYYY-MM-DD HH:MM:SS" config values.
/// Day-only values expand to end-of-day when `end_of_day` is set.
std::int64_t parse_config_time(const std::string& text, bool end_of_day);

}  // namespace powerstate
