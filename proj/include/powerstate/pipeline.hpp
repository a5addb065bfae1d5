#pragma once

#include <optional>
#include <string>
#include <vector>

#include "powerstate/config.hpp"
#include "powerstate/forest.hpp"
#include "powerstate/ingest.hpp"
#include "powerstate/pca.hpp"
#include "powerstate/synth.hpp"

namespace powerstate {

/// File layout under data_dir/<location>/ and output_dir.
std::string harmonics_path(const PipelineConfig& config);
std::string ecd_path(const PipelineConfig& config);
std::string location_out_dir(const PipelineConfig& config);
std::string state_model_path(const PipelineConfig& config);
std::string pca_model_path(const PipelineConfig& config);
std::string forest_model_path(const PipelineConfig& config);
std::string results_dir(const PipelineConfig& config);
std::string leaderboard_path(const PipelineConfig& config);

/// Comment lines stamped at the top of every emitted CSV.
std::vector<std::string> output_comment_header(const PipelineConfig& config);

TimestampedFrame load_harmonics(const PipelineConfig& config);
std::optional<TimestampedFrame> load_ecd(const PipelineConfig& config);

/// Odd-harmonic selection, imputation over [start, end] and 1-minute
/// resampling, in one step. Returns an unstandardized matrix.
FeatureMatrix build_features(const PipelineConfig& config, const TimestampedFrame& harmonics,
                             std::int64_t start_ts, std::int64_t end_ts);

struct IngestSummary {
    std::string file;
    GapReport report;
};

/// Parse both data files and report their gaps; gap reports are written as
/// JSON next to the other outputs.
std::vector<IngestSummary> run_ingest(const PipelineConfig& config);

/// Impute the harmonics stream over its full range and write the cleaned
/// frame back out as CSV.
std::string run_clean(const PipelineConfig& config);

struct DiscoverResult {
    std::optional<KSweepReport> sweep;  // absent when an explicit k was given
    StateModel model;
    PcaModel pca;
};

/// Sweep k (unless explicit), fit the state model on the training window and
/// write sweep.csv, state_model.json, pca_model.json and the effective config.
DiscoverResult run_discover(const PipelineConfig& config);

struct AssignResult {
    StateAssignment assignment;
    std::string results_file;
};

/// Assign states for one calendar day and write the per-day results CSV,
/// the PCA projection CSV and the active-power plot CSV.
AssignResult run_assign(const PipelineConfig& config, std::int64_t date_start_ts);

struct EvalRow {
    std::int64_t date_start_ts;
    EvaluationReport report;
};

/// Train the classifier on the training window, evaluate every eval date and
/// write the leaderboard CSV.
std::vector<EvalRow> run_eval(const PipelineConfig& config);

/// Generate a synthetic location under data_dir/<profile.name>/.
void run_synth(const SyntheticProfile& profile, int n_days, const std::string& data_dir);

/// Human-readable summary of the artifacts in the output directory.
std::string run_report(const PipelineConfig& config);

}  // namespace powerstate
