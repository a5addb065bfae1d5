#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "powerstate/frame.hpp"

namespace powerstate {

struct FeatureScaling {
    std::vector<double> mean;
    std::vector<double> stddev;  // population convention (1/N); 0 marks a passthrough feature
};

/// Dense observation matrix for clustering: one row per minute, no MISSING.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> feature_names, std::vector<std::int64_t> timestamps,
                  std::vector<double> values);

    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
    const std::vector<double>& values() const { return values_; }

    std::size_t row_count() const { return timestamps_.size(); }
    std::size_t feature_count() const { return feature_names_.size(); }

    double value(std::size_t row, std::size_t feature) const {
        return values_[row * feature_names_.size() + feature];
    }
    const double* row(std::size_t r) const { return values_.data() + r * feature_names_.size(); }

    const std::optional<FeatureScaling>& scaling() const { return scaling_; }
    void set_scaling(FeatureScaling s) { scaling_ = std::move(s); }

    /// Rows restricted to timestamps in [start_ts, end_ts].
    FeatureMatrix slice_time(std::int64_t start_ts, std::int64_t end_ts) const;

private:
    std::vector<std::string> feature_names_;
    std::vector<std::int64_t> timestamps_;
    std::vector<double> values_;
    std::optional<FeatureScaling> scaling_;
};

enum class PhaseMode { mean_of_phases, concat_phases };

/// Odd current-harmonic orders 3,5,...,31.
const std::vector<int>& odd_harmonic_orders();

/// Feature channel names for a phase mode: I_HR3..I_HR31 (15) for
/// mean-of-phases, AI_HR3..CI_HR31 (45) for concat-phases.
std::vector<std::string> odd_harmonic_feature_names(PhaseMode mode);

/// Project a harmonics frame onto the odd current-harmonic features.
/// mean-of-phases averages AI/BI/CI per order; a MISSING phase makes the
/// averaged cell MISSING.
TimestampedFrame select_odd_current_harmonics(const TimestampedFrame& frame, PhaseMode mode);

/// Mean-resample to a fixed cadence; windows are [t, t+period) aligned to
/// wall-clock multiples of the period. Windows with no rows are skipped and,
/// when requested, reported through empty_windows.
FeatureMatrix resample_mean(const TimestampedFrame& frame, std::int64_t period_ms = 60000,
                            std::vector<std::int64_t>* empty_windows = nullptr);

/// Scale each feature to mean 0, stddev 1 (population convention).
/// Zero-variance features pass through unscaled with stddev recorded as 0.
FeatureMatrix standardize(const FeatureMatrix& m);

/// Apply previously fitted scaling (e.g. to assignment-time data).
FeatureMatrix apply_standardization(const FeatureMatrix& m, const FeatureScaling& scaling);

void write_feature_matrix_csv(const FeatureMatrix& m, const std::string& path,
                              const std::vector<std::string>& comment_header = {});

}  // namespace powerstate
