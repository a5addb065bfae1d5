#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "powerstate/cluster.hpp"
#include "powerstate/frame.hpp"

namespace powerstate {

/// A piecewise-constant daily schedule segment: the system is in `state`
/// from start_of_day_ms until the next segment begins.
struct ScheduleSegment {
    std::int64_t start_of_day_ms = 0;
    int state = 0;
};

/// Everything needed to fabricate MiDAS-schema data with known ground truth.
/// Harmonic centroids are invented shapes, not physical machine signatures.
struct SyntheticProfile {
    std::string name;
    int n_states = 1;
    /// n_states x 45: odd current-harmonic means in concat-phase order
    /// (AI_HR3..AI_HR31, BI_..., CI_...).
    std::vector<double> state_centroids;
    /// Per-feature noise stddev (45 entries, or 1 entry broadcast).
    std::vector<double> state_noise;
    std::vector<ScheduleSegment> daily_schedule;
    double min_amp = 1.0;
    double max_amp = 10.0;
    double gap_fraction = 0.0;
    std::int64_t start_ts = 0;  // midnight of day 1
    /// Cadence overrides for desk-scale tests; defaults match the device.
    std::int64_t harmonics_period_ms = 500;
    std::int64_t ecd_period_ms = 300;
    std::uint64_t seed = 1;
};

struct SyntheticData {
    TimestampedFrame ecd;
    TimestampedFrame harmonics;
    StateAssignment truth;  // one label per minute
};

/// Deterministic per profile.seed. Gap injection (profile.gap_fraction) is
/// applied to both frames; ground-truth labels stay complete.
SyntheticData generate_days(const SyntheticProfile& profile, int n_days);

struct SpanLengthDistribution {
    /// Geometric span lengths with this mean, in rows.
    double mean_rows = 240;
};

/// Delete whole contiguous spans of rows until the requested fraction is
/// removed (exact to the nearest row).
TimestampedFrame inject_gaps(const TimestampedFrame& frame, double gap_fraction,
                             const SpanLengthDistribution& spans, std::uint64_t seed);

/// Build a profile with g states on evenly spaced centroids: pairwise
/// centroid distance is `separation` in every active feature, noise stddev
/// is `noise`. Schedule cycles the states in equal slots.
SyntheticProfile make_blob_profile(int n_states, double separation, double noise,
                                   std::uint64_t seed);

/// Presets named after the published locations (india-1..india-6, usa-1,
/// usa-2), with the listed amp ranges and missing-data rates.
SyntheticProfile preset_profile(const std::string& name);
std::vector<std::string> preset_profile_names();

}  // namespace powerstate
