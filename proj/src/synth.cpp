#include "powerstate/synth.hpp"

#include <algorithm>
#include <cmath>

#include "powerstate/ingest.hpp"
#include "powerstate/rng.hpp"
#include "powerstate/timeparse.hpp"

namespace powerstate {

namespace {

constexpr std::size_t kOddFeatures = 45;  // 15 odd orders x 3 phases

void validate_profile(const SyntheticProfile& p) {
    if (p.n_states < 1) throw InvalidProfileError("profile needs at least one state");
    if (p.state_centroids.size() != static_cast<std::size_t>(p.n_states) * kOddFeatures)
        throw InvalidProfileError("state_centroids must be n_states x 45");
    if (p.state_noise.size() != 1 && p.state_noise.size() != kOddFeatures)
        throw InvalidProfileError("state_noise must have 1 or 45 entries");
    if (p.daily_schedule.empty() || p.daily_schedule.front().start_of_day_ms != 0)
        throw InvalidProfileError("daily schedule must start at 00:00");
    std::int64_t prev = -1;
    for (const auto& seg : p.daily_schedule) {
        if (seg.start_of_day_ms <= prev) throw InvalidProfileError("schedule segments must be increasing");
        if (seg.start_of_day_ms >= kMillisPerDay) throw InvalidProfileError("schedule segment beyond 24:00");
        if (seg.start_of_day_ms % kMillisPerMinute != 0)
            throw InvalidProfileError("schedule boundaries must fall on whole minutes");
        if (seg.state < 0 || seg.state >= p.n_states) throw InvalidProfileError("schedule state out of range");
        prev = seg.start_of_day_ms;
    }
    if (p.min_amp <= 0.0 || p.max_amp <= p.min_amp) throw InvalidProfileError("bad amp range");
    if (p.gap_fraction < 0.0 || p.gap_fraction > 1.0) throw InvalidProfileError("gap_fraction outside [0,1]");
    if (p.harmonics_period_ms <= 0 || p.ecd_period_ms <= 0) throw InvalidProfileError("bad cadence");
}

int state_at(const SyntheticProfile& p, std::int64_t time_of_day) {
    int state = p.daily_schedule.front().state;
    for (const auto& seg : p.daily_schedule) {
        if (seg.start_of_day_ms > time_of_day) break;
        state = seg.state;
    }
    return state;
}

double noise_for(const SyntheticProfile& p, std::size_t feature) {
    return p.state_noise.size() == 1 ? p.state_noise[0] : p.state_noise[feature];
}

/// Smooth, clearly non-physical background level for channels the state
/// centroids do not drive.
double background_harmonic(int order, int phase) {
    return 0.6 + 0.3 * std::sin(0.7 * order + 0.5 * phase) + 0.1 * std::cos(1.3 * order);
}

TimestampedFrame generate_harmonics(const SyntheticProfile& p, int n_days) {
    const auto& channels = harmonics_channels();
    const std::size_t width = channels.size();

    // Channel index helpers for the fixed canonical order.
    auto hr_index = [&](char quantity, int phase, int order) {
        std::size_t block = quantity == 'I' ? 0 : 96;
        return block + static_cast<std::size_t>(phase) * 31 + static_cast<std::size_t>(order - 2);
    };
    auto thd_index = [&](char quantity, int phase) {
        std::size_t block = quantity == 'I' ? 0 : 96;
        return block + 93 + static_cast<std::size_t>(phase);
    };

    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    const std::int64_t rows_per_day = kMillisPerDay / p.harmonics_period_ms;
    timestamps.reserve(static_cast<std::size_t>(rows_per_day) * static_cast<std::size_t>(n_days));
    values.reserve(timestamps.capacity() * width);

    std::vector<double> row(width);
    for (int day = 0; day < n_days; ++day) {
        Rng rng(derive_seed(p.seed, 0x6861, static_cast<std::uint64_t>(day)));
        for (std::int64_t i = 0; i < rows_per_day; ++i) {
            std::int64_t ts = p.start_ts + day * kMillisPerDay + i * p.harmonics_period_ms;
            int state = state_at(p, time_of_day_ms(ts));
            const double* centroid = p.state_centroids.data() +
                                     static_cast<std::size_t>(state) * kOddFeatures;
            // Background for every channel first.
            for (int phase = 0; phase < 3; ++phase) {
                for (int order = 2; order <= 32; ++order) {
                    row[hr_index('I', phase, order)] =
                        std::abs(background_harmonic(order, phase) + 0.05 * rng.normal());
                    row[hr_index('V', phase, order)] =
                        std::abs(0.3 * background_harmonic(order, phase) + 0.02 * rng.normal());
                }
            }
            // State-driven odd current harmonics (concat-phase order).
            std::size_t f = 0;
            for (int phase = 0; phase < 3; ++phase)
                for (int order = 3; order <= 31; order += 2, ++f)
                    row[hr_index('I', phase, order)] =
                        std::abs(centroid[f] + noise_for(p, f) * rng.normal());
            // THD as the aggregate of the per-order magnitudes.
            for (char q : {'I', 'V'}) {
                for (int phase = 0; phase < 3; ++phase) {
                    double sum_sq = 0.0;
                    for (int order = 2; order <= 32; ++order) {
                        double v = row[hr_index(q, phase, order)];
                        sum_sq += v * v;
                    }
                    row[thd_index(q, phase)] = std::sqrt(sum_sq);
                }
            }
            timestamps.push_back(ts);
            values.insert(values.end(), row.begin(), row.end());
        }
    }
    return TimestampedFrame::from_columns(channels, p.harmonics_period_ms, std::move(timestamps),
                                          std::move(values));
}

TimestampedFrame generate_ecd(const SyntheticProfile& p, int n_days) {
    const auto& channels = ecd_channels();
    const std::size_t width = channels.size();
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    const std::int64_t rows_per_day = kMillisPerDay / p.ecd_period_ms;
    timestamps.reserve(static_cast<std::size_t>(rows_per_day) * static_cast<std::size_t>(n_days));
    values.reserve(timestamps.capacity() * width);

    std::vector<double> row(width);
    for (int day = 0; day < n_days; ++day) {
        Rng rng(derive_seed(p.seed, 0x6563, static_cast<std::uint64_t>(day)));
        for (std::int64_t i = 0; i < rows_per_day; ++i) {
            std::int64_t ts = p.start_ts + day * kMillisPerDay + i * p.ecd_period_ms;
            int state = state_at(p, time_of_day_ms(ts));
            double level = p.min_amp + (state + 1) * (p.max_amp - p.min_amp) /
                                            static_cast<double>(p.n_states + 1);
            double ia = level * (1.0 + 0.02 * rng.normal());
            double ib = level * (1.0 + 0.02 * rng.normal());
            double ic = level * (1.0 + 0.02 * rng.normal());
            double in_current = std::abs(0.02 * level * rng.normal());
            double va = 230.0 * (1.0 + 0.002 * rng.normal());
            double vb = 230.0 * (1.0 + 0.002 * rng.normal());
            double vc = 230.0 * (1.0 + 0.002 * rng.normal());
            auto pf = [&] {
                double v = 0.82 + 0.12 * (state + 1) / static_cast<double>(p.n_states) +
                           0.01 * rng.normal();
                return std::clamp(v, 0.05, 1.0);
            };
            double pfa = pf(), pfb = pf(), pfc = pf();
            double pft = (pfa + pfb + pfc) / 3.0;
            double active_a = va * ia * pfa, active_b = vb * ib * pfb, active_c = vc * ic * pfc;
            double reactive_a = va * ia * std::sqrt(std::max(0.0, 1.0 - pfa * pfa));
            double reactive_b = vb * ib * std::sqrt(std::max(0.0, 1.0 - pfb * pfb));
            double reactive_c = vc * ic * std::sqrt(std::max(0.0, 1.0 - pfc * pfc));
            double apparent_a = va * ia, apparent_b = vb * ib, apparent_c = vc * ic;

            std::size_t c = 0;
            row[c++] = ia;
            row[c++] = ib;
            row[c++] = ic;
            row[c++] = in_current;
            row[c++] = va;
            row[c++] = vb;
            row[c++] = vc;
            row[c++] = pfa;
            row[c++] = pfb;
            row[c++] = pfc;
            row[c++] = pft;
            row[c++] = 0.0 + 0.5 * rng.normal();
            row[c++] = -120.0 + 0.5 * rng.normal();
            row[c++] = 120.0 + 0.5 * rng.normal();
            row[c++] = active_a;
            row[c++] = active_b;
            row[c++] = active_c;
            row[c++] = active_a + active_b + active_c;
            row[c++] = reactive_a;
            row[c++] = reactive_b;
            row[c++] = reactive_c;
            row[c++] = reactive_a + reactive_b + reactive_c;
            row[c++] = apparent_a;
            row[c++] = apparent_b;
            row[c++] = apparent_c;
            row[c++] = apparent_a + apparent_b + apparent_c;
            row[c++] = 50.0 + 0.01 * rng.normal();

            timestamps.push_back(ts);
            values.insert(values.end(), row.begin(), row.end());
        }
    }
    return TimestampedFrame::from_columns(channels, p.ecd_period_ms, std::move(timestamps),
                                          std::move(values));
}

}  // namespace

SyntheticData generate_days(const SyntheticProfile& profile, int n_days) {
    if (n_days < 1) throw InvalidProfileError("n_days must be at least 1");
    validate_profile(profile);

    SyntheticData data;
    data.harmonics = generate_harmonics(profile, n_days);
    data.ecd = generate_ecd(profile, n_days);

    for (int minute = 0; minute < n_days * 1440; ++minute) {
        std::int64_t ts = profile.start_ts + static_cast<std::int64_t>(minute) * kMillisPerMinute;
        data.truth.timestamps.push_back(ts);
        data.truth.labels.push_back(state_at(profile, time_of_day_ms(ts)));
    }

    if (profile.gap_fraction > 0.0) {
        SpanLengthDistribution h_spans{std::max(1.0, 2.0 * kMillisPerMinute /
                                                         static_cast<double>(profile.harmonics_period_ms))};
        SpanLengthDistribution e_spans{std::max(1.0, 2.0 * kMillisPerMinute /
                                                         static_cast<double>(profile.ecd_period_ms))};
        data.harmonics = inject_gaps(data.harmonics, profile.gap_fraction, h_spans,
                                     derive_seed(profile.seed, 0x6761, 0));
        data.ecd = inject_gaps(data.ecd, profile.gap_fraction, e_spans,
                               derive_seed(profile.seed, 0x6761, 1));
    }
    return data;
}

TimestampedFrame inject_gaps(const TimestampedFrame& frame, double gap_fraction,
                             const SpanLengthDistribution& spans, std::uint64_t seed) {
    if (gap_fraction < 0.0 || gap_fraction > 1.0)
        throw InvalidRangeError("gap_fraction outside [0,1]");
    const std::size_t rows = frame.row_count();
    std::size_t target = static_cast<std::size_t>(std::llround(gap_fraction * static_cast<double>(rows)));
    if (target == 0) return frame;

    double mean = std::max(1.0, spans.mean_rows);
    double p = 1.0 / mean;
    Rng rng(seed);
    std::vector<bool> deleted(rows, false);
    std::size_t remaining = target;
    while (remaining > 0) {
        std::size_t start = rng.uniform_below(rows);
        // Geometric span length with mean 1/p.
        std::size_t len = 1 + static_cast<std::size_t>(std::floor(
                                  std::log(rng.uniform01_open()) / std::log(1.0 - p)));
        for (std::size_t i = start; i < rows && len > 0 && remaining > 0; ++i, --len) {
            if (!deleted[i]) {
                deleted[i] = true;
                --remaining;
            }
        }
    }

    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    const std::size_t width = frame.channel_count();
    timestamps.reserve(rows - target);
    values.reserve((rows - target) * width);
    for (std::size_t r = 0; r < rows; ++r) {
        if (deleted[r]) continue;
        timestamps.push_back(frame.timestamps()[r]);
        const double* row = frame.row(r);
        values.insert(values.end(), row, row + width);
    }
    return TimestampedFrame::from_columns(frame.channel_names(), frame.nominal_period_ms(),
                                          std::move(timestamps), std::move(values));
}

SyntheticProfile make_blob_profile(int n_states, double separation, double noise,
                                   std::uint64_t seed) {
    if (n_states < 1 || n_states > 15)
        throw InvalidProfileError("blob profile supports 1..15 states");
    SyntheticProfile p;
    p.name = "blob-" + std::to_string(n_states);
    p.n_states = n_states;
    p.state_centroids.assign(static_cast<std::size_t>(n_states) * kOddFeatures, 2.0);
    // State s bumps its own harmonic order on all three phases. Pairwise
    // centroid distance is `separation` in mean-of-phases space (and
    // separation * sqrt(3) in concat space).
    for (int s = 0; s < n_states; ++s)
        for (int phase = 0; phase < 3; ++phase)
            p.state_centroids[static_cast<std::size_t>(s) * kOddFeatures +
                              static_cast<std::size_t>(phase * 15 + s)] +=
                separation / std::sqrt(2.0);
    p.state_noise = {noise};
    // Three cycles through the states per day, on whole-minute boundaries.
    int slots = 3 * n_states;
    int slot_minutes = std::max(1, 1440 / slots);
    for (int slot = 0; slot * slot_minutes < 1440 && slot < slots; ++slot)
        p.daily_schedule.push_back(
            {static_cast<std::int64_t>(slot) * slot_minutes * kMillisPerMinute, slot % n_states});
    p.min_amp = 10.0;
    p.max_amp = 60.0;
    p.seed = seed;
    p.start_ts = days_from_civil(2022, 7, 1) * kMillisPerDay;
    return p;
}

namespace {

struct PresetSpec {
    const char* name;
    double min_amp;
    double max_amp;
    double gap_fraction;
    int n_states;
};

// Amp ranges and missing-data rates follow the published location table;
// state counts and harmonic shapes are invented for testing.
constexpr PresetSpec kPresets[] = {
    {"india-1", 2.0, 25.0, 0.0534, 3},
    {"india-2", 35.0, 110.0, 0.0151, 4},
    {"india-3", 2.0, 40.0, 0.0058, 3},
    {"india-4", 15.0, 60.0, 0.1029, 6},
    {"india-5", 3.0, 25.0, 0.0013, 3},
    {"india-6", 0.5, 10.0, 0.0041, 2},
    {"usa-1", 5.0, 50.0, 0.0167, 3},
    {"usa-2", 20.0, 80.0, 0.0163, 2},
};

}  // namespace

SyntheticProfile preset_profile(const std::string& name) {
    for (const auto& spec : kPresets) {
        if (name != spec.name) continue;
        SyntheticProfile p = make_blob_profile(spec.n_states, 5.0, 0.35, fnv1a64(name));
        p.name = spec.name;
        p.min_amp = spec.min_amp;
        p.max_amp = spec.max_amp;
        p.gap_fraction = spec.gap_fraction;
        // Workday flavor: state 0 overnight, the rest cycling 08:00-18:00.
        p.daily_schedule.clear();
        p.daily_schedule.push_back({0, 0});
        if (spec.n_states > 1) {
            int active = spec.n_states - 1;
            for (int slot = 0; slot < 5; ++slot)
                p.daily_schedule.push_back({(8 + 2 * slot) * kMillisPerHour, 1 + slot % active});
            p.daily_schedule.push_back({18 * kMillisPerHour, 0});
        }
        return p;
    }
    throw ConfigError("unknown synthetic preset: " + name);
}

std::vector<std::string> preset_profile_names() {
    std::vector<std::string> names;
    for (const auto& spec : kPresets) names.emplace_back(spec.name);
    return names;
}

}  // namespace powerstate
