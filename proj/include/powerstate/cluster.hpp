#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "powerstate/features.hpp"

namespace powerstate {

struct StateAssignment {
    std::vector<std::int64_t> timestamps;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    int distinct_states() const;
};

struct KMeansModel {
    int k = 0;
    std::size_t n_features = 0;
    std::vector<double> centroids;  // k x n_features, row-major
    double inertia = 0.0;
    int iterations_run = 0;
    std::uint64_t seed = 0;
    int restarts = 0;

    const double* centroid(int c) const { return centroids.data() + static_cast<std::size_t>(c) * n_features; }
};

struct KMeansOptions {
    int restarts = 10;
    int max_iter = 300;
    double tol = 1e-6;
};

/// Lloyd's algorithm with distance-weighted (k-means++ style) seeding, best
/// of `restarts` runs by inertia. Deterministic for fixed (data, k, seed,
/// restarts), and invariant under row permutation: the seeding draws are
/// keyed on point values, not row indices.
KMeansModel kmeans_fit(const FeatureMatrix& m, int k, std::uint64_t seed,
                       const KMeansOptions& options = {});

/// Per-row nearest-centroid labels (squared Euclidean; ties to the lower
/// centroid index). No relabeling.
std::vector<int> kmeans_labels(const KMeansModel& model, const FeatureMatrix& m);

/// Mean silhouette coefficient s = (b - a) / max(a, b); singleton-cluster
/// points contribute 0. Requires at least two distinct labels.
double silhouette_score(const FeatureMatrix& m, const std::vector<int>& labels);

struct ElbowBand {
    int k_lo = 0;
    int k_hi = 0;
    bool has_distinct_elbow = false;
    bool degenerate = false;  // flat inertia curve
};

/// Max-distance-to-chord knee detection on axis-normalized (k, inertia)
/// points; the band is the contiguous run around the argmax whose distance
/// stays within 90% of the maximum.
ElbowBand detect_elbow(const std::vector<int>& k_values, const std::vector<double>& inertias);

struct KSweepReport {
    std::vector<int> k_values;
    std::vector<double> inertias;
    std::vector<double> silhouettes;  // NaN where undefined (k = 1)
    ElbowBand elbow_band;
    int chosen_k = 0;
    std::string selection_rule;
    bool degenerate_data = false;
    std::uint64_t seed = 0;
};

/// Fit every k in [k_lo, k_hi], then choose k as the silhouette argmax
/// restricted to the elbow band.
KSweepReport sweep_k(const FeatureMatrix& m, int k_lo, int k_hi, std::uint64_t seed,
                     const KMeansOptions& options = {});

struct StateModel {
    KMeansModel kmeans;
    std::vector<std::string> feature_names;
    std::optional<FeatureScaling> scaling;
    std::int64_t training_start_ts = 0;
    std::int64_t training_end_ts = 0;
    /// relabel_map[original_cluster] = public state label; label 0 is the
    /// most populous training cluster.
    std::vector<int> relabel_map;
    /// Training population per public state label.
    std::vector<std::size_t> populations;

    /// Centroid of a public state label, in original (unscaled) units.
    std::vector<double> state_centroid_unscaled(int state_label) const;
};

/// Fit the final model at the given k and compute the population-ordered
/// relabeling. The per-k seed derivation matches sweep_k, so an explicit k
/// reproduces the sweep's model for that k exactly.
StateModel fit_state_model(const FeatureMatrix& m, int k, std::uint64_t seed,
                           const KMeansOptions& options = {});

/// Label rows by nearest centroid and apply the model's relabel map. The
/// model's stored scaling is applied unless the matrix is already scaled.
StateAssignment assign_nearest(const StateModel& model, const FeatureMatrix& m);

/// meta key/value pairs (tool version, config hash, seed) are embedded in
/// the document and ignored on load.
void save_state_model(const StateModel& model, const std::string& path,
                      const std::map<std::string, std::string>& meta = {});
StateModel load_state_model(const std::string& path);

}  // namespace powerstate
