#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "powerstate/cluster.hpp"
#include "powerstate/features.hpp"

namespace powerstate {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_leaf = 1;
    int features_per_split = 0;  // 0 = ceil(sqrt(n))
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   // child for value < threshold
    int right = -1;  // child for value >= threshold
    int label = 0;   // leaf majority label
};

struct ForestModel {
    std::vector<std::vector<TreeNode>> trees;
    std::vector<std::string> feature_names;
    int n_classes = 0;
    ForestParams params;
    std::uint64_t seed = 0;

    bool empty() const { return trees.empty(); }
};

/// Bootstrap-aggregated Gini decision trees over cluster-derived state
/// labels. Deterministic for a fixed seed; per-tree seeds are derived from it.
ForestModel train_forest(const FeatureMatrix& m, const StateAssignment& labels,
                         const ForestParams& params, std::uint64_t seed);

/// Majority vote over trees; ties go to the lower label.
StateAssignment forest_predict(const ForestModel& model, const FeatureMatrix& m);

enum class F1Averaging { macro, micro, weighted };

struct EvaluationReport {
    std::int64_t day_start_ts = 0;
    double f1_macro = 0.0;
    double f1_micro = 0.0;
    double f1_weighted = 0.0;
    std::map<int, double> per_class_f1;
    std::vector<std::size_t> confusion;  // n_classes x n_classes, row = truth
    std::map<int, std::size_t> support;  // truth counts per label
    int n_classes = 0;
    int distinct_pred_states = 0;
    int distinct_truth_states = 0;
    bool single_class_day = false;

    double f1(F1Averaging mode) const {
        switch (mode) {
            case F1Averaging::micro: return f1_micro;
            case F1Averaging::weighted: return f1_weighted;
            default: return f1_macro;
        }
    }
};

/// Confusion-matrix F1 between prediction and truth. Per-class F1 is
/// 2PR/(P+R) with the 0 convention when P+R = 0.
EvaluationReport f1_score(const StateAssignment& pred, const StateAssignment& truth);

/// One calendar day: truth from the clustering model's nearest-centroid
/// assignment, prediction from the forest.
EvaluationReport evaluate_day(const ForestModel& forest, const StateModel& state_model,
                              const FeatureMatrix& day_features);

void save_forest_model(const ForestModel& model, const std::string& path,
                       const std::map<std::string, std::string>& meta = {});
ForestModel load_forest_model(const std::string& path);

}  // namespace powerstate
