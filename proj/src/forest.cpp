#include "powerstate/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "powerstate/csv.hpp"
#include "powerstate/rng.hpp"
#include "powerstate/timeparse.hpp"

namespace powerstate {

namespace {

struct TreeBuilder {
    const FeatureMatrix& m;
    const std::vector<int>& labels;
    int n_classes;
    ForestParams params;
    Rng rng;
    std::vector<TreeNode> nodes;
    std::vector<std::size_t> sample;  // bootstrap row indices, partitioned in place

    // Scratch for split search.
    std::vector<std::size_t> order;
    std::vector<std::size_t> left_counts;
    std::vector<std::size_t> total_counts;
    std::vector<int> feature_pool;

    TreeBuilder(const FeatureMatrix& matrix, const std::vector<int>& y, int classes,
                const ForestParams& p, std::uint64_t seed)
        : m(matrix), labels(y), n_classes(classes), params(p), rng(seed) {
        left_counts.resize(static_cast<std::size_t>(classes));
        total_counts.resize(static_cast<std::size_t>(classes));
        feature_pool.resize(m.feature_count());
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
    }

    int majority_label(std::size_t begin, std::size_t end) {
        std::fill(total_counts.begin(), total_counts.end(), 0u);
        for (std::size_t i = begin; i < end; ++i)
            ++total_counts[static_cast<std::size_t>(labels[sample[i]])];
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (total_counts[static_cast<std::size_t>(c)] > total_counts[static_cast<std::size_t>(best)])
                best = c;
        return best;
    }

    static double gini_from_counts(const std::vector<std::size_t>& counts, std::size_t total) {
        double g = 1.0;
        for (std::size_t c : counts) {
            double p = static_cast<double>(c) / static_cast<double>(total);
            g -= p * p;
        }
        return g;
    }

    struct Split {
        bool found = false;
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    Split find_split(std::size_t begin, std::size_t end) {
        Split best;
        const std::size_t count = end - begin;
        std::fill(total_counts.begin(), total_counts.end(), 0u);
        for (std::size_t i = begin; i < end; ++i)
            ++total_counts[static_cast<std::size_t>(labels[sample[i]])];
        double parent_gini = gini_from_counts(total_counts, count);
        if (parent_gini == 0.0) return best;  // pure node

        int n_features = static_cast<int>(m.feature_count());
        int per_split = params.features_per_split > 0
                            ? std::min(params.features_per_split, n_features)
                            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
        // Partial Fisher-Yates draw of candidate features.
        for (int i = 0; i < per_split; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            rng.uniform_below(static_cast<std::uint64_t>(n_features - i));
            std::swap(feature_pool[static_cast<std::size_t>(i)], feature_pool[j]);
        }

        const std::size_t min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
        for (int fi = 0; fi < per_split; ++fi) {
            int feature = feature_pool[static_cast<std::size_t>(fi)];
            order.assign(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                         sample.begin() + static_cast<std::ptrdiff_t>(end));
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                double va = m.value(a, static_cast<std::size_t>(feature));
                double vb = m.value(b, static_cast<std::size_t>(feature));
                if (va != vb) return va < vb;
                return labels[a] < labels[b];
            });
            std::fill(left_counts.begin(), left_counts.end(), 0u);
            for (std::size_t pos = 1; pos < count; ++pos) {
                ++left_counts[static_cast<std::size_t>(labels[order[pos - 1]])];
                double prev = m.value(order[pos - 1], static_cast<std::size_t>(feature));
                double curr = m.value(order[pos], static_cast<std::size_t>(feature));
                if (prev == curr) continue;
                if (pos < min_leaf || count - pos < min_leaf) continue;
                double left_gini = gini_from_counts(left_counts, pos);
                std::size_t right_total = count - pos;
                double right_gini = 1.0;
                {
                    double g = 0.0;
                    for (int c = 0; c < n_classes; ++c) {
                        std::size_t rc = total_counts[static_cast<std::size_t>(c)] -
                                         left_counts[static_cast<std::size_t>(c)];
                        double p = static_cast<double>(rc) / static_cast<double>(right_total);
                        g += p * p;
                    }
                    right_gini = 1.0 - g;
                }
                double gain = parent_gini -
                              (static_cast<double>(pos) * left_gini +
                               static_cast<double>(right_total) * right_gini) /
                                  static_cast<double>(count);
                double threshold = prev + (curr - prev) / 2.0;
                if (threshold <= prev) threshold = curr;  // adjacent representable values
                bool better = gain > best.gain ||
                              (gain == best.gain && best.found &&
                               (feature < best.feature ||
                                (feature == best.feature && threshold < best.threshold)));
                if (gain > 0.0 && (!best.found || better)) {
                    best.found = true;
                    best.feature = feature;
                    best.threshold = threshold;
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    struct WorkItem {
        std::size_t begin;
        std::size_t end;
        int depth;
        int parent;    // -1 for the root
        bool is_left;
    };

    void build() {
        std::vector<WorkItem> stack;
        stack.push_back({0, sample.size(), 0, -1, false});
        while (!stack.empty()) {
            WorkItem item = stack.back();
            stack.pop_back();

            int node_index = static_cast<int>(nodes.size());
            nodes.emplace_back();
            if (item.parent >= 0) {
                if (item.is_left)
                    nodes[static_cast<std::size_t>(item.parent)].left = node_index;
                else
                    nodes[static_cast<std::size_t>(item.parent)].right = node_index;
            }

            bool depth_capped = params.max_depth > 0 && item.depth >= params.max_depth;
            Split split;
            if (!depth_capped &&
                item.end - item.begin >= 2 * static_cast<std::size_t>(params.min_samples_leaf))
                split = find_split(item.begin, item.end);

            if (!split.found) {
                nodes[static_cast<std::size_t>(node_index)].label = majority_label(item.begin, item.end);
                continue;
            }

            auto mid_it = std::partition(
                sample.begin() + static_cast<std::ptrdiff_t>(item.begin),
                sample.begin() + static_cast<std::ptrdiff_t>(item.end), [&](std::size_t row) {
                    return m.value(row, static_cast<std::size_t>(split.feature)) < split.threshold;
                });
            std::size_t mid = static_cast<std::size_t>(mid_it - sample.begin());

            nodes[static_cast<std::size_t>(node_index)].feature = split.feature;
            nodes[static_cast<std::size_t>(node_index)].threshold = split.threshold;
            // Right pushed first so the left subtree is built next (depth-first
            // in left-to-right order keeps RNG consumption deterministic).
            stack.push_back({mid, item.end, item.depth + 1, node_index, false});
            stack.push_back({item.begin, mid, item.depth + 1, node_index, true});
        }
    }
};

int tree_predict(const std::vector<TreeNode>& tree, const double* row) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = tree[static_cast<std::size_t>(node)];
        node = row[n.feature] < n.threshold ? n.left : n.right;
    }
    return tree[static_cast<std::size_t>(node)].label;
}

}  // namespace

ForestModel train_forest(const FeatureMatrix& m, const StateAssignment& labels,
                         const ForestParams& params, std::uint64_t seed) {
    const std::size_t rows = m.row_count();
    if (labels.labels.size() != rows) throw LengthMismatchError(labels.labels.size(), rows);
    if (rows == 0) throw DataError("cannot train a forest on an empty matrix");
    if (params.n_trees < 1) throw ConfigError("n_trees must be at least 1");
    if (params.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");

    int n_classes = 0;
    for (int label : labels.labels) {
        if (label < 0) throw DataError("labels must be non-negative");
        n_classes = std::max(n_classes, label + 1);
    }
    std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
    for (int label : labels.labels) seen[static_cast<std::size_t>(label)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) throw SingleClassError();

    ForestModel model;
    model.feature_names = m.feature_names();
    model.n_classes = n_classes;
    model.params = params;
    model.seed = seed;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    for (int t = 0; t < params.n_trees; ++t) {
        TreeBuilder builder(m, labels.labels, n_classes, params,
                            derive_seed(seed, 0x7472, static_cast<std::uint64_t>(t)));
        builder.sample.resize(rows);
        for (std::size_t i = 0; i < rows; ++i)
            builder.sample[i] = builder.rng.uniform_below(rows);
        builder.build();
        model.trees[static_cast<std::size_t>(t)] = std::move(builder.nodes);
    }
    return model;
}

StateAssignment forest_predict(const ForestModel& model, const FeatureMatrix& m) {
    if (m.feature_names() != model.feature_names)
        throw FeatureMismatchError("matrix features do not match the forest model");
    StateAssignment out;
    out.timestamps = m.timestamps();
    out.labels.resize(m.row_count());
    std::vector<int> votes(static_cast<std::size_t>(model.n_classes));
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree_predict(tree, m.row(r)))];
        int best = 0;
        for (int c = 1; c < model.n_classes; ++c)
            if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
        out.labels[r] = best;
    }
    return out;
}

EvaluationReport f1_score(const StateAssignment& pred, const StateAssignment& truth) {
    if (pred.labels.size() != truth.labels.size())
        throw LengthMismatchError(pred.labels.size(), truth.labels.size());

    EvaluationReport report;
    if (!truth.timestamps.empty()) report.day_start_ts = day_start(truth.timestamps.front());

    int n = 0;
    for (int label : truth.labels) {
        if (label < 0) throw DataError("labels must be non-negative");
        n = std::max(n, label + 1);
    }
    for (int label : pred.labels) {
        if (label < 0) throw DataError("labels must be non-negative");
        n = std::max(n, label + 1);
    }
    report.n_classes = n;
    if (n == 0) return report;  // both assignments empty

    report.confusion.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
    for (std::size_t i = 0; i < truth.labels.size(); ++i)
        ++report.confusion[static_cast<std::size_t>(truth.labels[i]) * static_cast<std::size_t>(n) +
                           static_cast<std::size_t>(pred.labels[i])];

    double macro_sum = 0.0;
    std::size_t macro_count = 0;
    double weighted_sum = 0.0;
    std::size_t weight_total = 0;
    std::size_t tp_total = 0, fp_total = 0, fn_total = 0;
    for (int c = 0; c < n; ++c) {
        std::size_t tp = report.confusion[static_cast<std::size_t>(c) * static_cast<std::size_t>(n) +
                                          static_cast<std::size_t>(c)];
        std::size_t truth_count = 0, pred_count = 0;
        for (int j = 0; j < n; ++j) {
            truth_count += report.confusion[static_cast<std::size_t>(c) * static_cast<std::size_t>(n) +
                                            static_cast<std::size_t>(j)];
            pred_count += report.confusion[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) +
                                           static_cast<std::size_t>(c)];
        }
        if (truth_count == 0 && pred_count == 0) continue;  // label absent on both sides
        std::size_t fp = pred_count - tp;
        std::size_t fn = truth_count - tp;
        double denom = static_cast<double>(2 * tp + fp + fn);
        double f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        report.per_class_f1[c] = f1;
        if (truth_count > 0) report.support[c] = truth_count;
        macro_sum += f1;
        ++macro_count;
        weighted_sum += f1 * static_cast<double>(truth_count);
        weight_total += truth_count;
        tp_total += tp;
        fp_total += fp;
        fn_total += fn;
    }
    report.f1_macro = macro_count > 0 ? macro_sum / static_cast<double>(macro_count) : 0.0;
    report.f1_weighted = weight_total > 0 ? weighted_sum / static_cast<double>(weight_total) : 0.0;
    double micro_denom = static_cast<double>(2 * tp_total + fp_total + fn_total);
    report.f1_micro = micro_denom > 0.0 ? 2.0 * static_cast<double>(tp_total) / micro_denom : 0.0;

    report.distinct_pred_states = StateAssignment{{}, pred.labels}.distinct_states();
    report.distinct_truth_states = StateAssignment{{}, truth.labels}.distinct_states();
    report.single_class_day = report.distinct_truth_states <= 1;
    return report;
}

EvaluationReport evaluate_day(const ForestModel& forest, const StateModel& state_model,
                              const FeatureMatrix& day_features) {
    StateAssignment truth = assign_nearest(state_model, day_features);
    StateAssignment pred = forest_predict(forest, day_features);
    return f1_score(pred, truth);
}

void save_forest_model(const ForestModel& model, const std::string& path,
                       const std::map<std::string, std::string>& meta) {
    nlohmann::json j;
    j["schema"] = "powerstate-forest-model-v1";
    if (!meta.empty()) j["meta"] = meta;
    j["feature_names"] = model.feature_names;
    j["n_classes"] = model.n_classes;
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"max_depth", model.params.max_depth},
                   {"min_samples_leaf", model.params.min_samples_leaf},
                   {"features_per_split", model.params.features_per_split}};
    j["seed"] = model.seed;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    write_file_atomic(path, j.dump() + "\n");
}

ForestModel load_forest_model(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) throw DataError("cannot open forest model: " + path);
    nlohmann::json j;
    try {
        stream >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid forest model JSON in " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "powerstate-forest-model-v1")
        throw DataError("unsupported forest model schema in " + path);
    ForestModel model;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.n_classes = j.at("n_classes").get<int>();
    const auto& p = j.at("params");
    model.params.n_trees = p.at("n_trees").get<int>();
    model.params.max_depth = p.at("max_depth").get<int>();
    model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    model.params.features_per_split = p.at("features_per_split").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& tree_json : j.at("trees")) {
        std::vector<TreeNode> tree;
        tree.reserve(tree_json.size());
        for (const auto& n : tree_json) {
            TreeNode node;
            node.feature = n.at(0).get<int>();
            node.threshold = n.at(1).get<double>();
            node.left = n.at(2).get<int>();
            node.right = n.at(3).get<int>();
            node.label = n.at(4).get<int>();
            tree.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace powerstate
