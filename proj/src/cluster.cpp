#include "powerstate/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "powerstate/csv.hpp"
#include "powerstate/rng.hpp"

namespace powerstate {

namespace {

double sq_dist(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Uniform in (0, 1] keyed on the point's coordinates, the seed and the draw
/// index. Identical points get identical draws, so the selection depends on
/// the multiset of points rather than their order.
double point_hash01(const double* p, std::size_t n, std::uint64_t seed, std::uint64_t draw) {
    std::uint64_t h = fnv1a64(&seed, sizeof seed);
    h = fnv1a64(&draw, sizeof draw, h);
    for (std::size_t i = 0; i < n; ++i) h = hash_double(p[i], h);
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

bool lex_greater(const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return false;
}

/// k-means++ seeding as an exponential race: each step picks the point
/// maximizing D^2(x) / Exp(x), which samples proportionally to D^2.
std::vector<double> seed_centroids(const FeatureMatrix& m, int k, std::uint64_t run_seed) {
    const std::size_t rows = m.row_count();
    const std::size_t n = m.feature_count();
    std::vector<double> centroids;
    centroids.reserve(static_cast<std::size_t>(k) * n);

    std::vector<double> min_sq(rows, std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
        std::size_t chosen = 0;
        double best_score = -1.0;
        bool any_positive = false;
        for (std::size_t i = 0; i < rows; ++i) {
            double weight = c == 0 ? 1.0 : min_sq[i];
            if (weight <= 0.0) continue;
            double u = point_hash01(m.row(i), n, run_seed, static_cast<std::uint64_t>(c));
            double score = weight / -std::log(u);
            if (score > best_score ||
                (score == best_score && lex_greater(m.row(i), m.row(chosen), n))) {
                best_score = score;
                chosen = i;
                any_positive = true;
            }
        }
        if (!any_positive) {
            // All remaining distances are zero (k exceeds distinct points);
            // fall back to the highest hash draw.
            double best_u = -1.0;
            for (std::size_t i = 0; i < rows; ++i) {
                double u = point_hash01(m.row(i), n, run_seed, static_cast<std::uint64_t>(c));
                if (u > best_u) {
                    best_u = u;
                    chosen = i;
                }
            }
        }
        const double* p = m.row(chosen);
        centroids.insert(centroids.end(), p, p + n);
        for (std::size_t i = 0; i < rows; ++i)
            min_sq[i] = std::min(min_sq[i], sq_dist(m.row(i), p, n));
    }
    return centroids;
}

void assign_labels(const FeatureMatrix& m, const std::vector<double>& centroids, int k,
                   std::vector<int>& labels) {
    const std::size_t n = m.feature_count();
    for (std::size_t i = 0; i < m.row_count(); ++i) {
        int best = 0;
        double best_d = sq_dist(m.row(i), centroids.data(), n);
        for (int c = 1; c < k; ++c) {
            double d = sq_dist(m.row(i), centroids.data() + static_cast<std::size_t>(c) * n, n);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
    }
}

struct LloydResult {
    std::vector<double> centroids;
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
};

LloydResult lloyd(const FeatureMatrix& m, int k, std::uint64_t run_seed,
                  const KMeansOptions& options) {
    const std::size_t rows = m.row_count();
    const std::size_t n = m.feature_count();

    LloydResult result;
    result.centroids = seed_centroids(m, k, run_seed);
    result.labels.assign(rows, 0);
    assign_labels(m, result.centroids, k, result.labels);

    std::vector<double> new_centroids(static_cast<std::size_t>(k) * n);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k));
    std::vector<int> new_labels(rows);
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        result.iterations = iter;
        std::fill(new_centroids.begin(), new_centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t i = 0; i < rows; ++i) {
            double* c = new_centroids.data() + static_cast<std::size_t>(result.labels[i]) * n;
            const double* p = m.row(i);
            for (std::size_t d = 0; d < n; ++d) c[d] += p[d];
            ++counts[static_cast<std::size_t>(result.labels[i])];
        }
        std::vector<int> empty_clusters;
        for (int c = 0; c < k; ++c) {
            double* cc = new_centroids.data() + static_cast<std::size_t>(c) * n;
            if (counts[static_cast<std::size_t>(c)] > 0) {
                for (std::size_t d = 0; d < n; ++d)
                    cc[d] /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                empty_clusters.push_back(c);
            }
        }
        if (!empty_clusters.empty()) {
            // Reseed each empty cluster to the point farthest from its
            // assigned centroid, after all means are finalized. Ties go to
            // the lexicographically greater point so the repair does not
            // depend on row order; points are not reused across repairs.
            std::vector<bool> taken(rows, false);
            for (int c : empty_clusters) {
                std::ptrdiff_t far = -1;
                double far_d = -1.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    if (taken[i]) continue;
                    double d = sq_dist(m.row(i),
                                       new_centroids.data() +
                                           static_cast<std::size_t>(result.labels[i]) * n,
                                       n);
                    if (d > far_d ||
                        (d == far_d && far >= 0 &&
                         lex_greater(m.row(i), m.row(static_cast<std::size_t>(far)), n))) {
                        far_d = d;
                        far = static_cast<std::ptrdiff_t>(i);
                    }
                }
                if (far < 0) break;  // fewer distinct points than clusters
                taken[static_cast<std::size_t>(far)] = true;
                std::copy_n(m.row(static_cast<std::size_t>(far)), n,
                            new_centroids.begin() + static_cast<std::size_t>(c) * n);
            }
        }

        double max_shift_sq = 0.0;
        for (std::size_t i = 0; i < new_centroids.size(); i += n)
            max_shift_sq = std::max(max_shift_sq,
                                    sq_dist(result.centroids.data() + i, new_centroids.data() + i, n));
        result.centroids = new_centroids;
        assign_labels(m, result.centroids, k, new_labels);
        bool stable = new_labels == result.labels;
        result.labels = new_labels;
        if (stable || max_shift_sq < options.tol * options.tol) break;
    }

    result.inertia = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        result.inertia += sq_dist(m.row(i),
                                  result.centroids.data() +
                                      static_cast<std::size_t>(result.labels[i]) * n,
                                  n);
    return result;
}

}  // namespace

int StateAssignment::distinct_states() const {
    std::set<int> s(labels.begin(), labels.end());
    return static_cast<int>(s.size());
}

KMeansModel kmeans_fit(const FeatureMatrix& m, int k, std::uint64_t seed,
                       const KMeansOptions& options) {
    if (k < 1) throw ConfigError("k must be at least 1");
    if (m.row_count() < static_cast<std::size_t>(k))
        throw TooFewSamplesError(m.row_count(), static_cast<std::size_t>(k));
    if (options.restarts < 1) throw ConfigError("restarts must be at least 1");

    LloydResult best;
    bool have_best = false;
    for (int r = 0; r < options.restarts; ++r) {
        LloydResult run = lloyd(m, k, derive_seed(seed, 0x6b6d, static_cast<std::uint64_t>(r)),
                                options);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    KMeansModel model;
    model.k = k;
    model.n_features = m.feature_count();
    model.centroids = std::move(best.centroids);
    model.inertia = best.inertia;
    model.iterations_run = best.iterations;
    model.seed = seed;
    model.restarts = options.restarts;
    return model;
}

std::vector<int> kmeans_labels(const KMeansModel& model, const FeatureMatrix& m) {
    if (m.feature_count() != model.n_features)
        throw FeatureMismatchError("matrix feature count does not match model");
    std::vector<int> labels(m.row_count());
    assign_labels(m, model.centroids, model.k, labels);
    return labels;
}

double silhouette_score(const FeatureMatrix& m, const std::vector<int>& labels) {
    const std::size_t rows = m.row_count();
    const std::size_t n = m.feature_count();
    if (labels.size() != rows) throw LengthMismatchError(labels.size(), rows);

    // Compact the label set.
    std::vector<int> distinct(labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw SingleClusterError();
    const std::size_t k = distinct.size();
    std::vector<std::size_t> cluster_of(rows);
    for (std::size_t i = 0; i < rows; ++i)
        cluster_of[i] = static_cast<std::size_t>(
            std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t c : cluster_of) ++sizes[c];

    // Per-point sum of distances to each cluster, one O(N^2) pass.
    std::vector<double> sums(rows * k, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = i + 1; j < rows; ++j) {
            double d = std::sqrt(sq_dist(m.row(i), m.row(j), n));
            sums[i * k + cluster_of[j]] += d;
            sums[j * k + cluster_of[i]] += d;
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t own = cluster_of[i];
        if (sizes[own] == 1) continue;  // singleton convention: s = 0
        double a = sums[i * k + own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || sizes[c] == 0) continue;
            b = std::min(b, sums[i * k + c] / static_cast<double>(sizes[c]));
        }
        double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(rows);
}

ElbowBand detect_elbow(const std::vector<int>& k_values, const std::vector<double>& inertias) {
    if (k_values.empty() || k_values.size() != inertias.size())
        throw ConfigError("elbow detection needs matching non-empty k and inertia lists");

    ElbowBand band;
    band.k_lo = k_values.front();
    band.k_hi = k_values.back();
    if (k_values.size() == 1) {
        band.k_hi = band.k_lo;
        return band;
    }

    double x_lo = k_values.front();
    double x_range = static_cast<double>(k_values.back() - k_values.front());
    auto [min_it, max_it] = std::minmax_element(inertias.begin(), inertias.end());
    double y_range = *max_it - *min_it;
    if (y_range <= 0.0) {
        band.degenerate = true;
        return band;
    }

    // Normalized chord endpoints are (x0,y0) and (x1,y1) of the curve itself.
    const std::size_t count = k_values.size();
    auto nx = [&](std::size_t i) { return (k_values[i] - x_lo) / x_range; };
    auto ny = [&](std::size_t i) { return (inertias[i] - *min_it) / y_range; };
    double x0 = nx(0), y0 = ny(0);
    double x1 = nx(count - 1), y1 = ny(count - 1);
    double chord = std::hypot(x1 - x0, y1 - y0);

    std::vector<double> dist(count);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < count; ++i) {
        dist[i] = std::abs((x1 - x0) * (y0 - ny(i)) - (x0 - nx(i)) * (y1 - y0)) / chord;
        if (dist[i] > dist[argmax]) argmax = i;
    }
    if (dist[argmax] < 1e-9) {
        // Straight line: no curvature to pick a knee from.
        return band;
    }

    band.has_distinct_elbow = true;
    double threshold = 0.9 * dist[argmax];
    std::size_t lo = argmax;
    while (lo > 0 && dist[lo - 1] >= threshold) --lo;
    std::size_t hi = argmax;
    while (hi + 1 < count && dist[hi + 1] >= threshold) ++hi;
    band.k_lo = k_values[lo];
    band.k_hi = k_values[hi];
    return band;
}

KSweepReport sweep_k(const FeatureMatrix& m, int k_lo, int k_hi, std::uint64_t seed,
                     const KMeansOptions& options) {
    if (k_lo < 1 || k_hi < k_lo) throw ConfigError("invalid k range");
    if (m.row_count() < static_cast<std::size_t>(k_hi))
        throw TooFewSamplesError(m.row_count(), static_cast<std::size_t>(k_hi));

    KSweepReport report;
    report.seed = seed;
    for (int k = k_lo; k <= k_hi; ++k) report.k_values.push_back(k);
    const std::size_t count = report.k_values.size();
    report.inertias.assign(count, 0.0);
    report.silhouettes.assign(count, std::numeric_limits<double>::quiet_NaN());

    // Independent fits; per-k seeds derived from the master seed so parallel
    // and serial execution agree.
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0;
    auto run_one = [&](std::size_t idx) {
        int k = report.k_values[idx];
        KMeansModel model = kmeans_fit(m, k, derive_seed(seed, 0x7377, static_cast<std::uint64_t>(k)),
                                       options);
        report.inertias[idx] = model.inertia;
        if (k >= 2) {
            std::vector<int> labels = kmeans_labels(model, m);
            std::vector<int> distinct(labels);
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            report.silhouettes[idx] =
                distinct.size() >= 2 ? silhouette_score(m, labels) : 0.0;
        }
    };
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
    } else {
        std::mutex mutex;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (;;) {
                std::size_t idx;
                {
                    std::lock_guard<std::mutex> lock(mutex);
                    if (next >= count || first_error) return;
                    idx = next++;
                }
                try {
                    run_one(idx);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < std::min<unsigned>(workers, static_cast<unsigned>(count)); ++w)
            threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    report.elbow_band = detect_elbow(report.k_values, report.inertias);

    double max_inertia = *std::max_element(report.inertias.begin(), report.inertias.end());
    if (max_inertia <= 0.0) {
        report.degenerate_data = true;
        report.chosen_k = report.k_values.front();
        report.selection_rule = "degenerate-constant-data";
        return report;
    }

    int best_k = -1;
    double best_sil = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
        int k = report.k_values[i];
        if (k < 2 || k < report.elbow_band.k_lo || k > report.elbow_band.k_hi) continue;
        if (!std::isnan(report.silhouettes[i]) && report.silhouettes[i] > best_sil) {
            best_sil = report.silhouettes[i];
            best_k = k;
        }
    }
    if (best_k < 0) {
        report.chosen_k = report.elbow_band.k_lo;
        report.selection_rule = "elbow-band-below-2";
    } else {
        report.chosen_k = best_k;
        report.selection_rule = "silhouette-argmax-in-elbow-band";
    }
    return report;
}

std::vector<double> StateModel::state_centroid_unscaled(int state_label) const {
    // relabel_map[original] = public label; invert to find the original row.
    int original = -1;
    for (std::size_t i = 0; i < relabel_map.size(); ++i)
        if (relabel_map[i] == state_label) original = static_cast<int>(i);
    if (original < 0) throw ConfigError("unknown state label " + std::to_string(state_label));
    std::vector<double> c(kmeans.centroid(original), kmeans.centroid(original) + kmeans.n_features);
    if (scaling) {
        for (std::size_t d = 0; d < c.size(); ++d)
            if (scaling->stddev[d] > 0.0) c[d] = c[d] * scaling->stddev[d] + scaling->mean[d];
    }
    return c;
}

StateModel fit_state_model(const FeatureMatrix& m, int k, std::uint64_t seed,
                           const KMeansOptions& options) {
    StateModel model;
    model.kmeans = kmeans_fit(m, k, derive_seed(seed, 0x7377, static_cast<std::uint64_t>(k)), options);
    model.feature_names = m.feature_names();
    model.scaling = m.scaling();
    model.training_start_ts = m.timestamps().empty() ? 0 : m.timestamps().front();
    model.training_end_ts = m.timestamps().empty() ? 0 : m.timestamps().back();

    std::vector<int> labels = kmeans_labels(model.kmeans, m);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int label : labels) ++counts[static_cast<std::size_t>(label)];

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });
    model.relabel_map.assign(static_cast<std::size_t>(k), 0);
    model.populations.assign(static_cast<std::size_t>(k), 0);
    for (int rank = 0; rank < k; ++rank) {
        int original = order[static_cast<std::size_t>(rank)];
        model.relabel_map[static_cast<std::size_t>(original)] = rank;
        model.populations[static_cast<std::size_t>(rank)] = counts[static_cast<std::size_t>(original)];
    }
    return model;
}

StateAssignment assign_nearest(const StateModel& model, const FeatureMatrix& m) {
    if (m.feature_names() != model.feature_names)
        throw FeatureMismatchError("matrix features do not match the state model");
    const FeatureMatrix* data = &m;
    FeatureMatrix scaled;
    if (model.scaling && !m.scaling()) {
        scaled = apply_standardization(m, *model.scaling);
        data = &scaled;
    }
    StateAssignment assignment;
    assignment.timestamps = data->timestamps();
    assignment.labels = kmeans_labels(model.kmeans, *data);
    for (int& label : assignment.labels)
        label = model.relabel_map[static_cast<std::size_t>(label)];
    return assignment;
}

namespace {

nlohmann::json scaling_to_json(const std::optional<FeatureScaling>& scaling) {
    if (!scaling) return nullptr;
    return nlohmann::json{{"mean", scaling->mean}, {"stddev", scaling->stddev}};
}

std::optional<FeatureScaling> scaling_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    FeatureScaling s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    return s;
}

}  // namespace

void save_state_model(const StateModel& model, const std::string& path,
                      const std::map<std::string, std::string>& meta) {
    nlohmann::json j;
    j["schema"] = "powerstate-state-model-v1";
    if (!meta.empty()) j["meta"] = meta;
    j["k"] = model.kmeans.k;
    j["feature_names"] = model.feature_names;
    j["scaling"] = scaling_to_json(model.scaling);
    nlohmann::json centroids = nlohmann::json::array();
    for (int c = 0; c < model.kmeans.k; ++c)
        centroids.push_back(std::vector<double>(
            model.kmeans.centroid(c), model.kmeans.centroid(c) + model.kmeans.n_features));
    j["centroids"] = centroids;
    j["relabel_map"] = model.relabel_map;
    j["populations"] = model.populations;
    j["training_window"] = {{"start_ms", model.training_start_ts}, {"end_ms", model.training_end_ts}};
    j["inertia"] = model.kmeans.inertia;
    j["iterations_run"] = model.kmeans.iterations_run;
    j["seed"] = model.kmeans.seed;
    j["restarts"] = model.kmeans.restarts;
    write_file_atomic(path, j.dump(2) + "\n");
}

StateModel load_state_model(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) throw DataError("cannot open state model: " + path);
    nlohmann::json j;
    try {
        stream >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid state model JSON in " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "powerstate-state-model-v1")
        throw DataError("unsupported state model schema in " + path);

    StateModel model;
    model.kmeans.k = j.at("k").get<int>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.kmeans.n_features = model.feature_names.size();
    model.scaling = scaling_from_json(j.at("scaling"));
    for (const auto& row : j.at("centroids")) {
        auto v = row.get<std::vector<double>>();
        if (v.size() != model.kmeans.n_features)
            throw DataError("centroid width mismatch in " + path);
        model.kmeans.centroids.insert(model.kmeans.centroids.end(), v.begin(), v.end());
    }
    if (model.kmeans.centroids.size() !=
        static_cast<std::size_t>(model.kmeans.k) * model.kmeans.n_features)
        throw DataError("centroid count mismatch in " + path);
    model.relabel_map = j.at("relabel_map").get<std::vector<int>>();
    model.populations = j.at("populations").get<std::vector<std::size_t>>();
    model.training_start_ts = j.at("training_window").at("start_ms").get<std::int64_t>();
    model.training_end_ts = j.at("training_window").at("end_ms").get<std::int64_t>();
    model.kmeans.inertia = j.at("inertia").get<double>();
    model.kmeans.iterations_run = j.at("iterations_run").get<int>();
    model.kmeans.seed = j.at("seed").get<std::uint64_t>();
    model.kmeans.restarts = j.at("restarts").get<int>();
    return model;
}

}  // namespace powerstate
