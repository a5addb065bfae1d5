// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any enforced criterion fails.
//
// The last criterion needs the released India-4 dataset; point
// POWERSTATE_INDIA4_DIR (or --india4-dir) at a directory containing
// india-4/harmonics.csv and india-4/ecd.csv to enable it. Without the data
// it reports SKIP and does not affect the exit code.

#include <unistd.h>

#include <chrono>
#include <functional>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "powerstate/pipeline.hpp"
#include "powerstate/rng.hpp"
#include "powerstate/timeparse.hpp"

using namespace powerstate;

namespace {

int failures = 0;

double run_timed(const std::function<bool(std::string&)>& body, const char* name,
                 double budget_seconds) {
    std::string detail;
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0 && elapsed > budget_seconds) {
        ok = false;
        detail += detail.empty() ? "" : "; ";
        detail += "over the " + std::to_string(static_cast<int>(budget_seconds)) + "s budget";
    }
    std::printf("%s %s (%s) [%.1fs]\n", ok ? "PASS" : "FAIL", name, detail.c_str(), elapsed);
    if (!ok) ++failures;
    return elapsed;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t features, Rng& rng) {
    std::vector<std::int64_t> ts;
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
        ts.push_back(static_cast<std::int64_t>(r) * 60'000);
        for (std::size_t f = 0; f < features; ++f) values.push_back(rng.uniform(-5, 5));
    }
    std::vector<std::string> names;
    for (std::size_t f = 0; f < features; ++f) names.push_back("f" + std::to_string(f));
    return FeatureMatrix(std::move(names), std::move(ts), std::move(values));
}

// ---------------------------------------------------------------- criterion 1
bool silhouette_oracle_equivalence(std::string& detail) {
    Rng rng(0x5101);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t rows = 20 + rng.uniform_below(481);     // <= 500
        std::size_t features = 1 + rng.uniform_below(45);   // <= 45
        int clusters = 2 + static_cast<int>(rng.uniform_below(7));  // 2..8
        FeatureMatrix m = random_matrix(rows, features, rng);
        std::vector<int> labels(rows);
        for (std::size_t r = 0; r < rows; ++r)
            labels[r] = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(clusters)));
        labels[0] = 0;
        labels[1] = 1;  // guarantee two distinct labels
        double lib = silhouette_score(m, labels);
        double oracle = oracles::brute_silhouette(m, labels);
        worst = std::max(worst, std::abs(lib - oracle));
    }
    std::ostringstream os;
    os << "50 matrices, max |lib - oracle| = " << worst;
    detail = os.str();
    return worst <= 1e-9;
}

// ---------------------------------------------------------------- criterion 2
bool kmeans_fixed_points(std::string& detail) {
    Rng rng(0x5102);
    double worst_rel = 0.0, worst_zero = 0.0;
    bool reassign_ok = true;
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t rows = 10 + rng.uniform_below(70);
        std::size_t features = 1 + rng.uniform_below(8);
        FeatureMatrix m = random_matrix(rows, features, rng);

        // inertia(k=1) = total SSE about the global mean.
        KMeansModel k1 = kmeans_fit(m, 1, 7 + trial);
        std::vector<double> mean(features, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t f = 0; f < features; ++f) mean[f] += m.value(r, f);
        for (double& v : mean) v /= static_cast<double>(rows);
        double sse = 0.0;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t f = 0; f < features; ++f) {
                double d = m.value(r, f) - mean[f];
                sse += d * d;
            }
        worst_rel = std::max(worst_rel, std::abs(k1.inertia - sse) / std::max(sse, 1e-300));

        // inertia(k=N) = 0.
        KMeansModel kn = kmeans_fit(m, static_cast<int>(rows), 11 + trial, {3, 300, 1e-6});
        worst_zero = std::max(worst_zero, kn.inertia);

        // Post-convergence reassignment is a no-op.
        int k = 2 + static_cast<int>(rng.uniform_below(4));
        KMeansModel mid = kmeans_fit(m, k, 13 + trial);
        std::vector<int> labels = kmeans_labels(mid, m);
        if (kmeans_labels(mid, m) != labels) reassign_ok = false;
        std::vector<double> centroid_means(static_cast<std::size_t>(k) * features, 0.0);
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t f = 0; f < features; ++f)
                centroid_means[static_cast<std::size_t>(labels[r]) * features + f] += m.value(r, f);
            ++counts[static_cast<std::size_t>(labels[r])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) continue;
            for (std::size_t f = 0; f < features; ++f) {
                double cm = centroid_means[static_cast<std::size_t>(c) * features + f] /
                            static_cast<double>(counts[static_cast<std::size_t>(c)]);
                if (std::abs(cm - mid.centroid(c)[f]) > 1e-9) reassign_ok = false;
            }
        }
    }
    std::ostringstream os;
    os << "20 matrices, k=1 rel err " << worst_rel << ", k=N inertia " << worst_zero
       << ", reassignment " << (reassign_ok ? "stable" : "UNSTABLE");
    detail = os.str();
    return worst_rel <= 1e-6 && worst_zero <= 1e-9 && reassign_ok;
}

// ---------------------------------------------------------------- criterion 3
int best_permutation_agreement(const std::vector<int>& truth, const std::vector<int>& labels,
                               int k) {
    std::vector<std::vector<int>> overlap(static_cast<std::size_t>(k),
                                          std::vector<int>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++overlap[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(labels[i])];
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    int best = 0;
    do {
        int agree = 0;
        for (int t = 0; t < k; ++t) agree += overlap[static_cast<std::size_t>(t)]
                                                    [static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

bool state_recovery(std::string& detail) {
    std::ostringstream os;
    bool ok = true;
    PipelineConfig feature_config;  // defaults: mean-of-phases, 7-day horizons
    for (int g = 2; g <= 8; ++g) {
        int correct = 0;
        double min_agreement = 1.0;
        for (int trial = 0; trial < 20; ++trial) {
            SyntheticProfile profile =
                make_blob_profile(g, 5.0, 0.5, derive_seed(0x5103, g, trial));  // sep/noise = 10
            profile.harmonics_period_ms = 60'000;
            profile.ecd_period_ms = 60'000;
            SyntheticData data = generate_days(profile, 1);

            FeatureMatrix m = build_features(feature_config, data.harmonics, profile.start_ts,
                                             profile.start_ts + kMillisPerDay - 1);
            KMeansOptions lean{10, 300, 1e-6};
            KSweepReport sweep = sweep_k(m, 1, 12, derive_seed(0x5104, g, trial), lean);
            if (sweep.chosen_k == g) ++correct;

            StateModel model = fit_state_model(m, g, derive_seed(0x5104, g, trial), lean);
            StateAssignment assigned = assign_nearest(model, m);
            int agree = best_permutation_agreement(data.truth.labels, assigned.labels, g);
            min_agreement = std::min(
                min_agreement, static_cast<double>(agree) / static_cast<double>(assigned.size()));
        }
        os << "g=" << g << ":" << correct << "/20 agr>=" << min_agreement << " ";
        if (correct < 18 || min_agreement < 0.98) ok = false;
    }
    detail = os.str();
    return ok;
}

// ---------------------------------------------------------------- criterion 4
bool imputation_exactness(std::string& detail) {
    // Day-periodic week, 15 channels at 1-minute cadence.
    std::vector<std::string> names;
    for (int c = 0; c < 15; ++c) names.push_back("ch" + std::to_string(c));
    TimestampedFrame original(names, kMillisPerMinute);
    std::vector<double> row(15);
    for (int minute = 0; minute < 7 * 1440; ++minute) {
        double tod = static_cast<double>(minute % 1440);
        for (int c = 0; c < 15; ++c)
            row[static_cast<std::size_t>(c)] =
                5.0 + c + 2.0 * std::sin(tod / 90.0 + c) + 0.5 * std::cos(tod / 17.0);
        original.append_row(static_cast<std::int64_t>(minute) * kMillisPerMinute, row);
    }
    TimestampedFrame gapped =
        inject_gaps(original, 0.1029, SpanLengthDistribution{2.0}, 0x5105);
    double realized =
        1.0 - static_cast<double>(gapped.row_count()) / static_cast<double>(original.row_count());

    GridSpec grid{0, 7 * kMillisPerDay - kMillisPerMinute, kMillisPerMinute};
    ImputationResult result = impute_same_timestamp(gapped, grid);

    std::size_t donor_cells = 0, fallback_cells = 0, mismatches = 0, range_violations = 0;
    std::vector<double> ch_min(15, 1e300), ch_max(15, -1e300);
    for (std::size_t r = 0; r < original.row_count(); ++r)
        for (std::size_t c = 0; c < 15; ++c) {
            ch_min[c] = std::min(ch_min[c], original.value(r, c));
            ch_max[c] = std::max(ch_max[c], original.value(r, c));
        }
    for (std::size_t r = 0; r < original.row_count(); ++r) {
        for (std::size_t c = 0; c < 15; ++c) {
            double got = result.frame.value(r, c);
            switch (result.provenance_at(r, c)) {
                case CellProvenance::original:
                    if (got != original.value(r, c)) ++mismatches;
                    break;
                case CellProvenance::donor:
                    ++donor_cells;
                    // Day-periodic data: every same-time donor carries the
                    // exact original value.
                    if (got != original.value(r, c)) ++mismatches;
                    break;
                case CellProvenance::fallback:
                    ++fallback_cells;
                    if (got < ch_min[c] - 1e-12 || got > ch_max[c] + 1e-12) ++range_violations;
                    break;
            }
        }
    }
    std::ostringstream os;
    os << "gap rate " << realized << ", donor cells " << donor_cells << ", fallback cells "
       << fallback_cells << ", mismatches " << mismatches << ", range violations "
       << range_violations;
    detail = os.str();
    return std::abs(realized - 0.1029) <= 0.005 && mismatches == 0 && range_violations == 0 &&
           donor_cells > 0;
}

// ---------------------------------------------------------------- criterion 5
bool pca_correctness(std::string& detail) {
    Rng rng(0x5106);
    double worst_value = 0.0, worst_cos = 1.0, worst_var = 0.0, worst_ortho = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> spectrum;
        double v = rng.uniform(4.0, 9.0);
        for (int i = 0; i < 5; ++i) {
            spectrum.push_back(v);
            v *= rng.uniform(0.3, 0.6);
        }
        auto q = oracles::random_orthonormal(5, rng);
        std::vector<double> cov = oracles::covariance_from_spectrum(q, spectrum);
        std::vector<double> oracle_values = oracles::eigenvalues_charpoly(cov, 5);
        FeatureMatrix m = oracles::data_with_exact_covariance(q, spectrum);
        PcaModel model = pca_fit(m, 5);
        for (std::size_t c = 0; c < 5; ++c) {
            worst_value = std::max(worst_value,
                                   std::abs(model.explained_variance[c] - oracle_values[c]) /
                                       std::max(oracle_values[c], 1e-12));
            std::vector<double> ov =
                oracles::eigenvector_inverse_iteration(cov, 5, oracle_values[c]);
            double cosine = 0.0;
            for (std::size_t f = 0; f < 5; ++f) cosine += model.component(c)[f] * ov[f];
            worst_cos = std::min(worst_cos, std::abs(cosine));
        }
    }

    // Projected per-component variance equals explained_variance.
    for (int trial = 0; trial < 10; ++trial) {
        FeatureMatrix m = random_matrix(300 + rng.uniform_below(200), 7, rng);
        PcaModel model = pca_fit(m, 2);
        std::vector<double> projected = pca_project(model, m);
        for (std::size_t c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < m.row_count(); ++r) mean += projected[r * 2 + c];
            mean /= static_cast<double>(m.row_count());
            double var = 0.0;
            for (std::size_t r = 0; r < m.row_count(); ++r) {
                double d = projected[r * 2 + c] - mean;
                var += d * d;
            }
            var /= static_cast<double>(m.row_count() - 1);
            worst_var = std::max(worst_var, std::abs(var - model.explained_variance[c]) /
                                                std::max(model.explained_variance[c], 1e-12));
        }

        // Orthonormality.
        PcaModel wide = pca_fit(m, 5);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                double dot = 0.0;
                for (std::size_t f = 0; f < 7; ++f) dot += wide.component(i)[f] * wide.component(j)[f];
                worst_ortho = std::max(worst_ortho, std::abs(dot - (i == j ? 1.0 : 0.0)));
            }
    }
    std::ostringstream os;
    os << "eig rel err " << worst_value << ", min |cos| " << worst_cos << ", var rel err "
       << worst_var << ", ortho err " << worst_ortho;
    detail = os.str();
    return worst_value <= 1e-6 && worst_cos >= 1.0 - 1e-6 && worst_var <= 1e-6 &&
           worst_ortho <= 1e-9;
}

// ---------------------------------------------------------------- criterion 6
bool f1_arithmetic(std::string& detail) {
    // Hand-computed confusion cases.
    StateAssignment truth{{0, 1, 2, 3}, {1, 1, 0, 0}};
    StateAssignment pred{{0, 1, 2, 3}, {1, 0, 1, 0}};
    EvaluationReport r = f1_score(pred, truth);
    bool hand = r.per_class_f1.at(0) == 0.5 && r.per_class_f1.at(1) == 0.5 && r.f1_macro == 0.5;

    StateAssignment same{{0, 1, 2}, {2, 0, 1}};
    hand = hand && f1_score(same, same).f1_macro == 1.0;
    StateAssignment t2{{0, 1}, {0, 0}};
    StateAssignment p2{{0, 1}, {1, 1}};
    hand = hand && f1_score(p2, t2).f1_macro == 0.0;

    // A 3-class case worked out by hand: truth 0,0,1,1,2,2; pred 0,1,1,2,2,2.
    // class0: TP1 FP0 FN1 -> 2/3; class1: TP1 FP1 FN1 -> 0.5; class2: TP2 FP1 FN0 -> 0.8.
    StateAssignment t3{{0, 1, 2, 3, 4, 5}, {0, 0, 1, 1, 2, 2}};
    StateAssignment p3{{0, 1, 2, 3, 4, 5}, {0, 1, 1, 2, 2, 2}};
    EvaluationReport r3 = f1_score(p3, t3);
    hand = hand && std::abs(r3.per_class_f1.at(0) - 2.0 / 3.0) < 1e-15 &&
           r3.per_class_f1.at(1) == 0.5 && std::abs(r3.per_class_f1.at(2) - 0.8) < 1e-15 &&
           std::abs(r3.f1_macro - (2.0 / 3.0 + 0.5 + 0.8) / 3.0) < 1e-15;

    // Micro-F1 equals accuracy, exactly, on 100 random label pairs.
    Rng rng(0x5107);
    bool micro_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t count = 1 + rng.uniform_below(80);
        int classes = 2 + static_cast<int>(rng.uniform_below(6));
        StateAssignment t, p;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < count; ++i) {
            t.timestamps.push_back(static_cast<std::int64_t>(i));
            p.timestamps.push_back(static_cast<std::int64_t>(i));
            int tv = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(classes)));
            int pv = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(classes)));
            t.labels.push_back(tv);
            p.labels.push_back(pv);
            if (tv == pv) ++correct;
        }
        if (f1_score(p, t).f1_micro != static_cast<double>(correct) / static_cast<double>(count))
            micro_ok = false;
    }
    detail = std::string("hand cases ") + (hand ? "exact" : "WRONG") + ", micro==accuracy " +
             (micro_ok ? "exact on 100 pairs" : "VIOLATED");
    return hand && micro_ok;
}

// ---------------------------------------------------------------- criterion 7
bool end_to_end_determinism(std::string& detail) {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / ("powerstate_accept_" + std::to_string(::getpid()));
    fs::create_directories(base);

    SyntheticProfile profile = make_blob_profile(3, 5.0, 0.3, 2024);
    profile.harmonics_period_ms = 30'000;
    profile.ecd_period_ms = 20'000;
    profile.gap_fraction = 0.03;
    profile.name = "accept-loc";
    run_synth(profile, 3, (base / "data").string());

    PipelineConfig config;
    config.location = "accept-loc";
    config.data_dir = (base / "data").string();
    config.output_dir = (base / "out").string();
    config.k_min = 1;
    config.k_max = 8;
    config.kmeans.restarts = 5;
    config.forest.n_trees = 20;
    config.seed = 99;
    config.train_start_ts = parse_config_time("2022-07-01", false);
    config.train_end_ts = parse_config_time("2022-07-02", true);
    config.eval_dates = {day_start(parse_config_time("2022-07-03", false))};
    auto run_all = [&] {
        run_ingest(config);
        run_discover(config);
        run_assign(config, config.eval_dates[0]);
        run_eval(config);
    };
    run_all();
    fs::copy(base / "out", base / "out1", fs::copy_options::recursive);
    run_all();
    fs::copy(base / "out", base / "out2", fs::copy_options::recursive);

    auto slurp = [](const fs::path& p) {
        std::ifstream stream(p, std::ios::binary);
        std::stringstream ss;
        ss << stream.rdbuf();
        return ss.str();
    };
    std::size_t files = 0, different = 0;
    for (const char* rel :
         {"accept-loc/gap_report.json", "accept-loc/sweep.csv", "accept-loc/state_model.json",
          "accept-loc/pca_model.json", "accept-loc/effective_config.json",
          "accept-loc/forest_model.json", "accept-loc/features.csv", "results/accept-loc/2022-07-03.csv",
          "results/accept-loc/2022-07-03_pca.csv", "results/accept-loc/2022-07-03_active_power.csv",
          "leaderboard/accept-loc.csv"}) {
        ++files;
        if (slurp(base / "out1" / rel) != slurp(base / "out2" / rel) ||
            slurp(base / "out1" / rel).empty())
            ++different;
    }
    fs::remove_all(base);
    std::ostringstream os;
    os << files << " files compared, " << different << " differ";
    detail = os.str();
    return different == 0;
}

// ---------------------------------------------------------------- criterion 8
bool paper_reproduction(const std::string& dir, std::string& detail) {
    PipelineConfig config;
    config.location = "india-4";
    config.data_dir = dir;
    config.output_dir =
        (std::filesystem::temp_directory_path() / "powerstate_india4_out").string();
    config.k_min = 1;
    config.k_max = 20;
    config.seed = 42;

    // Cluster-count sweep over the published training week.
    config.train_start_ts = parse_config_time("2022-01-10", false);
    config.train_end_ts = parse_config_time("2022-01-15", true);
    DiscoverResult week = run_discover(config);
    int chosen = week.sweep ? week.sweep->chosen_k : 0;

    // Classifier trained over the three published weeks at k = 6.
    config.explicit_k = 6;
    config.train_start_ts = parse_config_time("2022-01-03", false);
    config.train_end_ts = parse_config_time("2022-01-23", true);
    config.eval_dates = {day_start(parse_config_time("2022-01-20", false)),
                         day_start(parse_config_time("2022-01-28", false))};
    run_discover(config);
    std::vector<EvalRow> rows = run_eval(config);
    if (rows.size() != 2) {
        detail = "expected 2 evaluation rows";
        return false;
    }
    const EvaluationReport& jan20 = rows[0].report;
    const EvaluationReport& jan28 = rows[1].report;

    bool f1_ok = false;
    const char* mode_name = "none";
    for (auto [mode, name] : std::initializer_list<std::pair<F1Averaging, const char*>>{
             {F1Averaging::macro, "macro"},
             {F1Averaging::micro, "micro"},
             {F1Averaging::weighted, "weighted"}}) {
        if (std::abs(jan20.f1(mode) - 0.51) <= 0.10 && std::abs(jan28.f1(mode) - 0.67) <= 0.10) {
            f1_ok = true;
            mode_name = name;
            break;
        }
    }
    bool states_ok = jan20.distinct_pred_states == 5 && jan28.distinct_pred_states == 4;

    std::ostringstream os;
    os << "chosen_k " << chosen << " (want 6); Jan20 f1 m/mi/w " << jan20.f1_macro << "/"
       << jan20.f1_micro << "/" << jan20.f1_weighted << " states " << jan20.distinct_pred_states
       << " (want 5); Jan28 f1 " << jan28.f1_macro << "/" << jan28.f1_micro << "/"
       << jan28.f1_weighted << " states " << jan28.distinct_pred_states << " (want 4); mode "
       << mode_name;
    detail = os.str();
    return chosen == 6 && f1_ok && states_ok;
}

}  // namespace

int main(int argc, char** argv) {
    std::string india4_dir;
    if (const char* env = std::getenv("POWERSTATE_INDIA4_DIR")) india4_dir = env;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--india4-dir") == 0) india4_dir = argv[i + 1];

    run_timed(silhouette_oracle_equivalence, "criterion-1-silhouette-oracle", 60);
    run_timed(kmeans_fixed_points, "criterion-2-kmeans-fixed-points", 60);
    run_timed(state_recovery, "criterion-3-state-recovery", 300);
    run_timed(imputation_exactness, "criterion-4-imputation-exactness", 60);
    run_timed(pca_correctness, "criterion-5-pca-correctness", 0);
    run_timed(f1_arithmetic, "criterion-6-f1-arithmetic", 0);
    run_timed(end_to_end_determinism, "criterion-7-end-to-end-determinism", 0);

    if (india4_dir.empty()) {
        std::printf(
            "SKIP criterion-8-paper-reproduction (released India-4 data not present; set "
            "POWERSTATE_INDIA4_DIR; non-blocking)\n");
    } else {
        run_timed([&](std::string& d) { return paper_reproduction(india4_dir, d); },
                  "criterion-8-paper-reproduction", 0);
    }

    if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
