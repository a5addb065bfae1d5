#include "powerstate/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "powerstate/csv.hpp"
#include "powerstate/rng.hpp"

namespace powerstate {

namespace {

constexpr double kEigenTol = 1e-10;
constexpr int kMaxEigenIterations = 10000;

void mat_vec(const std::vector<double>& a, std::size_t n, const std::vector<double>& x,
             std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
        out[i] = s;
    }
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void orthogonalize_against(std::vector<double>& v, const std::vector<double>& basis,
                           std::size_t basis_rows, std::size_t n) {
    for (std::size_t b = 0; b < basis_rows; ++b) {
        const double* u = basis.data() + b * n;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += v[i] * u[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * u[i];
    }
}

/// Dominant eigenpair of a symmetric PSD matrix by power iteration, with
/// re-orthogonalization against previously extracted components.
bool power_iteration(const std::vector<double>& a, std::size_t n, const std::vector<double>& found,
                     std::size_t found_rows, std::uint64_t seed, std::vector<double>& vec,
                     double& value) {
    Rng rng(seed);
    vec.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vec[i] = rng.uniform(-1.0, 1.0);
    orthogonalize_against(vec, found, found_rows, n);
    double len = norm(vec);
    if (len == 0.0) return false;
    for (double& x : vec) x /= len;

    std::vector<double> next(n);
    double prev_value = 0.0;
    for (int iter = 0; iter < kMaxEigenIterations; ++iter) {
        mat_vec(a, n, vec, next);
        orthogonalize_against(next, found, found_rows, n);
        double next_len = norm(next);
        if (next_len < 1e-300) return false;  // residual matrix is numerically zero
        for (double& x : next) x /= next_len;
        // Rayleigh quotient for the eigenvalue estimate.
        mat_vec(a, n, next, vec);
        double rayleigh = 0.0;
        for (std::size_t i = 0; i < n; ++i) rayleigh += next[i] * vec[i];
        double delta = std::abs(rayleigh - prev_value);
        vec = next;
        prev_value = rayleigh;
        if (delta <= kEigenTol * std::max(1.0, std::abs(rayleigh))) break;
    }
    value = prev_value;
    return value > 0.0;
}

void apply_sign_convention(double* v, std::size_t n) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0)
        for (std::size_t i = 0; i < n; ++i) v[i] = -v[i];
}

/// Deterministic orthonormal completion from the canonical basis.
bool complete_basis_vector(std::vector<double>& components, std::size_t have, std::size_t n) {
    for (std::size_t axis = 0; axis < n; ++axis) {
        std::vector<double> v(n, 0.0);
        v[axis] = 1.0;
        orthogonalize_against(v, components, have, n);
        double len = norm(v);
        if (len > 1e-6) {
            for (double& x : v) x /= len;
            std::copy(v.begin(), v.end(), components.begin() + have * n);
            return true;
        }
    }
    return false;
}

}  // namespace

PcaModel pca_fit(const FeatureMatrix& m, std::size_t c) {
    const std::size_t rows = m.row_count();
    const std::size_t n = m.feature_count();
    if (c < 1) throw ConfigError("component count must be at least 1");
    if (n < c) throw ConfigError("component count exceeds feature count");
    if (rows <= c) throw TooFewSamplesError(rows, c + 1);

    PcaModel model;
    model.feature_names = m.feature_names();
    model.mean_vector.assign(n, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) model.mean_vector[j] += m.value(r, j);
    for (double& v : model.mean_vector) v /= static_cast<double>(rows);

    // Sample covariance, 1/(N-1).
    std::vector<double> cov(n * n, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            double di = m.value(r, i) - model.mean_vector[i];
            for (std::size_t j = i; j < n; ++j)
                cov[i * n + j] += di * (m.value(r, j) - model.mean_vector[j]);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            cov[i * n + j] /= static_cast<double>(rows - 1);
            cov[j * n + i] = cov[i * n + j];
        }

    model.components.assign(c * n, 0.0);
    model.explained_variance.assign(c, 0.0);
    std::vector<double> work = cov;
    std::vector<double> vec;
    double lambda_max = 0.0;
    for (std::size_t comp = 0; comp < c; ++comp) {
        double value = 0.0;
        bool ok = power_iteration(work, n, model.components, comp,
                                  derive_seed(0x70636155ULL, comp), vec, value);
        // An eigenvalue at the numerical noise floor of the deflation counts
        // as zero: the matrix has fewer than c nonzero eigenvalues.
        if (ok && comp > 0 && value < 1e-12 * std::max(lambda_max, 1.0)) ok = false;
        if (!ok) {
            model.rank_deficient = true;
            if (!complete_basis_vector(model.components, comp, n))
                throw NumericError("failed to complete an orthonormal basis");
            model.explained_variance[comp] = 0.0;
            apply_sign_convention(model.components.data() + comp * n, n);
            continue;
        }
        std::copy(vec.begin(), vec.end(), model.components.begin() + comp * n);
        apply_sign_convention(model.components.data() + comp * n, n);
        model.explained_variance[comp] = value;
        lambda_max = std::max(lambda_max, value);
        // Deflate: A <- A - lambda v v^T.
        const double* v = model.components.data() + comp * n;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) work[i * n + j] -= value * v[i] * v[j];
    }

    // Deflation returns eigenvalues in non-increasing order already; enforce
    // exact monotonicity against numerical jitter.
    for (std::size_t i = 1; i < c; ++i)
        model.explained_variance[i] = std::min(model.explained_variance[i],
                                               model.explained_variance[i - 1]);
    return model;
}

std::vector<double> pca_project(const PcaModel& model, const FeatureMatrix& m) {
    const std::size_t n = model.dimension();
    const std::size_t c = model.component_count();
    if (m.feature_count() != n)
        throw FeatureMismatchError("matrix feature count does not match PCA model");
    std::vector<double> out(m.row_count() * c, 0.0);
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        for (std::size_t comp = 0; comp < c; ++comp) {
            const double* v = model.component(comp);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += (m.value(r, j) - model.mean_vector[j]) * v[j];
            out[r * c + comp] = s;
        }
    }
    return out;
}

void save_pca_model(const PcaModel& model, const std::string& path,
                    const std::map<std::string, std::string>& meta) {
    nlohmann::json j;
    j["schema"] = "powerstate-pca-model-v1";
    if (!meta.empty()) j["meta"] = meta;
    j["feature_names"] = model.feature_names;
    j["mean_vector"] = model.mean_vector;
    nlohmann::json comps = nlohmann::json::array();
    for (std::size_t c = 0; c < model.component_count(); ++c)
        comps.push_back(std::vector<double>(model.component(c), model.component(c) + model.dimension()));
    j["components"] = comps;
    j["explained_variance"] = model.explained_variance;
    j["rank_deficient"] = model.rank_deficient;
    write_file_atomic(path, j.dump(2) + "\n");
}

PcaModel load_pca_model(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) throw DataError("cannot open PCA model: " + path);
    nlohmann::json j;
    try {
        stream >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid PCA model JSON in " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "powerstate-pca-model-v1")
        throw DataError("unsupported PCA model schema in " + path);
    PcaModel model;
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.mean_vector = j.at("mean_vector").get<std::vector<double>>();
    for (const auto& row : j.at("components")) {
        auto v = row.get<std::vector<double>>();
        if (v.size() != model.mean_vector.size()) throw DataError("component width mismatch in " + path);
        model.components.insert(model.components.end(), v.begin(), v.end());
    }
    model.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    model.rank_deficient = j.at("rank_deficient").get<bool>();
    return model;
}

}  // namespace powerstate
