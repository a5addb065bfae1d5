#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "powerstate/features.hpp"

namespace powerstate {

struct PcaModel {
    std::vector<double> mean_vector;         // n
    std::vector<double> components;          // c x n, row-major, row-orthonormal
    std::vector<double> explained_variance;  // c, non-increasing
    std::vector<std::string> feature_names;
    bool rank_deficient = false;  // padded with an arbitrary orthonormal completion

    std::size_t component_count() const { return explained_variance.size(); }
    std::size_t dimension() const { return mean_vector.size(); }
    const double* component(std::size_t c) const { return components.data() + c * dimension(); }
};

/// Top-c principal components of the sample covariance (1/(N-1)), extracted
/// by power iteration with deflation. Sign convention: the largest-magnitude
/// entry of each component is positive.
PcaModel pca_fit(const FeatureMatrix& m, std::size_t c = 2);

/// (x - mean) . components^T for every row; rows x c, row-major.
std::vector<double> pca_project(const PcaModel& model, const FeatureMatrix& m);

void save_pca_model(const PcaModel& model, const std::string& path,
                    const std::map<std::string, std::string>& meta = {});
PcaModel load_pca_model(const std::string& path);

}  // namespace powerstate
