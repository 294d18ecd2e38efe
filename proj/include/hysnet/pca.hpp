#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace hysnet {

struct PcaResult {
    std::vector<std::vector<double>> components;  // k x d, unit length
    std::vector<double> explained_ratio;          // eigenvalue / total variance
    std::vector<std::vector<double>> projection;  // n x k
    std::vector<double> mean;                     // column means (length d)
};

// Top-k principal components via power iteration with deflation on the
// population covariance. Sign convention: the first component entry larger
// than 1e-12 in magnitude is made positive.
PcaResult pca_project(const std::vector<std::vector<double>>& rows, std::size_t k,
                      double tol = 1e-10, std::size_t max_iter = 10000);

// Flattened generated-parameter vectors with their content-class labels.
struct WeightCloud {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    std::vector<std::array<double, 2>> projection;
};

struct SeparationStats {
    // Expected L2 distance between two independent draws from the same label
    // (averaged over labels) and from different labels.
    double within = 0.0;
    double between = 0.0;
};

// Distances are computed on the full-dimensional rows, not the projection.
SeparationStats cluster_separation(const std::vector<std::vector<double>>& rows,
                                   const std::vector<std::string>& labels);

}  // namespace hysnet
