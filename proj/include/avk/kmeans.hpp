#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace avk {

struct ClusterState {
    std::vector<int> assignment;  // per-point cluster id in [0, K)
    Eigen::MatrixXd centroids;    // K x D
    double objective = 0.0;       // sum of squared distances to assigned centroids
    int iterations = 0;           // assign/update step pairs actually run
};

/// Per-step objectives, recorded after the assign half and after the update
/// half of each Lloyd step. Used by the monotonicity checks.
struct KmeansTrace {
    std::vector<double> after_assign;
    std::vector<double> after_update;
};

struct KmeansOptions {
    int k = 2;
    /// Step bound M. Unset means run to convergence (or 100 steps).
    std::optional<int> max_steps;
    /// Warm-start assignment; initial centroids are its per-cluster means.
    /// Unset means k-means++ seeding under `seed`.
    std::optional<std::vector<int>> init;
    std::uint64_t seed = 0;
};

/// Per-cluster means. Empty clusters are re-seeded at the member of the
/// largest cluster farthest from the reference point (the cluster's previous
/// centroid when available, otherwise the largest cluster's own mean).
Eigen::MatrixXd centroids_from_assignment(const Eigen::MatrixXd& points,
                                          const std::vector<int>& assignment, int k);

/// Lloyd's algorithm over fixed points. Warm-started calls honor the M bound
/// exactly; assignment ties break toward the lowest cluster index.
ClusterState kmeans(const Eigen::MatrixXd& points, const KmeansOptions& options,
                    KmeansTrace* trace = nullptr);

}  // namespace avk
