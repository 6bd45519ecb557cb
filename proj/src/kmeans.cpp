#include "avk/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "avk/error.hpp"
#include "avk/rng.hpp"

namespace avk {

namespace {

Eigen::MatrixXd compute_centroids(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
                                  int k, const Eigen::MatrixXd* previous) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, d);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int z = assignment[static_cast<std::size_t>(i)];
        centroids.row(z) += points.row(i);
        ++counts[static_cast<std::size_t>(z)];
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0)
            centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    // Re-seed empty clusters from the largest cluster's members; each grabs a
    // distinct point so no two empty clusters collapse onto each other.
    int largest = 0;
    for (int c = 1; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(largest)])
            largest = c;
    }
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) continue;
        Eigen::RowVectorXd reference;
        if (previous)
            reference = previous->row(c);
        else
            reference = centroids.row(largest);
        double best = -1.0;
        Eigen::Index pick = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (assignment[static_cast<std::size_t>(i)] != largest) continue;
            if (taken[static_cast<std::size_t>(i)]) continue;
            const double dist = (points.row(i) - reference).squaredNorm();
            if (dist > best) {
                best = dist;
                pick = i;
            }
        }
        if (pick >= 0) {
            centroids.row(c) = points.row(pick);
            taken[static_cast<std::size_t>(pick)] = 1;
        } else if (previous) {
            centroids.row(c) = previous->row(c);
        }
    }
    return centroids;
}

std::vector<int> assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
    const Eigen::Index n = points.rows();
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> assignment(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < k; ++c) {
            const double dist = (points.row(i) - centroids.row(c)).squaredNorm();
            if (dist < best) {  // strict: ties keep the lowest index
                best = dist;
                best_c = c;
            }
        }
        assignment[static_cast<std::size_t>(i)] = best_c;
    }
    return assignment;
}

double objective_of(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
                    const Eigen::MatrixXd& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        total += (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd dist2 =
        (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                r -= dist2(i);
                if (r <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = points.row(pick);
        dist2 = dist2.cwiseMin(
            (points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

}  // namespace

Eigen::MatrixXd centroids_from_assignment(const Eigen::MatrixXd& points,
                                          const std::vector<int>& assignment, int k) {
    if (k < 1) throw UsageError("k must be positive");
    if (static_cast<Eigen::Index>(assignment.size()) != points.rows())
        throw UsageError("assignment length does not match point count");
    for (int z : assignment) {
        if (z < 0 || z >= k) throw UsageError("assignment id out of range");
    }
    return compute_centroids(points, assignment, k, nullptr);
}

ClusterState kmeans(const Eigen::MatrixXd& points, const KmeansOptions& options,
                    KmeansTrace* trace) {
    const Eigen::Index n = points.rows();
    const int k = options.k;
    if (k < 1) throw DataError("kmeans: cluster count must be at least 1");
    if (n < k) throw DataError("kmeans: fewer points than clusters");
    if (options.max_steps && *options.max_steps < 1)
        throw UsageError("kmeans: step bound must be at least 1");

    Eigen::MatrixXd centroids;
    std::optional<std::vector<int>> prev_assignment;
    if (options.init) {
        if (static_cast<Eigen::Index>(options.init->size()) != n)
            throw UsageError("kmeans: init assignment length mismatch");
        for (int z : *options.init) {
            if (z < 0 || z >= k) throw UsageError("kmeans: init assignment id out of range");
        }
        centroids = compute_centroids(points, *options.init, k, nullptr);
        prev_assignment = *options.init;
    } else {
        Rng rng(options.seed);
        centroids = kmeanspp_seed(points, k, rng);
    }

    const int max_steps = options.max_steps.value_or(100);
    ClusterState state;
    state.centroids = centroids;
    for (int step = 0; step < max_steps; ++step) {
        std::vector<int> assignment = assign_nearest(points, state.centroids);
        if (trace) trace->after_assign.push_back(objective_of(points, assignment, state.centroids));
        const bool converged = prev_assignment && assignment == *prev_assignment;

        state.centroids = compute_centroids(points, assignment, k, &state.centroids);
        state.assignment = std::move(assignment);
        state.objective = objective_of(points, state.assignment, state.centroids);
        if (trace) trace->after_update.push_back(state.objective);
        ++state.iterations;

        if (converged) break;
        prev_assignment = state.assignment;
    }
    return state;
}

}  // namespace avk
