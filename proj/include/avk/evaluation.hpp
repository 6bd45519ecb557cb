#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace avk {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// precision: each predicted cluster claims its most frequent gold cluster;
/// recall: each gold cluster claims its most frequent predicted cluster;
/// f1: harmonic mean. Label values may be arbitrary non-negative ints.
Prf cluster_prf(const std::vector<int>& gold, const std::vector<int>& pred);

struct HungarianResult {
    std::vector<int> row_to_col;  // -1 when a row is unmatched (rectangular case)
    double total = 0.0;           // profit summed over the matched pairs
};

/// Exact maximum-profit one-to-one assignment over min(rows, cols) pairs.
HungarianResult hungarian_max(const Eigen::MatrixXd& profit);

struct AccResult {
    double acc = 0.0;
    std::vector<int> pred_to_gold;  // dense pred id -> dense gold id, -1 unmatched
};

/// Unsupervised clustering accuracy under the optimal one-to-one matching
/// between predicted and gold clusters (Hungarian on the confusion matrix).
AccResult cluster_acc(const std::vector<int>& gold, const std::vector<int>& pred);

struct ConfusionEntry {
    int gold = 0;   // dense gold id
    int pred = 0;   // dense pred id
    int count = 0;
};

struct ClusterMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double acc = 0.0;
    int n_labeled = 0;
    int k_gold = 0;
    int k_pred = 0;
    Eigen::MatrixXi confusion;            // k_gold x k_pred counts
    std::vector<int> pred_to_gold;        // Hungarian mapping, -1 unmatched
    std::vector<ConfusionEntry> top_confusions;  // off-mapping cells, count-descending
};

ClusterMetrics evaluate_clustering(const std::vector<int>& gold, const std::vector<int>& pred,
                                   int top_confusions = 5);

/// Fraction of instance pairs on which two assignments agree about
/// co-membership (Rand index). Diagnostic for cross-view consistency.
double pairwise_agreement(const std::vector<int>& a, const std::vector<int>& b);

std::string metrics_report_json(const ClusterMetrics& metrics);

}  // namespace avk
