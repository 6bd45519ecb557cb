#include "avk/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "avk/error.hpp"

namespace avk {

namespace {

// Compress arbitrary label values to dense ids in first-appearance order.
std::vector<int> densify(const std::vector<int>& labels, int& k_out) {
    std::unordered_map<int, int> ids;
    std::vector<int> dense(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int next_id = static_cast<int>(ids.size());
        dense[i] = ids.emplace(labels[i], next_id).first->second;
    }
    k_out = static_cast<int>(ids.size());
    return dense;
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& gold, const std::vector<int>& pred,
                                 int k_gold, int k_pred) {
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(k_gold, k_pred);
    for (std::size_t i = 0; i < gold.size(); ++i) counts(gold[i], pred[i]) += 1;
    return counts;
}

void check_inputs(const std::vector<int>& gold, const std::vector<int>& pred) {
    if (gold.size() != pred.size()) throw UsageError("label vectors differ in length");
    if (gold.empty()) throw DataError("cannot score an empty clustering");
}

}  // namespace

Prf cluster_prf(const std::vector<int>& gold, const std::vector<int>& pred) {
    check_inputs(gold, pred);
    int k_gold = 0, k_pred = 0;
    const std::vector<int> g = densify(gold, k_gold);
    const std::vector<int> p = densify(pred, k_pred);
    const Eigen::MatrixXi counts = confusion_matrix(g, p, k_gold, k_pred);
    const double n = static_cast<double>(gold.size());

    long precision_hits = 0;
    for (int j = 0; j < k_pred; ++j) precision_hits += counts.col(j).maxCoeff();
    long recall_hits = 0;
    for (int i = 0; i < k_gold; ++i) recall_hits += counts.row(i).maxCoeff();

    // Single divisions over integer counts keep the golden cases exact.
    Prf out;
    out.precision = static_cast<double>(precision_hits) / n;
    out.recall = static_cast<double>(recall_hits) / n;
    out.f1 = (precision_hits + recall_hits) > 0
                 ? 2.0 * static_cast<double>(precision_hits) * static_cast<double>(recall_hits) /
                       (n * static_cast<double>(precision_hits + recall_hits))
                 : 0.0;
    return out;
}

HungarianResult hungarian_max(const Eigen::MatrixXd& profit) {
    const Eigen::Index rows = profit.rows();
    const Eigen::Index cols = profit.cols();
    if (rows == 0 || cols == 0) throw DataError("hungarian: empty matrix");
    if (!profit.allFinite()) throw NumericError("hungarian: non-finite entries");

    // Kuhn-Munkres with potentials on the square cost matrix
    // cost = max(profit) - profit, padded with zeros. Dummy rows/columns
    // contribute a constant, so the real matching stays optimal.
    const Eigen::Index n = std::max(rows, cols);
    const double shift = profit.maxCoeff();
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
    cost.topLeftCorner(rows, cols) = (shift - profit.array()).matrix();

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<Eigen::Index> match(static_cast<std::size_t>(n) + 1, 0);  // col -> row (1-based)
    std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, 0);

    for (Eigen::Index i = 1; i <= n; ++i) {
        match[0] = i;
        Eigen::Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Eigen::Index i0 = match[static_cast<std::size_t>(j0)];
            double delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    HungarianResult result;
    result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
    for (Eigen::Index j = 1; j <= n; ++j) {
        const Eigen::Index i = match[static_cast<std::size_t>(j)];
        if (i >= 1 && i <= rows && j <= cols)
            result.row_to_col[static_cast<std::size_t>(i - 1)] = static_cast<int>(j - 1);
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
        const int j = result.row_to_col[static_cast<std::size_t>(i)];
        if (j >= 0) result.total += profit(i, j);
    }
    return result;
}

AccResult cluster_acc(const std::vector<int>& gold, const std::vector<int>& pred) {
    check_inputs(gold, pred);
    int k_gold = 0, k_pred = 0;
    const std::vector<int> g = densify(gold, k_gold);
    const std::vector<int> p = densify(pred, k_pred);
    const Eigen::MatrixXi counts = confusion_matrix(g, p, k_gold, k_pred);

    const HungarianResult match = hungarian_max(counts.cast<double>());
    AccResult out;
    out.acc = match.total / static_cast<double>(gold.size());
    out.pred_to_gold.assign(static_cast<std::size_t>(k_pred), -1);
    for (int i = 0; i < k_gold; ++i) {
        const int j = match.row_to_col[static_cast<std::size_t>(i)];
        if (j >= 0) out.pred_to_gold[static_cast<std::size_t>(j)] = i;
    }
    return out;
}

ClusterMetrics evaluate_clustering(const std::vector<int>& gold, const std::vector<int>& pred,
                                   int top_confusions) {
    check_inputs(gold, pred);
    ClusterMetrics metrics;
    int k_gold = 0, k_pred = 0;
    const std::vector<int> g = densify(gold, k_gold);
    const std::vector<int> p = densify(pred, k_pred);
    metrics.confusion = confusion_matrix(g, p, k_gold, k_pred);
    metrics.n_labeled = static_cast<int>(gold.size());
    metrics.k_gold = k_gold;
    metrics.k_pred = k_pred;

    const Prf prf = cluster_prf(g, p);
    metrics.precision = prf.precision;
    metrics.recall = prf.recall;
    metrics.f1 = prf.f1;

    const AccResult acc = cluster_acc(g, p);
    metrics.acc = acc.acc;
    metrics.pred_to_gold = acc.pred_to_gold;

    // Error cells in the style of a confusion report: instances whose
    // predicted cluster maps to a different gold cluster.
    std::vector<ConfusionEntry> errors;
    for (int i = 0; i < k_gold; ++i) {
        for (int j = 0; j < k_pred; ++j) {
            const int count = metrics.confusion(i, j);
            if (count == 0) continue;
            if (metrics.pred_to_gold[static_cast<std::size_t>(j)] == i) continue;
            errors.push_back({i, j, count});
        }
    }
    std::sort(errors.begin(), errors.end(), [](const ConfusionEntry& a, const ConfusionEntry& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.gold != b.gold) return a.gold < b.gold;
        return a.pred < b.pred;
    });
    if (static_cast<int>(errors.size()) > top_confusions) errors.resize(top_confusions);
    metrics.top_confusions = std::move(errors);
    return metrics;
}

double pairwise_agreement(const std::vector<int>& a, const std::vector<int>& b) {
    check_inputs(a, b);
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    int ka = 0, kb = 0;
    const std::vector<int> da = densify(a, ka);
    const std::vector<int> db = densify(b, kb);
    const Eigen::MatrixXi counts = confusion_matrix(da, db, ka, kb);

    auto pairs2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double same_both = 0.0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) same_both += pairs2(counts(i, j));
    double same_a = 0.0;
    for (int i = 0; i < ka; ++i) same_a += pairs2(counts.row(i).sum());
    double same_b = 0.0;
    for (int j = 0; j < kb; ++j) same_b += pairs2(counts.col(j).sum());
    const double total = pairs2(n);
    // agreements = pairs together in both + pairs apart in both
    return (total + 2.0 * same_both - same_a - same_b) / total;
}

std::string metrics_report_json(const ClusterMetrics& metrics) {
    nlohmann::json j;
    j["precision"] = metrics.precision;
    j["recall"] = metrics.recall;
    j["f1"] = metrics.f1;
    j["acc"] = metrics.acc;
    j["n_labeled"] = metrics.n_labeled;
    j["K_gold"] = metrics.k_gold;
    j["K_pred"] = metrics.k_pred;
    j["top_confusions"] = nlohmann::json::array();
    for (const ConfusionEntry& e : metrics.top_confusions) {
        j["top_confusions"].push_back({{"gold", e.gold}, {"pred", e.pred}, {"count", e.count}});
    }
    return j.dump(2);
}

}  // namespace avk
