#include <doctest.h>

#include <algorithm>

#include "avk/error.hpp"
#include "avk/evaluation.hpp"
#include "avk/rng.hpp"
#include "oracles.hpp"

using namespace avk;

namespace {

std::vector<int> random_labels(Rng& rng, int n, int k) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& label : labels) label = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(k)));
    return labels;
}

std::vector<int> relabel(const std::vector<int>& labels, const std::vector<int>& permutation) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = permutation[static_cast<std::size_t>(labels[i])];
    return out;
}

}  // namespace

TEST_CASE("identical clusterings score 1 on every metric") {
    const std::vector<int> labels = {0, 1, 2, 1, 0, 2};
    const Prf prf = cluster_prf(labels, labels);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 1.0);
    CHECK(prf.f1 == 1.0);
    CHECK(cluster_acc(labels, labels).acc == 1.0);
}

TEST_CASE("cluster_prf golden case") {
    const std::vector<int> gold = {0, 0, 1, 1, 1};
    const std::vector<int> pred = {0, 0, 0, 1, 1};
    const Prf prf = cluster_prf(gold, pred);
    CHECK(prf.precision == 0.8);
    CHECK(prf.recall == 0.8);
    CHECK(prf.f1 == 0.8);
}

TEST_CASE("single predicted cluster halves precision on two balanced gold clusters") {
    std::vector<int> gold;
    std::vector<int> pred;
    for (int i = 0; i < 8; ++i) {
        gold.push_back(i < 4 ? 0 : 1);
        pred.push_back(0);
    }
    const Prf prf = cluster_prf(gold, pred);
    CHECK(prf.precision == 0.5);
}

TEST_CASE("hungarian solves the trivial cases") {
    Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(3, 3);
    HungarianResult r = hungarian_max(identity);
    CHECK(r.total == 3.0);
    CHECK(r.row_to_col == std::vector<int>{0, 1, 2});

    Eigen::MatrixXd anti(2, 2);
    anti << 0, 1, 1, 0;
    r = hungarian_max(anti);
    CHECK(r.total == 2.0);
    CHECK(r.row_to_col == std::vector<int>{1, 0});
}

TEST_CASE("hungarian equals brute force on random integer matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 80; ++trial) {
        const int rows = 1 + static_cast<int>(rng.bounded(7));
        const int cols = 1 + static_cast<int>(rng.bounded(7));
        Eigen::MatrixXd profit(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                profit(i, j) = static_cast<double>(rng.bounded(41)) - 20.0;
        const HungarianResult fast = hungarian_max(profit);
        CHECK(fast.total == oracle::brute_force_assignment(profit));

        // matched pairs form a valid partial one-to-one map
        std::vector<int> used;
        int matched = 0;
        for (int c : fast.row_to_col) {
            if (c < 0) continue;
            ++matched;
            CHECK(std::find(used.begin(), used.end(), c) == used.end());
            used.push_back(c);
        }
        CHECK(matched == std::min(rows, cols));
    }
}

TEST_CASE("hungarian rejects empty input") {
    CHECK_THROWS_AS(hungarian_max(Eigen::MatrixXd(0, 0)), DataError);
}

TEST_CASE("cluster_acc golden case equals 4/6") {
    const std::vector<int> gold = {0, 0, 1, 1, 2, 2};
    const std::vector<int> pred = {0, 1, 1, 2, 2, 2};
    const AccResult acc = cluster_acc(gold, pred);
    CHECK(acc.acc == 4.0 / 6.0);
    CHECK(acc.acc == oracle::brute_force_acc(gold, pred));
}

TEST_CASE("cluster_acc is 1 for any permutation relabeling and for degenerate inputs") {
    const std::vector<int> gold = {0, 1, 2, 0, 1, 2, 2};
    const std::vector<int> pred = relabel(gold, {2, 0, 1});
    CHECK(cluster_acc(gold, pred).acc == 1.0);

    const std::vector<int> ones(5, 0);
    CHECK(cluster_acc(ones, ones).acc == 1.0);
}

TEST_CASE("metrics are invariant under relabeling either side") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.bounded(5));
        const std::vector<int> gold = random_labels(rng, 30, k);
        const std::vector<int> pred = random_labels(rng, 30, k);

        std::vector<int> perm(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
        rng.shuffle(perm);

        const ClusterMetrics base = evaluate_clustering(gold, pred);
        const ClusterMetrics pred_relabeled = evaluate_clustering(gold, relabel(pred, perm));
        const ClusterMetrics gold_relabeled = evaluate_clustering(relabel(gold, perm), pred);

        CHECK(base.precision == doctest::Approx(pred_relabeled.precision).epsilon(1e-12));
        CHECK(base.recall == doctest::Approx(pred_relabeled.recall).epsilon(1e-12));
        CHECK(base.f1 == doctest::Approx(pred_relabeled.f1).epsilon(1e-12));
        CHECK(base.acc == doctest::Approx(pred_relabeled.acc).epsilon(1e-12));
        CHECK(base.precision == doctest::Approx(gold_relabeled.precision).epsilon(1e-12));
        CHECK(base.recall == doctest::Approx(gold_relabeled.recall).epsilon(1e-12));
        CHECK(base.acc == doctest::Approx(gold_relabeled.acc).epsilon(1e-12));
    }
}

TEST_CASE("acc never exceeds precision and all metrics stay in [0,1]") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.bounded(6));
        const std::vector<int> gold = random_labels(rng, 40, k);
        const std::vector<int> pred = random_labels(rng, 40, k);
        const ClusterMetrics m = evaluate_clustering(gold, pred);
        CHECK(m.acc <= m.precision + 1e-12);
        for (double v : {m.precision, m.recall, m.f1, m.acc}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        // f1 is the harmonic mean
        const double expected =
            (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0;
        CHECK(m.f1 == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_AS(cluster_prf({}, {}), DataError);
    CHECK_THROWS_AS(cluster_acc({}, {}), DataError);
}

TEST_CASE("confusion report lists off-mapping cells by descending count") {
    const std::vector<int> gold = {0, 0, 0, 1, 1, 1, 2, 2};
    const std::vector<int> pred = {0, 0, 1, 1, 1, 1, 1, 2};
    const ClusterMetrics m = evaluate_clustering(gold, pred);
    CHECK(m.n_labeled == 8);
    CHECK(m.confusion.sum() == 8);
    for (std::size_t i = 1; i < m.top_confusions.size(); ++i)
        CHECK(m.top_confusions[i - 1].count >= m.top_confusions[i].count);
    for (const ConfusionEntry& e : m.top_confusions)
        CHECK(m.pred_to_gold[static_cast<std::size_t>(e.pred)] != e.gold);

    const std::string report = metrics_report_json(m);
    CHECK(report.find("\"precision\"") != std::string::npos);
    CHECK(report.find("\"top_confusions\"") != std::string::npos);
}

TEST_CASE("pairwise agreement matches the brute-force pair count") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const std::vector<int> a = random_labels(rng, 25, 4);
        const std::vector<int> b = random_labels(rng, 25, 3);
        CHECK(pairwise_agreement(a, b) ==
              doctest::Approx(oracle::brute_force_agreement(a, b)).epsilon(1e-12));
    }
    const std::vector<int> same = random_labels(rng, 25, 4);
    CHECK(pairwise_agreement(same, same) == 1.0);
}
