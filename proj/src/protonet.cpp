#include "avk/protonet.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "avk/error.hpp"
#include "avk/rng.hpp"

namespace avk {

Episode sample_episode(const std::vector<int>& labels, int n_classes, int n_support, int n_query,
                       std::uint64_t seed) {
    if (n_classes < 1 || n_support < 1 || n_query < 1)
        throw UsageError("episode sizes must be positive");

    std::map<int, std::vector<int>> members;  // ordered for determinism
    for (std::size_t i = 0; i < labels.size(); ++i)
        members[labels[i]].push_back(static_cast<int>(i));

    std::vector<int> eligible;
    for (const auto& [cls, idx] : members) {
        if (static_cast<int>(idx.size()) >= n_support + 1) eligible.push_back(cls);
    }
    if (eligible.size() < 2)
        throw DataError("degenerate clustering: fewer than 2 classes have enough members");

    Rng rng(seed);
    rng.shuffle(eligible);
    const int take = std::min<int>(n_classes, static_cast<int>(eligible.size()));
    eligible.resize(static_cast<std::size_t>(take));
    std::sort(eligible.begin(), eligible.end());

    Episode episode;
    episode.class_ids = eligible;
    for (int cls : eligible) {
        std::vector<int> pool = members[cls];
        rng.shuffle(pool);
        episode.support.emplace_back(pool.begin(), pool.begin() + n_support);
        std::vector<int> remainder(pool.begin() + n_support, pool.end());
        std::vector<int> query;
        if (static_cast<int>(remainder.size()) >= n_query) {
            query.assign(remainder.begin(), remainder.begin() + n_query);
        } else {
            query.reserve(static_cast<std::size_t>(n_query));
            for (int q = 0; q < n_query; ++q)
                query.push_back(remainder[rng.bounded(remainder.size())]);
        }
        episode.query.push_back(std::move(query));
    }
    return episode;
}

Eigen::MatrixXd compute_prototypes(const std::vector<Eigen::MatrixXd>& support_by_class) {
    if (support_by_class.empty()) throw UsageError("no classes given");
    const Eigen::Index d = support_by_class.front().cols();
    Eigen::MatrixXd prototypes(static_cast<Eigen::Index>(support_by_class.size()), d);
    for (std::size_t k = 0; k < support_by_class.size(); ++k) {
        const Eigen::MatrixXd& block = support_by_class[k];
        if (block.rows() == 0) throw DataError("empty support class");
        if (block.cols() != d) throw UsageError("support dimension mismatch");
        prototypes.row(static_cast<Eigen::Index>(k)) = block.colwise().mean();
    }
    return prototypes;
}

Eigen::VectorXd class_distribution(const Eigen::VectorXd& query,
                                   const Eigen::MatrixXd& prototypes) {
    if (prototypes.rows() == 0) throw UsageError("no prototypes given");
    Eigen::VectorXd logits(prototypes.rows());
    for (Eigen::Index k = 0; k < prototypes.rows(); ++k)
        logits(k) = -(query.transpose() - prototypes.row(k)).squaredNorm();
    const double max_logit = logits.maxCoeff();
    Eigen::VectorXd probs = (logits.array() - max_logit).exp();
    probs /= probs.sum();
    return probs;
}

EpisodeLoss episode_loss(const Eigen::MatrixXd& embeddings, const EpisodeLayout& layout) {
    const int n_classes = static_cast<int>(layout.support_counts.size());
    if (n_classes < 1) throw UsageError("episode needs at least one class");

    int support_total = 0;
    for (int c : layout.support_counts) {
        if (c < 1) throw DataError("empty support class");
        support_total += c;
    }
    const int n_query = static_cast<int>(layout.query_labels.size());
    if (n_query < 1) throw UsageError("episode needs query rows");
    if (embeddings.rows() != support_total + n_query)
        throw UsageError("embedding row count does not match layout");

    const Eigen::Index d = embeddings.cols();

    // Prototypes: segment means over the support block.
    Eigen::MatrixXd prototypes(n_classes, d);
    std::vector<int> offsets(static_cast<std::size_t>(n_classes), 0);
    {
        int row = 0;
        for (int k = 0; k < n_classes; ++k) {
            offsets[static_cast<std::size_t>(k)] = row;
            prototypes.row(k) =
                embeddings.middleRows(row, layout.support_counts[static_cast<std::size_t>(k)])
                    .colwise()
                    .mean();
            row += layout.support_counts[static_cast<std::size_t>(k)];
        }
    }

    EpisodeLoss result;
    result.d_embeddings = Eigen::MatrixXd::Zero(embeddings.rows(), d);
    Eigen::MatrixXd d_prototypes = Eigen::MatrixXd::Zero(n_classes, d);

    double nll = 0.0;
    int correct = 0;
    const double inv_q = 1.0 / static_cast<double>(n_query);
    for (int q = 0; q < n_query; ++q) {
        const Eigen::Index row = support_total + q;
        const int label = layout.query_labels[static_cast<std::size_t>(q)];
        if (label < 0 || label >= n_classes) throw UsageError("query label out of range");

        Eigen::VectorXd logits(n_classes);
        for (int k = 0; k < n_classes; ++k)
            logits(k) = -(embeddings.row(row) - prototypes.row(k)).squaredNorm();
        const double max_logit = logits.maxCoeff();
        const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
        nll += -(logits(label) - lse);

        int nearest = 0;
        for (int k = 1; k < n_classes; ++k)
            if (logits(k) > logits(nearest)) nearest = k;
        if (nearest == label) ++correct;

        const Eigen::VectorXd probs = (logits.array() - lse).exp();
        for (int k = 0; k < n_classes; ++k) {
            const double w = (probs(k) - (k == label ? 1.0 : 0.0)) * inv_q;
            // d logits_k / d x = -2 (x - c_k);  d logits_k / d c_k = 2 (x - c_k)
            const Eigen::RowVectorXd diff = embeddings.row(row) - prototypes.row(k);
            result.d_embeddings.row(row) += -2.0 * w * diff;
            d_prototypes.row(k) += 2.0 * w * diff;
        }
    }

    for (int k = 0; k < n_classes; ++k) {
        const int count = layout.support_counts[static_cast<std::size_t>(k)];
        const Eigen::RowVectorXd share = d_prototypes.row(k) / static_cast<double>(count);
        for (int s = 0; s < count; ++s)
            result.d_embeddings.row(offsets[static_cast<std::size_t>(k)] + s) += share;
    }

    result.loss = nll * inv_q;
    result.accuracy = static_cast<double>(correct) / static_cast<double>(n_query);
    return result;
}

std::vector<EpisodeStats> train_episodes(Encoder& encoder, const std::vector<ViewRef>& views,
                                         const std::vector<int>& labels,
                                         const EpisodeConfig& config) {
    if (views.size() != labels.size()) throw UsageError("views and labels differ in length");

    std::vector<EpisodeStats> stats;
    stats.reserve(static_cast<std::size_t>(config.n_episodes));
    for (int e = 0; e < config.n_episodes; ++e) {
        const Episode episode = sample_episode(labels, config.n_classes, config.n_support,
                                               config.n_query, Rng::derive(config.seed, e));

        std::vector<ViewRef> batch_views;
        EpisodeLayout layout;
        for (const std::vector<int>& support : episode.support) {
            layout.support_counts.push_back(static_cast<int>(support.size()));
            for (int idx : support) batch_views.push_back(views[static_cast<std::size_t>(idx)]);
        }
        for (std::size_t k = 0; k < episode.query.size(); ++k) {
            for (int idx : episode.query[k]) {
                batch_views.push_back(views[static_cast<std::size_t>(idx)]);
                layout.query_labels.push_back(static_cast<int>(k));
            }
        }

        EncodedBatch batch = encoder.forward(batch_views);
        EpisodeLoss loss = episode_loss(batch.outputs, layout);
        encoder.zero_grad();
        encoder.backward(batch, loss.d_embeddings);
        encoder.params().adam_step(config.lr);
        encoder.table().adam_step(config.lr);
        stats.push_back({loss.loss, loss.accuracy});
    }
    return stats;
}

}  // namespace avk
