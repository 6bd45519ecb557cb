#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "avk/corpus.hpp"
#include "avk/encoders.hpp"

namespace avk {

/// One sampled few-shot task: class ids with disjoint support/query members.
struct Episode {
    std::vector<int> class_ids;                 // sampled cluster ids
    std::vector<std::vector<int>> support;      // per class, instance indices
    std::vector<std::vector<int>> query;        // per class, instance indices
};

/// Samples up to n_classes classes among those with at least
/// n_support + 1 members. Support is drawn without replacement; query from
/// the remainder, with replacement only when the remainder is short.
/// Throws DataError when fewer than 2 classes are eligible.
Episode sample_episode(const std::vector<int>& labels, int n_classes, int n_support, int n_query,
                       std::uint64_t seed);

/// Per-class means of support embeddings; one row per class.
Eigen::MatrixXd compute_prototypes(const std::vector<Eigen::MatrixXd>& support_by_class);

/// Softmax over negative squared Euclidean distances to the prototypes,
/// computed with max-subtraction.
Eigen::VectorXd class_distribution(const Eigen::VectorXd& query, const Eigen::MatrixXd& prototypes);

/// Row layout for episode_loss: all support rows grouped by class (class 0
/// first), then query rows in any order with episode-local labels.
struct EpisodeLayout {
    std::vector<int> support_counts;  // per episode-local class
    std::vector<int> query_labels;    // per query row
};

struct EpisodeLoss {
    double loss = 0.0;      // mean NLL over query rows
    double accuracy = 0.0;  // fraction of query rows whose nearest prototype is correct
    Eigen::MatrixXd d_embeddings;  // gradient w.r.t. every input row
};

/// NLL of the episode under the prototype softmax, with gradients flowing
/// through both the query rows and (via the prototypes) the support rows.
EpisodeLoss episode_loss(const Eigen::MatrixXd& embeddings, const EpisodeLayout& layout);

struct EpisodeConfig {
    int n_episodes = 100;
    int n_classes = 10;
    int n_support = 5;
    int n_query = 15;
    double lr = 0.001;
    std::uint64_t seed = 0;
};

struct EpisodeStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Episodic training of one encoder against pseudo labels: sample episode,
/// forward support+query, prototype NLL, backward, one Adam step on the
/// encoder parameters and its embedding table.
std::vector<EpisodeStats> train_episodes(Encoder& encoder, const std::vector<ViewRef>& views,
                                         const std::vector<int>& labels,
                                         const EpisodeConfig& config);

}  // namespace avk
