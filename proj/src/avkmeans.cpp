#include "avk/avkmeans.hpp"

#include <algorithm>
#include <numeric>

#include "avk/error.hpp"
#include "avk/evaluation.hpp"
#include "avk/rng.hpp"

namespace avk {

void AvkmConfig::validate() const {
    if (iterations < 0) throw UsageError("T must be non-negative");
    if (kmeans_steps < 1) throw UsageError("M must be at least 1");
    if (k < 2) throw UsageError("K must be at least 2");
}

AvKmeans::AvKmeans(const Corpus& corpus, Encoder& query_encoder, Encoder& content_encoder,
                   AvkmConfig config)
    : corpus_(corpus),
      query_encoder_(query_encoder),
      content_encoder_(content_encoder),
      config_(config),
      views1_(query_views(corpus)),
      views2_(content_views(corpus)) {
    config_.validate();
    if (corpus_.size() < config_.k) throw DataError("fewer instances than clusters");
    if (query_encoder_.output_dim() != content_encoder_.output_dim())
        throw UsageError("view encoders must share the output dimension");
}

AvkmRunState AvKmeans::initialize() const {
    AvkmRunState state;
    const Eigen::MatrixXd points = query_encoder_.encode(views1_);
    KmeansOptions options;
    options.k = config_.k;
    options.seed = Rng::derive(config_.kmeans_seed, 0);
    const ClusterState clusters = kmeans(points, options);
    state.z1 = clusters.assignment;
    state.initial_objective = clusters.objective;
    state.iteration = 0;
    return state;
}

namespace {

int distinct_count(const std::vector<int>& labels) {
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    return static_cast<int>(sorted.size());
}

}  // namespace

void AvKmeans::semi_iteration(AvkmRunState& state, int source_view) const {
    if (source_view != 1 && source_view != 2) throw UsageError("source view must be 1 or 2");
    const std::vector<int>& source = source_view == 1 ? state.z1 : state.z2;
    if (source.size() != static_cast<std::size_t>(corpus_.size()))
        throw UsageError("source assignment missing; run initialize first");
    if (distinct_count(source) < 2)
        throw DataError("degenerate clustering: source assignment is constant");

    const int target_view = source_view == 1 ? 2 : 1;
    Encoder& target_encoder = target_view == 1 ? query_encoder_ : content_encoder_;
    const std::vector<ViewRef>& target_views = target_view == 1 ? views1_ : views2_;

    // The semi-iteration index seeds both the episode stream and k-means.
    const int semi_index = static_cast<int>(state.history.size()) + 1;
    EpisodeConfig episodes = config_.episodes;
    episodes.seed = Rng::derive(config_.episodes.seed, static_cast<std::uint64_t>(semi_index));
    const std::vector<EpisodeStats> stats = train_episodes(target_encoder, target_views, source, episodes);

    const Eigen::MatrixXd points = target_encoder.encode(target_views);
    KmeansOptions options;
    options.k = config_.k;
    options.max_steps = config_.kmeans_steps;
    options.init = source;
    options.seed = Rng::derive(config_.kmeans_seed, static_cast<std::uint64_t>(semi_index));
    const ClusterState clusters = kmeans(points, options);

    std::vector<int>& target = target_view == 1 ? state.z1 : state.z2;
    target = clusters.assignment;

    SemiIterationDiag diag;
    diag.iteration = (semi_index + 1) / 2;
    diag.target_view = target_view;
    diag.kmeans_objective = clusters.objective;
    diag.kmeans_steps = clusters.iterations;
    for (const EpisodeStats& s : stats) {
        diag.mean_episode_loss += s.loss;
        diag.mean_episode_accuracy += s.accuracy;
        diag.episode_losses.push_back(s.loss);
    }
    if (!stats.empty()) {
        diag.mean_episode_loss /= static_cast<double>(stats.size());
        diag.mean_episode_accuracy /= static_cast<double>(stats.size());
    }
    diag.cross_view_agreement =
        state.z2.empty() ? 0.0 : pairwise_agreement(state.z1, state.z2);
    state.history.push_back(std::move(diag));
}

AvkmRunState AvKmeans::run() const {
    AvkmRunState state = initialize();
    for (int t = 1; t <= config_.iterations; ++t) {
        semi_iteration(state, 1);
        semi_iteration(state, 2);
        state.iteration = t;
    }
    return state;
}

}  // namespace avk
