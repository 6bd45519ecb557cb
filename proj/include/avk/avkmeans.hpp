#pragma once

#include <cstdint>
#include <vector>

#include "avk/corpus.hpp"
#include "avk/encoders.hpp"
#include "avk/kmeans.hpp"
#include "avk/protonet.hpp"

namespace avk {

struct AvkmConfig {
    int iterations = 50;      // T, outer iterations
    int kmeans_steps = 10;    // M, bounded k-means steps per semi-iteration
    int k = 2;                // number of clusters
    EpisodeConfig episodes;   // 100 episodes x 10 classes x (5 support, 15 query), lr 0.001
    std::uint64_t kmeans_seed = 0;

    void validate() const;
};

/// One record per semi-iteration (two per outer iteration).
struct SemiIterationDiag {
    int iteration = 0;       // outer iteration, 1-based (0 = initialization)
    int target_view = 0;     // the view whose encoder was trained
    double mean_episode_loss = 0.0;
    double mean_episode_accuracy = 0.0;
    double kmeans_objective = 0.0;
    int kmeans_steps = 0;
    double cross_view_agreement = 0.0;
    std::vector<double> episode_losses;
};

struct AvkmRunState {
    std::vector<int> z1;  // view-1 assignment
    std::vector<int> z2;  // view-2 assignment
    int iteration = 0;
    double initial_objective = 0.0;
    std::vector<SemiIterationDiag> history;
};

/// Algorithm driver: alternates projecting the cluster assignment across
/// views, episodic training of the receiving view's encoder, and
/// warm-started bounded k-means refinement.
class AvKmeans {
public:
    AvKmeans(const Corpus& corpus, Encoder& query_encoder, Encoder& content_encoder,
             AvkmConfig config);

    /// Lines 1-2: encode view 1 and run k-means to convergence for z1.
    AvkmRunState initialize() const;

    /// One semi-iteration: train the target view's encoder on pseudo labels
    /// from the source view, re-encode, then M warm-started k-means steps.
    /// The source encoder is not touched.
    void semi_iteration(AvkmRunState& state, int source_view) const;

    /// initialize + T full iterations (view 1 -> 2 then view 2 -> 1).
    /// The returned state's z1 is the final assignment.
    AvkmRunState run() const;

private:
    const Corpus& corpus_;
    Encoder& query_encoder_;
    Encoder& content_encoder_;
    AvkmConfig config_;
    std::vector<ViewRef> views1_;
    std::vector<ViewRef> views2_;
};

}  // namespace avk
