#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "avk/protonet.hpp"
#include "avk/rng.hpp"
#include "oracles.hpp"

using namespace avk;

namespace {

std::vector<int> labels_with_counts(const std::vector<int>& counts) {
    std::vector<int> labels;
    for (std::size_t cls = 0; cls < counts.size(); ++cls)
        for (int i = 0; i < counts[cls]; ++i) labels.push_back(static_cast<int>(cls));
    return labels;
}

}  // namespace

TEST_CASE("a 20-member class is split into disjoint 5 support + 15 query") {
    const std::vector<int> labels = labels_with_counts({20, 20});
    const Episode episode = sample_episode(labels, 2, 5, 15, 7);
    REQUIRE(episode.class_ids == std::vector<int>{0, 1});
    for (std::size_t k = 0; k < 2; ++k) {
        REQUIRE(episode.support[k].size() == 5);
        REQUIRE(episode.query[k].size() == 15);
        std::set<int> support(episode.support[k].begin(), episode.support[k].end());
        std::set<int> query(episode.query[k].begin(), episode.query[k].end());
        CHECK(support.size() == 5);
        CHECK(query.size() == 15);
        for (int q : query) CHECK(support.count(q) == 0);
        std::set<int> all = support;
        all.insert(query.begin(), query.end());
        CHECK(all.size() == 20);  // exactly covers the class
        for (int idx : all) CHECK(labels[static_cast<std::size_t>(idx)] == static_cast<int>(k));
    }
}

TEST_CASE("episodes are deterministic under the seed") {
    const std::vector<int> labels = labels_with_counts({12, 9, 30});
    const Episode a = sample_episode(labels, 2, 5, 15, 99);
    const Episode b = sample_episode(labels, 2, 5, 15, 99);
    CHECK(a.class_ids == b.class_ids);
    CHECK(a.support == b.support);
    CHECK(a.query == b.query);
}

TEST_CASE("short classes draw query points with replacement from the remainder") {
    const std::vector<int> labels = labels_with_counts({8, 25});
    const Episode episode = sample_episode(labels, 2, 5, 15, 3);
    const std::size_t short_class = 0;
    REQUIRE(episode.class_ids[short_class] == 0);
    const std::set<int> support(episode.support[short_class].begin(),
                                episode.support[short_class].end());
    std::set<int> remainder;
    for (int i = 0; i < 8; ++i)
        if (!support.count(i)) remainder.insert(i);
    CHECK(remainder.size() == 3);
    REQUIRE(episode.query[short_class].size() == 15);
    for (int q : episode.query[short_class]) CHECK(remainder.count(q) == 1);
}

TEST_CASE("classes below the support threshold are excluded; fewer than 2 eligible aborts") {
    const std::vector<int> labels = labels_with_counts({3, 40, 40});
    const Episode episode = sample_episode(labels, 10, 5, 15, 1);
    CHECK(episode.class_ids == std::vector<int>{1, 2});

    const std::vector<int> degenerate = labels_with_counts({50, 2});
    CHECK_THROWS_AS(sample_episode(degenerate, 10, 5, 15, 1), DataError);
}

TEST_CASE("prototypes are per-class support means") {
    Eigen::MatrixXd single(1, 2);
    single << 3, -1;
    Eigen::MatrixXd symmetric(2, 2);
    symmetric << 1, 2, -1, -2;
    Eigen::MatrixXd pair(2, 2);
    pair << 1, 0, 3, 0;

    const Eigen::MatrixXd protos = compute_prototypes({single, symmetric, pair});
    CHECK(protos.row(0) == single.row(0));
    CHECK(protos.row(1).norm() == 0.0);
    CHECK(protos(2, 0) == doctest::Approx(2.0));
    CHECK(protos(2, 1) == doctest::Approx(0.0));

    CHECK_THROWS_AS(compute_prototypes({Eigen::MatrixXd(0, 2)}), DataError);
}

TEST_CASE("prototypes are translation equivariant") {
    Rng rng(5);
    Eigen::MatrixXd a(3, 4), b(2, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) a(i, j) = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) b(i, j) = rng.uniform(-1, 1);
    Eigen::RowVectorXd shift(4);
    shift << 1, -2, 0.5, 3;

    const Eigen::MatrixXd base = compute_prototypes({a, b});
    const Eigen::MatrixXd shifted = compute_prototypes(
        {a.rowwise() + shift, b.rowwise() + shift});
    CHECK((shifted - (base.rowwise() + shift)).norm() < 1e-12);
}

TEST_CASE("class_distribution basics") {
    SUBCASE("equidistant prototypes give the uniform distribution") {
        Eigen::MatrixXd protos(3, 2);
        protos << 1, 0, -1, 0, 0, 1;  // all at distance 1 from the origin
        const Eigen::VectorXd p = class_distribution(Eigen::Vector2d(0, 0), protos);
        for (int k = 0; k < 3; ++k) CHECK(p(k) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    }
    SUBCASE("a single prototype gets probability 1") {
        Eigen::MatrixXd protos(1, 2);
        protos << 5, 5;
        const Eigen::VectorXd p = class_distribution(Eigen::Vector2d(0, 0), protos);
        CHECK(p(0) == 1.0);
    }
    SUBCASE("two-prototype point check") {
        Eigen::MatrixXd protos(2, 2);
        protos << 1, 0, 2, 0;
        const Eigen::VectorXd p = class_distribution(Eigen::Vector2d(0, 0), protos);
        // d1 = 1, d2 = 4: p1 = 1 / (1 + exp(-3))
        CHECK(p(0) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))).epsilon(1e-12));
    }
}

TEST_CASE("class_distribution properties") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + static_cast<int>(rng.bounded(6));
        Eigen::MatrixXd protos(k, 3);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < 3; ++j) protos(i, j) = rng.uniform(-2, 2);
        Eigen::Vector3d query(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));

        const Eigen::VectorXd p = class_distribution(query, protos);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
        CHECK(p.minCoeff() > 0.0);

        // argmax equals the nearest prototype
        Eigen::Index argmax = 0;
        p.maxCoeff(&argmax);
        Eigen::Index nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < k; ++i) {
            const double d = (query.transpose() - protos.row(i)).squaredNorm();
            if (d < best) {
                best = d;
                nearest = i;
            }
        }
        CHECK(argmax == nearest);

        // translation invariance
        Eigen::RowVector3d shift(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const Eigen::VectorXd shifted = class_distribution(
            query + shift.transpose(), Eigen::MatrixXd(protos.rowwise() + shift));
        CHECK((p - shifted).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("episode loss gradient matches finite differences through both paths") {
    // 2 classes x (2 support + 1 query) embeddings as free parameters
    Rng rng(13);
    Eigen::MatrixXd embeddings(6, 3);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) embeddings(i, j) = rng.uniform(-1, 1);
    EpisodeLayout layout;
    layout.support_counts = {2, 2};
    layout.query_labels = {0, 1};

    const EpisodeLoss loss = episode_loss(embeddings, layout);
    const auto loss_fn = [&]() { return episode_loss(embeddings, layout).loss; };
    const oracle::GradCheck check = oracle::finite_difference_check(
        loss_fn, {{"embeddings", &embeddings, &loss.d_embeddings}});
    CHECK(check.max_rel <= 1e-3);
}

namespace {

struct PlantedSetup {
    std::shared_ptr<EmbeddingTable> table;
    std::unique_ptr<Encoder> encoder;
    std::vector<Utterance> utterances;
    std::vector<ViewRef> views;
    std::vector<int> labels;
};

// Each class has its own token range so the mean embeddings are separable.
PlantedSetup planted(int n_classes, int per_class, int tokens_per_class, std::uint64_t seed) {
    PlantedSetup setup;
    setup.table = std::make_shared<EmbeddingTable>(
        EmbeddingTable::random(n_classes * tokens_per_class + 1, 8, seed));
    EncoderConfig config;
    config.arch = Arch::kAveraging;
    config.proj_dim = 8;
    config.init_seed = seed + 1;
    setup.encoder = std::make_unique<Encoder>(config, setup.table);

    Rng rng(seed + 2);
    for (int cls = 0; cls < n_classes; ++cls) {
        for (int i = 0; i < per_class; ++i) {
            Utterance utt;
            const int len = 3 + static_cast<int>(rng.bounded(4));
            for (int t = 0; t < len; ++t)
                utt.tokens.push_back(1 + cls * tokens_per_class +
                                     static_cast<int>(rng.bounded(
                                         static_cast<std::uint64_t>(tokens_per_class))));
            setup.utterances.push_back(std::move(utt));
            setup.labels.push_back(cls);
        }
    }
    for (const Utterance& u : setup.utterances) setup.views.emplace_back(&u, 1);
    return setup;
}

}  // namespace

TEST_CASE("training on linearly separable data reaches 0.95 query accuracy") {
    PlantedSetup setup = planted(4, 24, 6, 21);
    EpisodeConfig config;
    config.n_episodes = 100;
    config.n_classes = 4;
    config.n_support = 5;
    config.n_query = 15;
    config.lr = 0.001;
    config.seed = 5;
    const std::vector<EpisodeStats> stats =
        train_episodes(*setup.encoder, setup.views, setup.labels, config);
    REQUIRE(stats.size() == 100);
    CHECK(stats.back().accuracy >= 0.95);
}

TEST_CASE("zero learning rate leaves parameters unchanged and reruns identically") {
    PlantedSetup setup = planted(3, 10, 4, 33);
    const Eigen::MatrixXd w_before = setup.encoder->params().at("proj.W").value;
    const Eigen::MatrixXd emb_before = setup.table->value;

    EpisodeConfig config;
    config.n_episodes = 5;
    config.n_classes = 3;
    config.n_support = 3;
    config.n_query = 4;
    config.lr = 0.0;
    config.seed = 8;
    const std::vector<EpisodeStats> first =
        train_episodes(*setup.encoder, setup.views, setup.labels, config);
    CHECK(setup.encoder->params().at("proj.W").value == w_before);
    CHECK(setup.table->value == emb_before);

    const std::vector<EpisodeStats> second =
        train_episodes(*setup.encoder, setup.views, setup.labels, config);
    for (std::size_t e = 0; e < first.size(); ++e) CHECK(first[e].loss == second[e].loss);
}

TEST_CASE("train_episodes loss gradient matches finite differences end to end") {
    PlantedSetup setup = planted(2, 4, 3, 55);
    // one fixed episode: 2 classes x (2 support + 1 query)
    const Episode episode = sample_episode(setup.labels, 2, 2, 1, 9);
    std::vector<ViewRef> batch_views;
    EpisodeLayout layout;
    for (const std::vector<int>& support : episode.support) {
        layout.support_counts.push_back(static_cast<int>(support.size()));
        for (int idx : support) batch_views.push_back(setup.views[static_cast<std::size_t>(idx)]);
    }
    for (std::size_t k = 0; k < episode.query.size(); ++k) {
        for (int idx : episode.query[k]) {
            batch_views.push_back(setup.views[static_cast<std::size_t>(idx)]);
            layout.query_labels.push_back(static_cast<int>(k));
        }
    }

    Encoder& encoder = *setup.encoder;
    EncodedBatch batch = encoder.forward(batch_views);
    const EpisodeLoss el = episode_loss(batch.outputs, layout);
    encoder.zero_grad();
    encoder.backward(batch, el.d_embeddings);

    std::vector<oracle::ParamRef> refs;
    for (auto& [name, tensor] : encoder.params()) refs.push_back({name, &tensor.value, &tensor.grad});
    refs.push_back({"embedding", &encoder.table().value, &encoder.table().grad});

    const auto loss_fn = [&]() {
        return episode_loss(encoder.encode(batch_views), layout).loss;
    };
    const oracle::GradCheck check = oracle::finite_difference_check(loss_fn, refs);
    INFO("worst tensor: ", check.worst_tensor);
    CHECK(check.max_rel <= 1e-3);
}
