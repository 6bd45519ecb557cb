#include <doctest.h>

#include <cstdio>
#include <memory>

#include "avk/encoders.hpp"
#include "avk/rng.hpp"
#include "oracles.hpp"

using namespace avk;

namespace {

std::shared_ptr<EmbeddingTable> small_table(int rows, int dim, std::uint64_t seed) {
    return std::make_shared<EmbeddingTable>(EmbeddingTable::random(rows, dim, seed));
}

Utterance utt(std::initializer_list<int> ids) { return Utterance{std::vector<int>(ids)}; }

std::vector<ViewRef> single_views(const std::vector<Utterance>& utts) {
    std::vector<ViewRef> views;
    for (const Utterance& u : utts) views.emplace_back(&u, 1);
    return views;
}

std::vector<oracle::ParamRef> encoder_param_refs(Encoder& encoder) {
    std::vector<oracle::ParamRef> refs;
    for (auto& [name, tensor] : encoder.params())
        refs.push_back({name, &tensor.value, &tensor.grad});
    refs.push_back({"embedding", &encoder.table().value, &encoder.table().grad});
    return refs;
}

// loss = sum_i <upstream_i, output_i> for a fixed random upstream
double gradcheck_encoder(Encoder& encoder, const std::vector<ViewRef>& views,
                         std::uint64_t upstream_seed, double tolerance) {
    Rng rng(upstream_seed);
    Eigen::MatrixXd upstream(static_cast<Eigen::Index>(views.size()), encoder.output_dim());
    for (Eigen::Index i = 0; i < upstream.rows(); ++i)
        for (Eigen::Index j = 0; j < upstream.cols(); ++j) upstream(i, j) = rng.uniform(-1, 1);

    EncodedBatch batch = encoder.forward(views);
    encoder.zero_grad();
    encoder.backward(batch, upstream);

    const auto loss = [&]() {
        return (encoder.encode(views).cwiseProduct(upstream)).sum();
    };
    const oracle::GradCheck check =
        oracle::finite_difference_check(loss, encoder_param_refs(encoder));
    INFO("worst tensor: ", check.worst_tensor);
    CHECK(check.max_rel <= tolerance);
    return check.max_rel;
}

}  // namespace

TEST_CASE("averaging encoder with identity projection returns the token embedding") {
    auto table = small_table(4, 3, 5);
    EncoderConfig config;
    config.arch = Arch::kAveraging;
    config.proj_dim = 3;
    config.activation = Activation::kIdentity;
    Encoder encoder(config, table);
    encoder.params().at("proj.W").value = Eigen::MatrixXd::Identity(3, 3);
    encoder.params().at("proj.b").value.setZero();

    const Utterance w = utt({2});
    const Eigen::MatrixXd out = encoder.encode(single_views({w}));
    CHECK(out.row(0) == table->value.row(2));
}

TEST_CASE("averaging encoder is permutation invariant over tokens") {
    auto table = small_table(8, 4, 6);
    EncoderConfig config;
    config.arch = Arch::kAveraging;
    config.proj_dim = 4;
    Encoder encoder(config, table);

    const Utterance a = utt({1, 3, 5, 2});
    const Utterance b = utt({5, 2, 1, 3});
    const Eigen::MatrixXd out = encoder.encode(single_views({a, b}));
    CHECK(out.row(0) == out.row(1));
}

TEST_CASE("empty views encode to the zero vector") {
    auto table = small_table(4, 3, 7);
    for (Arch arch : {Arch::kAveraging, Arch::kHierarchical}) {
        EncoderConfig config;
        config.arch = arch;
        config.proj_dim = 3;
        config.hidden_dim = 2;
        Encoder encoder(config, table);
        std::vector<ViewRef> views{ViewRef{}};
        const Eigen::MatrixXd out = encoder.encode(views);
        CHECK(out.row(0).norm() == 0.0);
    }
}

TEST_CASE("sequence encoder matches a scalar re-implementation of the recurrence") {
    auto table = small_table(6, 3, 11);
    EncoderConfig config;
    config.arch = Arch::kSequence;
    config.hidden_dim = 2;
    Encoder encoder(config, table);

    const Utterance input = utt({4, 1});
    const Eigen::MatrixXd out = encoder.encode(single_views({input}));
    REQUIRE(out.cols() == 4);

    auto cell = [&](const std::string& prefix) {
        const Eigen::MatrixXd& wx = encoder.params().at(prefix + ".Wx").value;
        const Eigen::MatrixXd& wh = encoder.params().at(prefix + ".Wh").value;
        const Eigen::MatrixXd& b = encoder.params().at(prefix + ".b").value;
        return std::make_tuple(
            std::function<double(int, int)>([&wx](int r, int c) { return wx(r, c); }),
            std::function<double(int, int)>([&wh](int r, int c) { return wh(r, c); }),
            std::function<double(int)>([&b](int r) { return b(r, 0); }));
    };

    std::vector<std::vector<double>> forward_inputs;
    for (int id : input.tokens) {
        std::vector<double> x;
        for (Eigen::Index c = 0; c < table->dim(); ++c) x.push_back(table->value(id, c));
        forward_inputs.push_back(std::move(x));
    }
    std::vector<std::vector<double>> backward_inputs(forward_inputs.rbegin(),
                                                     forward_inputs.rend());

    auto [fwx, fwh, fb] = cell("utt.fw");
    const std::vector<double> hf = oracle::scalar_lstm_final_h(fwx, fwh, fb, forward_inputs, 2);
    auto [bwx, bwh, bb] = cell("utt.bw");
    const std::vector<double> hb = oracle::scalar_lstm_final_h(bwx, bwh, bb, backward_inputs, 2);

    for (int j = 0; j < 2; ++j) {
        CHECK(out(0, j) == doctest::Approx(hf[static_cast<std::size_t>(j)]).epsilon(1e-12));
        CHECK(out(0, 2 + j) == doctest::Approx(hb[static_cast<std::size_t>(j)]).epsilon(1e-12));
    }
}

TEST_CASE("output dimension equals the configured D, including length-1 utterances") {
    auto table = small_table(5, 3, 13);
    const Utterance one = utt({1});
    const std::vector<Utterance> multi = {utt({1, 2}), utt({3})};

    EncoderConfig avg;
    avg.arch = Arch::kAveraging;
    avg.proj_dim = 7;
    CHECK(Encoder(avg, table).encode(single_views({one})).cols() == 7);

    EncoderConfig seq;
    seq.arch = Arch::kSequence;
    seq.hidden_dim = 3;
    CHECK(Encoder(seq, table).encode(single_views({one})).cols() == 6);

    EncoderConfig hier;
    hier.arch = Arch::kHierarchical;
    hier.hidden_dim = 3;
    std::vector<ViewRef> view{ViewRef(multi.data(), multi.size())};
    CHECK(Encoder(hier, table).encode(view).cols() == 6);
}

TEST_CASE("forward is deterministic") {
    auto table = small_table(9, 4, 17);
    EncoderConfig config;
    config.arch = Arch::kSequence;
    config.hidden_dim = 3;
    Encoder encoder(config, table);
    const Utterance input = utt({1, 2, 3, 4});
    CHECK(encoder.encode(single_views({input})) == encoder.encode(single_views({input})));
}

TEST_CASE("backward is linear in the upstream gradient") {
    auto table = small_table(6, 3, 19);
    EncoderConfig config;
    config.arch = Arch::kAveraging;
    config.proj_dim = 3;
    Encoder encoder(config, table);
    const Utterance a = utt({1, 2});
    const Utterance b = utt({3});

    Eigen::MatrixXd upstream(2, 3);
    upstream << 1, -2, 0.5, 0, 1, 2;

    EncodedBatch batch = encoder.forward(single_views({a, b}));
    encoder.zero_grad();
    encoder.backward(batch, Eigen::MatrixXd::Zero(2, 3));
    CHECK(encoder.params().at("proj.W").grad.norm() == 0.0);
    CHECK(encoder.table().grad.norm() == 0.0);

    batch = encoder.forward(single_views({a, b}));
    encoder.zero_grad();
    encoder.backward(batch, upstream);
    const Eigen::MatrixXd gw = encoder.params().at("proj.W").grad;
    const Eigen::MatrixXd ge = encoder.table().grad;

    batch = encoder.forward(single_views({a, b}));
    encoder.zero_grad();
    encoder.backward(batch, 2.0 * upstream);
    CHECK((encoder.params().at("proj.W").grad - 2.0 * gw).norm() < 1e-12);
    CHECK((encoder.table().grad - 2.0 * ge).norm() < 1e-12);
}

TEST_CASE("a consumed backward handle cannot be reused") {
    auto table = small_table(4, 2, 23);
    EncoderConfig config;
    config.arch = Arch::kAveraging;
    config.proj_dim = 2;
    Encoder encoder(config, table);
    const Utterance a = utt({1});
    EncodedBatch batch = encoder.forward(single_views({a}));
    const Eigen::MatrixXd upstream = Eigen::MatrixXd::Ones(1, 2);
    encoder.backward(batch, upstream);
    CHECK_THROWS_AS(encoder.backward(batch, upstream), UsageError);
}

TEST_CASE("gradients match central finite differences for every architecture") {
    const std::vector<Utterance> utts = {utt({1, 2, 3}), utt({4}), utt({2, 5, 5, 1}), utt({3, 4})};
    const std::vector<Utterance> dialog1 = {utt({1, 2}), utt({3, 4, 5})};
    const std::vector<Utterance> dialog2 = {utt({5, 1})};

    SUBCASE("averaging") {
        auto table = small_table(6, 4, 29);
        EncoderConfig config;
        config.arch = Arch::kAveraging;
        config.proj_dim = 3;
        Encoder encoder(config, table);
        gradcheck_encoder(encoder, single_views(utts), 1, 1e-3);
    }
    SUBCASE("sequence") {
        auto table = small_table(6, 3, 31);
        EncoderConfig config;
        config.arch = Arch::kSequence;
        config.hidden_dim = 3;
        Encoder encoder(config, table);
        gradcheck_encoder(encoder, single_views(utts), 2, 1e-3);
    }
    SUBCASE("hierarchical") {
        auto table = small_table(6, 3, 37);
        EncoderConfig config;
        config.arch = Arch::kHierarchical;
        config.hidden_dim = 2;
        Encoder encoder(config, table);
        std::vector<ViewRef> views{ViewRef(dialog1.data(), dialog1.size()),
                                   ViewRef(dialog2.data(), dialog2.size())};
        gradcheck_encoder(encoder, views, 3, 1e-3);
    }
}

TEST_CASE("adam follows the scalar update rule") {
    ParameterSet params;
    Tensor& t = params.add("w", 1, 1);
    t.value(0, 0) = 1.0;

    SUBCASE("zero gradient leaves the value untouched") {
        params.adam_step(0.1);
        CHECK(t.value(0, 0) == 1.0);
        CHECK(params.step_count() == 1);
    }
    SUBCASE("one unit-gradient step moves by about lr") {
        t.grad(0, 0) = 1.0;
        params.adam_step(0.001);
        // m-hat = 1, v-hat = 1: step = lr / (1 + eps)
        CHECK(t.value(0, 0) == doctest::Approx(1.0 - 0.001).epsilon(1e-6));
    }
    SUBCASE("two steps differ from one step at doubled rate") {
        ParameterSet twice;
        Tensor& a = twice.add("w", 1, 1);
        a.value(0, 0) = 1.0;
        a.grad(0, 0) = 1.0;
        twice.adam_step(0.001);
        a.grad(0, 0) = 1.0;
        twice.adam_step(0.001);

        ParameterSet once;
        Tensor& b = once.add("w", 1, 1);
        b.value(0, 0) = 1.0;
        b.grad(0, 0) = 1.0;
        once.adam_step(0.002);

        // scalar oracle: after two steps m-hat = v-hat = 1 both times
        const double expected_two = 1.0 - 0.001 / (1.0 + 1e-8) - 0.001 / (1.0 + 1e-8);
        CHECK(a.value(0, 0) == doctest::Approx(expected_two).epsilon(1e-9));
        CHECK(a.value(0, 0) != b.value(0, 0));
    }
    SUBCASE("non-finite gradients abort without touching parameters") {
        t.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(params.adam_step(0.001), NumericError);
        CHECK(t.value(0, 0) == 1.0);
        CHECK(params.step_count() == 0);
    }
}

TEST_CASE("checkpoints round-trip bitwise") {
    auto table = small_table(7, 3, 41);
    EncoderConfig config;
    config.arch = Arch::kSequence;
    config.hidden_dim = 2;
    config.init_seed = 9;
    Encoder encoder(config, table);

    const std::string path = "avk_test_ckpt.bin";
    save_checkpoint(path, make_checkpoint(encoder));
    const Checkpoint loaded = load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(loaded.config.arch == Arch::kSequence);
    CHECK(loaded.config.hidden_dim == 2);
    CHECK(loaded.embedding == table->value);

    const Encoder rebuilt = encoder_from_checkpoint(loaded);
    for (const auto& [name, tensor] : encoder.params())
        CHECK(rebuilt.params().at(name).value == tensor.value);

    const Utterance probe = utt({1, 2, 3});
    Encoder& original = encoder;
    Encoder copy = encoder_from_checkpoint(loaded);
    CHECK(copy.encode(single_views({probe})) == original.encode(single_views({probe})));
}

TEST_CASE("copy_parameters_from transfers matching tensors only") {
    auto table = small_table(5, 3, 43);
    EncoderConfig seq;
    seq.arch = Arch::kSequence;
    seq.hidden_dim = 2;
    seq.init_seed = 1;
    Encoder source(seq, table);

    EncoderConfig hier = seq;
    hier.arch = Arch::kHierarchical;
    hier.init_seed = 2;
    Encoder target(hier, table);

    const Eigen::MatrixXd ctx_before = target.params().at("ctx.fw.Wx").value;
    const int copied = target.copy_parameters_from(source);
    CHECK(copied == 6);  // both utterance-level cells
    CHECK(target.params().at("utt.fw.Wx").value == source.params().at("utt.fw.Wx").value);
    CHECK(target.params().at("ctx.fw.Wx").value == ctx_before);
}
