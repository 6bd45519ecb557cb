#include "avk/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avk/lstm.hpp"
#include "avk/rng.hpp"

namespace avk {

// ---------------------------------------------------------------------------
// Autoencoder

Autoencoder::Autoencoder(Encoder& encoder, int decoder_hidden, std::uint64_t seed)
    : encoder_(encoder),
      hidden_(decoder_hidden > 0 ? decoder_hidden : encoder.output_dim()) {
    Rng rng(seed);
    const Eigen::Index emb = encoder_.table().dim();
    const Eigen::Index vocab = encoder_.table().rows();
    const Eigen::Index input = emb + encoder_.output_dim();
    ParameterSet::init_uniform(decoder_.add("dec.Wx", 4 * hidden_, input), 0.08, rng);
    ParameterSet::init_uniform(decoder_.add("dec.Wh", 4 * hidden_, hidden_), 0.08, rng);
    decoder_.add("dec.b", 4 * hidden_, 1);
    ParameterSet::init_uniform(decoder_.add("out.W", vocab, hidden_), 0.08, rng);
    decoder_.add("out.b", vocab, 1);
    ParameterSet::init_uniform(decoder_.add("bos", emb, 1), 0.08, rng);
}

double Autoencoder::run(const std::vector<const Utterance*>& batch, bool with_grad) {
    if (batch.empty()) throw UsageError("empty autoencoder batch");
    EmbeddingTable& table = encoder_.table();
    const Eigen::Index emb = table.dim();
    const Eigen::Index d = encoder_.output_dim();

    std::vector<ViewRef> views;
    views.reserve(batch.size());
    long total_tokens = 0;
    for (const Utterance* utt : batch) {
        views.emplace_back(utt, 1);
        total_tokens += static_cast<long>(utt->tokens.size());
    }
    EncodedBatch encoded = with_grad ? encoder_.forward(views) : EncodedBatch{};
    const Eigen::MatrixXd outputs = with_grad ? encoded.outputs : encoder_.encode(views);
    const double inv_tokens = 1.0 / static_cast<double>(total_tokens);

    const Eigen::MatrixXd& wx = decoder_.at("dec.Wx").value;
    const Eigen::MatrixXd& wh = decoder_.at("dec.Wh").value;
    const Eigen::VectorXd b = decoder_.at("dec.b").value.col(0);
    const Eigen::MatrixXd& wout = decoder_.at("out.W").value;
    const Eigen::VectorXd bout = decoder_.at("out.b").value.col(0);
    const Eigen::VectorXd bos = decoder_.at("bos").value.col(0);

    double nll = 0.0;
    Eigen::MatrixXd d_outputs = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());

    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const std::vector<int>& tokens = batch[bi]->tokens;
        const Eigen::Index steps = static_cast<Eigen::Index>(tokens.size());
        const Eigen::VectorXd utt_emb = outputs.row(static_cast<Eigen::Index>(bi)).transpose();

        Eigen::MatrixXd x(emb + d, steps);
        for (Eigen::Index t = 0; t < steps; ++t) {
            x.col(t).segment(0, emb) =
                t == 0 ? bos
                       : Eigen::VectorXd(
                             table.value.row(tokens[static_cast<std::size_t>(t - 1)]).transpose());
            x.col(t).segment(emb, d) = utt_emb;
        }
        lstm::Trace trace;
        lstm::forward(wx, wh, b, x, trace);

        Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(hidden_, steps);
        for (Eigen::Index t = 0; t < steps; ++t) {
            const int target = tokens[static_cast<std::size_t>(t)];
            Eigen::VectorXd logits = wout * trace.h.col(t + 1) + bout;
            const double max_logit = logits.maxCoeff();
            const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
            nll += -(logits(target) - lse);
            if (with_grad) {
                Eigen::VectorXd dlogits = ((logits.array() - lse).exp()) * inv_tokens;
                dlogits(target) -= inv_tokens;
                decoder_.at("out.W").grad.noalias() += dlogits * trace.h.col(t + 1).transpose();
                decoder_.at("out.b").grad.col(0) += dlogits;
                dh.col(t).noalias() = wout.transpose() * dlogits;
            }
        }
        if (!with_grad) continue;

        const Eigen::MatrixXd dx =
            lstm::backward(wx, wh, trace, dh, decoder_.at("dec.Wx").grad,
                           decoder_.at("dec.Wh").grad, decoder_.at("dec.b").grad);
        for (Eigen::Index t = 0; t < steps; ++t) {
            if (t == 0)
                decoder_.at("bos").grad.col(0) += dx.col(t).segment(0, emb);
            else
                table.grad.row(tokens[static_cast<std::size_t>(t - 1)]) +=
                    dx.col(t).segment(0, emb).transpose();
            d_outputs.row(static_cast<Eigen::Index>(bi)) += dx.col(t).segment(emb, d).transpose();
        }
    }

    if (with_grad) encoder_.backward(encoded, d_outputs);
    return nll * inv_tokens;
}

double Autoencoder::evaluate(const std::vector<const Utterance*>& batch) const {
    return const_cast<Autoencoder*>(this)->run(batch, false);
}

double Autoencoder::compute_gradients(const std::vector<const Utterance*>& batch) {
    return run(batch, true);
}

double Autoencoder::train_batch(const std::vector<const Utterance*>& batch, double lr) {
    encoder_.zero_grad();
    decoder_.zero_grad();
    const double loss = compute_gradients(batch);
    encoder_.params().adam_step(lr);
    decoder_.adam_step(lr);
    encoder_.table().adam_step(lr);
    return loss;
}

std::vector<int> Autoencoder::greedy_decode(const Utterance& utterance) const {
    const EmbeddingTable& table = encoder_.table();
    const Eigen::Index emb = table.dim();
    const Eigen::Index d = encoder_.output_dim();
    std::vector<ViewRef> views{ViewRef(&utterance, 1)};
    const Eigen::VectorXd utt_emb = encoder_.encode(views).row(0).transpose();

    const Eigen::MatrixXd& wx = decoder_.at("dec.Wx").value;
    const Eigen::MatrixXd& wh = decoder_.at("dec.Wh").value;
    const Eigen::VectorXd b = decoder_.at("dec.b").value.col(0);
    const Eigen::MatrixXd& wout = decoder_.at("out.W").value;
    const Eigen::VectorXd bout = decoder_.at("out.b").value.col(0);

    const Eigen::Index hidden = hidden_;
    auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

    std::vector<int> decoded;
    Eigen::VectorXd prev_word = decoder_.at("bos").value.col(0);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd x(emb + d);
    for (std::size_t t = 0; t < utterance.tokens.size(); ++t) {
        x.segment(0, emb) = prev_word;
        x.segment(emb, d) = utt_emb;
        const Eigen::VectorXd z = wx * x + wh * h + b;
        const Eigen::VectorXd gi = z.segment(0, hidden).unaryExpr(sigmoid);
        const Eigen::VectorXd gf = z.segment(hidden, hidden).unaryExpr(sigmoid);
        const Eigen::VectorXd gg = z.segment(2 * hidden, hidden).array().tanh();
        const Eigen::VectorXd go = z.segment(3 * hidden, hidden).unaryExpr(sigmoid);
        c = gf.cwiseProduct(c) + gi.cwiseProduct(gg);
        h = go.cwiseProduct(c.array().tanh().matrix());

        Eigen::VectorXd logits = wout * h + bout;
        Eigen::Index best = 0;
        logits.maxCoeff(&best);
        decoded.push_back(static_cast<int>(best));
        prev_word = table.value.row(best).transpose();
    }
    return decoded;
}

// ---------------------------------------------------------------------------
// Quick thoughts

double qt_score(const Eigen::VectorXd& f_emb, const Eigen::VectorXd& g_emb) {
    if (f_emb.size() != g_emb.size()) throw UsageError("qt_score dimension mismatch");
    return f_emb.dot(g_emb);
}

std::vector<QtPair> adjacent_pairs(const Corpus& corpus) {
    std::vector<QtPair> pairs;
    for (int i = 0; i < corpus.size(); ++i) {
        const TwoViewInstance& inst = corpus.instances[static_cast<std::size_t>(i)];
        const int n_utts = 1 + static_cast<int>(inst.content.size());
        for (int u = 0; u + 1 < n_utts; ++u) pairs.push_back({i, u, u + 1});
    }
    return pairs;
}

namespace {

const Utterance& utterance_at(const Corpus& corpus, int instance, int utt) {
    const TwoViewInstance& inst = corpus.instances[static_cast<std::size_t>(instance)];
    if (utt == 0) return inst.query;
    return inst.content[static_cast<std::size_t>(utt - 1)];
}

}  // namespace

QuickThoughts::QuickThoughts(Encoder& target_encoder, std::uint64_t context_seed)
    : target_(target_encoder) {
    EncoderConfig context_config = target_encoder.config();
    context_config.init_seed = context_seed;
    context_ = std::make_unique<Encoder>(context_config, target_encoder.table_ptr());
}

double QuickThoughts::run(const Corpus& corpus, std::span<const QtPair> batch, bool with_grad) {
    if (batch.empty()) throw UsageError("empty quick-thoughts batch");
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());

    std::vector<ViewRef> target_views;
    std::vector<ViewRef> context_views;
    for (const QtPair& pair : batch) {
        target_views.emplace_back(&utterance_at(corpus, pair.instance, pair.target_utt), 1);
        context_views.emplace_back(&utterance_at(corpus, pair.instance, pair.context_utt), 1);
    }

    EncodedBatch fb, gb;
    Eigen::MatrixXd f_out, g_out;
    if (with_grad) {
        fb = target_.forward(target_views);
        gb = context_->forward(context_views);
        f_out = fb.outputs;
        g_out = gb.outputs;
    } else {
        f_out = target_.encode(target_views);
        g_out = context_->encode(context_views);
    }

    // Scores of every target against every in-batch context.
    const Eigen::MatrixXd scores = f_out * g_out.transpose();
    double nll = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd dscores(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double max_s = scores.row(i).maxCoeff();
        const double lse = max_s + std::log((scores.row(i).array() - max_s).exp().sum());
        nll += -(scores(i, i) - lse);
        if (with_grad) {
            dscores.row(i) = (scores.row(i).array() - lse).exp() * inv_n;
            dscores(i, i) -= inv_n;
        }
    }
    if (with_grad) {
        target_.backward(fb, dscores * g_out);
        context_->backward(gb, dscores.transpose() * f_out);
    }
    return nll * inv_n;
}

double QuickThoughts::evaluate(const Corpus& corpus, std::span<const QtPair> batch) const {
    return const_cast<QuickThoughts*>(this)->run(corpus, batch, false);
}

double QuickThoughts::compute_gradients(const Corpus& corpus, std::span<const QtPair> batch) {
    return run(corpus, batch, true);
}

double QuickThoughts::train_batch(const Corpus& corpus, std::span<const QtPair> batch, double lr) {
    target_.zero_grad();
    context_->params().zero_grad();  // shared table already cleared by target_
    const double loss = compute_gradients(corpus, batch);
    target_.params().adam_step(lr);
    context_->params().adam_step(lr);
    target_.table().adam_step(lr);
    return loss;
}

// ---------------------------------------------------------------------------
// Epoch drivers

namespace {

struct Snapshot {
    std::vector<Eigen::MatrixXd> encoder_values;
    Eigen::MatrixXd embedding;
};

Snapshot take_snapshot(const Encoder& encoder) {
    return {encoder.params().snapshot_values(), encoder.table().value};
}

void restore_snapshot(Encoder& encoder, const Snapshot& snap) {
    encoder.params().restore_values(snap.encoder_values);
    encoder.table().value = snap.embedding;
}

/// Splits instance indices into train/dev; dev may be empty for tiny corpora.
std::pair<std::vector<int>, std::vector<int>> pretrain_split(const Corpus& corpus,
                                                             const PretrainConfig& config) {
    std::vector<int> train_ids;
    std::vector<int> dev_ids;
    const auto n = corpus.size();
    if (n >= 2 && std::llround(config.dev_fraction * n) >= 1) {
        std::tie(train_ids, dev_ids) =
            make_dev_split(corpus, config.dev_fraction, Rng::derive(config.seed, 0x511));
    } else {
        for (int i = 0; i < n; ++i) train_ids.push_back(i);
    }
    return {train_ids, dev_ids};
}

template <typename Item, typename TrainBatch, typename EvalBatch>
PretrainLog epoch_loop(std::vector<Item> train_items, const std::vector<Item>& dev_items,
                       Encoder& encoder, const PretrainConfig& config, TrainBatch&& train_batch,
                       EvalBatch&& eval_batch) {
    if (train_items.empty()) throw DataError("nothing to pretrain on");
    const std::size_t batch_size = static_cast<std::size_t>(std::max(1, config.batch_size));

    PretrainLog log;
    double best_metric = std::numeric_limits<double>::infinity();
    Snapshot best = take_snapshot(encoder);
    int bad_epochs = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(Rng::derive(config.seed, 0x700 + static_cast<std::uint64_t>(epoch)));
        rng.shuffle(train_items);

        double train_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < train_items.size(); start += batch_size) {
            const std::size_t end = std::min(train_items.size(), start + batch_size);
            std::vector<Item> batch(train_items.begin() + static_cast<std::ptrdiff_t>(start),
                                    train_items.begin() + static_cast<std::ptrdiff_t>(end));
            train_sum += train_batch(batch);
            ++batches;
        }
        log.train_loss.push_back(train_sum / std::max(1, batches));

        double metric = log.train_loss.back();
        if (!dev_items.empty()) {
            double dev_sum = 0.0;
            int dev_batches = 0;
            for (std::size_t start = 0; start < dev_items.size(); start += batch_size) {
                const std::size_t end = std::min(dev_items.size(), start + batch_size);
                std::vector<Item> batch(dev_items.begin() + static_cast<std::ptrdiff_t>(start),
                                        dev_items.begin() + static_cast<std::ptrdiff_t>(end));
                dev_sum += eval_batch(batch);
                ++dev_batches;
            }
            metric = dev_sum / std::max(1, dev_batches);
            log.dev_loss.push_back(metric);
        }

        ++log.epochs_run;
        if (metric < best_metric) {
            best_metric = metric;
            best = take_snapshot(encoder);
            log.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (config.patience > 0 && bad_epochs >= config.patience) break;
        }
    }

    restore_snapshot(encoder, best);
    return log;
}

}  // namespace

PretrainLog pretrain_autoencoder(const Corpus& corpus, Encoder& encoder,
                                 const PretrainConfig& config) {
    if (corpus.size() == 0) throw DataError("empty corpus");
    auto [train_ids, dev_ids] = pretrain_split(corpus, config);

    auto collect = [&corpus](const std::vector<int>& ids) {
        std::vector<const Utterance*> utts;
        for (int i : ids) {
            const TwoViewInstance& inst = corpus.instances[static_cast<std::size_t>(i)];
            utts.push_back(&inst.query);
            for (const Utterance& utt : inst.content) utts.push_back(&utt);
        }
        return utts;
    };

    Autoencoder model(encoder, config.decoder_hidden, Rng::derive(config.seed, 0xae));
    return epoch_loop(
        collect(train_ids), collect(dev_ids), encoder, config,
        [&](const std::vector<const Utterance*>& batch) {
            return model.train_batch(batch, config.lr);
        },
        [&](const std::vector<const Utterance*>& batch) { return model.evaluate(batch); });
}

PretrainLog pretrain_quickthoughts(const Corpus& corpus, Encoder& encoder,
                                   const PretrainConfig& config) {
    if (corpus.size() == 0) throw DataError("empty corpus");
    auto [train_ids, dev_ids] = pretrain_split(corpus, config);

    std::vector<char> in_dev(static_cast<std::size_t>(corpus.size()), 0);
    for (int i : dev_ids) in_dev[static_cast<std::size_t>(i)] = 1;
    std::vector<QtPair> train_pairs;
    std::vector<QtPair> dev_pairs;
    for (const QtPair& pair : adjacent_pairs(corpus))
        (in_dev[static_cast<std::size_t>(pair.instance)] ? dev_pairs : train_pairs).push_back(pair);
    if (train_pairs.empty())
        throw DataError("no adjacent utterance pairs; quick thoughts needs dialogs with 2+ turns");

    QuickThoughts model(encoder, Rng::derive(config.seed, 0x97));
    return epoch_loop(
        train_pairs, dev_pairs, encoder, config,
        [&](const std::vector<QtPair>& batch) {
            return model.train_batch(corpus, std::span<const QtPair>(batch), config.lr);
        },
        [&](const std::vector<QtPair>& batch) {
            return model.evaluate(corpus, std::span<const QtPair>(batch));
        });
}

}  // namespace avk
