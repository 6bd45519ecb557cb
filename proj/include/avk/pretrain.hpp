#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "avk/corpus.hpp"
#include "avk/encoders.hpp"

namespace avk {

struct PretrainConfig {
    int epochs = 10;
    int batch_size = 16;
    double lr = 0.001;
    double dev_fraction = 0.1;
    /// Stop after this many epochs without dev improvement; <= 0 disables.
    int patience = 3;
    /// Decoder hidden size for the autoencoder; 0 means the encoder output dim.
    int decoder_hidden = 0;
    std::uint64_t seed = 0;
};

struct PretrainLog {
    std::vector<double> train_loss;  // per epoch, mean per-token / per-pair NLL
    std::vector<double> dev_loss;    // empty when no dev set exists
    int best_epoch = 0;              // 0-based index into the loss vectors
    int epochs_run = 0;
};

/// Utterance encoder plus a unidirectional LSTM decoder whose input at each
/// step is the previous word vector concatenated with the utterance
/// embedding. Teacher-forced cross-entropy against the token sequence.
class Autoencoder {
public:
    Autoencoder(Encoder& encoder, int decoder_hidden, std::uint64_t seed);

    /// Mean per-token reconstruction NLL of the batch; no gradients.
    double evaluate(const std::vector<const Utterance*>& batch) const;

    /// Forward + backward, gradients accumulated (no optimizer step).
    double compute_gradients(const std::vector<const Utterance*>& batch);

    /// zero_grad + compute_gradients + Adam on encoder, decoder, embeddings.
    double train_batch(const std::vector<const Utterance*>& batch, double lr);

    /// Greedy argmax decode of as many steps as the input has tokens.
    std::vector<int> greedy_decode(const Utterance& utterance) const;

    Encoder& encoder() { return encoder_; }
    ParameterSet& decoder_params() { return decoder_; }

private:
    double run(const std::vector<const Utterance*>& batch, bool with_grad);

    Encoder& encoder_;
    ParameterSet decoder_;
    int hidden_;
};

/// Exact inner product of a target and a context embedding.
double qt_score(const Eigen::VectorXd& f_emb, const Eigen::VectorXd& g_emb);

/// Ordered adjacent-utterance pair within one dialog; utterance index 0 is
/// the query utterance, 1.. are content utterances.
struct QtPair {
    int instance = 0;
    int target_utt = 0;
    int context_utt = 0;
};

/// All (target, context) pairs of consecutive utterances per instance.
std::vector<QtPair> adjacent_pairs(const Corpus& corpus);

/// Two encoders of the same shape scored by inner product; in-batch contexts
/// are the candidate set and the true context is the positive.
class QuickThoughts {
public:
    QuickThoughts(Encoder& target_encoder, std::uint64_t context_seed);

    double evaluate(const Corpus& corpus, std::span<const QtPair> batch) const;
    double compute_gradients(const Corpus& corpus, std::span<const QtPair> batch);
    double train_batch(const Corpus& corpus, std::span<const QtPair> batch, double lr);

    Encoder& target_encoder() { return target_; }
    Encoder& context_encoder() { return *context_; }

private:
    double run(const Corpus& corpus, std::span<const QtPair> batch, bool with_grad);

    Encoder& target_;
    std::unique_ptr<Encoder> context_;
};

/// Trains the passed encoder (and its embedding table) in place; restores the
/// best-dev-epoch parameters before returning.
PretrainLog pretrain_autoencoder(const Corpus& corpus, Encoder& encoder,
                                 const PretrainConfig& config);
PretrainLog pretrain_quickthoughts(const Corpus& corpus, Encoder& encoder,
                                   const PretrainConfig& config);

}  // namespace avk
