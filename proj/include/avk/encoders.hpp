#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "avk/corpus.hpp"
#include "avk/embeddings.hpp"
#include "avk/params.hpp"

namespace avk {

enum class Arch { kAveraging, kSequence, kHierarchical };
enum class Activation { kTanh, kIdentity };

std::string to_string(Arch arch);
std::optional<Arch> arch_from_string(std::string_view name);

struct EncoderConfig {
    Arch arch = Arch::kAveraging;
    /// Averaging: projection output dimension.
    int proj_dim = 300;
    /// Recurrent archs: hidden size per direction; output is the
    /// concatenation of both directions (2 * hidden_dim).
    int hidden_dim = 300;
    /// Averaging projection nonlinearity; identity is for tests.
    Activation activation = Activation::kTanh;
    std::uint64_t init_seed = 1;
};

struct ForwardTrace;

/// Batch of encoded views plus the retained activations needed for one
/// backward pass. The trace is consumed by Encoder::backward.
struct EncodedBatch {
    Eigen::MatrixXd outputs;  // n x D
    std::unique_ptr<ForwardTrace> trace;

    EncodedBatch();
    EncodedBatch(EncodedBatch&&) noexcept;
    EncodedBatch& operator=(EncodedBatch&&) noexcept;
    ~EncodedBatch();
};

/// A view encoder: averaging (affine over mean token embeddings, tanh),
/// sequence (BiLSTM over one utterance), or hierarchical (utterance-level
/// BiLSTM, then a second BiLSTM over the utterance vectors). Empty views
/// encode to the zero vector.
class Encoder {
public:
    Encoder(EncoderConfig config, std::shared_ptr<EmbeddingTable> table);

    const EncoderConfig& config() const { return config_; }
    int output_dim() const;

    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    EmbeddingTable& table() { return *table_; }
    const EmbeddingTable& table() const { return *table_; }
    std::shared_ptr<EmbeddingTable> table_ptr() const { return table_; }

    /// Inference-only encoding; no activations retained.
    Eigen::MatrixXd encode(const std::vector<ViewRef>& views) const;

    /// Forward pass retaining activations for backward.
    EncodedBatch forward(const std::vector<ViewRef>& views) const;

    /// Accumulates d(sum_i <upstream_i, output_i>)/d(params, embeddings)
    /// into the gradient buffers. Consumes the batch trace; calling twice
    /// on the same batch is a usage error.
    void backward(EncodedBatch& batch, const Eigen::MatrixXd& upstream);

    void zero_grad();

    /// Copy values of identically named, identically shaped tensors from
    /// `other` (pretrained-initialization path). Returns how many were copied.
    int copy_parameters_from(const Encoder& other);

private:
    EncoderConfig config_;
    std::shared_ptr<EmbeddingTable> table_;
    ParameterSet params_;
};

/// Checkpoint container: architecture, dimensions, encoder tensors and the
/// embedding table. Binary format, bitwise round-trip.
struct Checkpoint {
    EncoderConfig config;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
    Eigen::MatrixXd embedding;
    std::vector<std::uint8_t> embedding_trainable;
};

Checkpoint make_checkpoint(const Encoder& encoder);
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuild an encoder (and a fresh shared table) from a checkpoint.
Encoder encoder_from_checkpoint(const Checkpoint& checkpoint,
                                std::shared_ptr<EmbeddingTable> table = nullptr);

}  // namespace avk
