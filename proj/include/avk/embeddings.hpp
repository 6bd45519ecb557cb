#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "avk/corpus.hpp"

namespace avk {

/// Token-id-indexed dense vectors with gradient and Adam state. Row 0 is the
/// UNK row. Rows flagged non-trainable are skipped by adam_step.
class EmbeddingTable {
public:
    EmbeddingTable(Eigen::Index rows, Eigen::Index dim)
        : value(Eigen::MatrixXd::Zero(rows, dim)),
          grad(Eigen::MatrixXd::Zero(rows, dim)),
          trainable(static_cast<std::size_t>(rows), 1),
          m_(Eigen::MatrixXd::Zero(rows, dim)),
          v_(Eigen::MatrixXd::Zero(rows, dim)) {}

    /// All rows drawn from uniform(-0.1, 0.1), the same rule used for words
    /// missing from a pretrained vector file.
    static EmbeddingTable random(Eigen::Index rows, Eigen::Index dim, std::uint64_t seed);

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index dim() const { return value.cols(); }

    void zero_grad() { grad.setZero(); }
    bool grads_finite() const { return grad.allFinite(); }
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    long long step_count() const { return step_; }

    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::vector<std::uint8_t> trainable;

private:
    Eigen::MatrixXd m_;
    Eigen::MatrixXd v_;
    long long step_ = 0;
};

/// Plain-text embedding format: "word v1 ... vD" per line, no header.
/// Dimension is inferred from the first line; vocabulary words absent from
/// the file (and UNK) are drawn from uniform(-0.1, 0.1) under `seed`.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               std::uint64_t seed = 0x5eedull);

}  // namespace avk
