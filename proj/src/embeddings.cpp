#include "avk/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "avk/rng.hpp"

namespace avk {

EmbeddingTable EmbeddingTable::random(Eigen::Index rows, Eigen::Index dim, std::uint64_t seed) {
    EmbeddingTable table(rows, dim);
    Rng rng(seed);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) table.value(r, c) = rng.uniform(-0.1, 0.1);
    return table;
}

void EmbeddingTable::adam_step(double lr, double beta1, double beta2, double eps) {
    if (!grads_finite()) throw NumericError("non-finite gradient in embedding adam_step");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
        if (!trainable[static_cast<std::size_t>(r)]) continue;
        m_.row(r) = beta1 * m_.row(r) + (1.0 - beta1) * grad.row(r);
        v_.row(r) = beta2 * v_.row(r) + (1.0 - beta2) * grad.row(r).cwiseProduct(grad.row(r));
        value.row(r) -=
            (lr * (m_.row(r) / bc1).array() / ((v_.row(r) / bc2).array().sqrt() + eps)).matrix();
    }
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);

    Eigen::Index dim = -1;
    std::vector<std::pair<int, std::vector<double>>> found;  // vocab id -> vector
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<double> vec;
        double x;
        while (ss >> x) vec.push_back(x);
        if (dim < 0) {
            if (vec.empty()) throw DataError("first embedding line has no values: " + path);
            dim = static_cast<Eigen::Index>(vec.size());
        } else if (static_cast<Eigen::Index>(vec.size()) != dim) {
            throw DataError("embedding dimension mismatch for word \"" + word + "\": expected " +
                            std::to_string(dim) + ", got " + std::to_string(vec.size()));
        }
        if (vocab.contains(word)) found.emplace_back(vocab.id_or_unk(word), std::move(vec));
    }
    if (dim < 0) throw DataError("embedding file is empty: " + path);

    EmbeddingTable table(vocab.size(), dim);
    std::vector<bool> filled(static_cast<std::size_t>(vocab.size()), false);
    for (const auto& [id, vec] : found) {
        for (Eigen::Index c = 0; c < dim; ++c) table.value(id, c) = vec[static_cast<std::size_t>(c)];
        filled[static_cast<std::size_t>(id)] = true;
    }
    // Missing words (UNK included) drawn in row order from one seeded stream,
    // so the same file + vocab + seed reproduces bitwise.
    Rng rng(seed);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        if (filled[static_cast<std::size_t>(r)]) continue;
        for (Eigen::Index c = 0; c < dim; ++c) table.value(r, c) = rng.uniform(-0.1, 0.1);
    }
    return table;
}

}  // namespace avk
