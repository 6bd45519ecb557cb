#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "avk/error.hpp"

namespace avk {

/// Token ids into a Vocabulary. Non-empty by construction.
struct Utterance {
    std::vector<int> tokens;
};

/// One data point split into a query view (single utterance) and a content
/// view (the remaining utterances of the dialog, possibly empty).
struct TwoViewInstance {
    std::string id;
    Utterance query;
    std::vector<Utterance> content;
    int gold_label = -1;            // dense id, -1 when unlabeled
    bool degenerate_content = false;  // content view empty; encoded as zero vector
};

class Vocabulary {
public:
    static constexpr int kUnkId = 0;
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary() { add(kUnkToken); }

    int add(const std::string& word) {
        auto it = index_.find(word);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(words_.size());
        index_.emplace(word, id);
        words_.push_back(word);
        return id;
    }

    int id_or_unk(const std::string& word) const {
        auto it = index_.find(word);
        return it == index_.end() ? kUnkId : it->second;
    }

    bool contains(const std::string& word) const { return index_.count(word) != 0; }
    const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(words_.size()); }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

struct Corpus {
    std::vector<TwoViewInstance> instances;
    Vocabulary vocab;
    std::vector<std::string> gold_label_names;  // dense label id -> original string
    int gold_cluster_count = 0;
    int rejected_empty_query = 0;  // count of instances dropped at load

    int size() const { return static_cast<int>(instances.size()); }
    bool has_labels() const { return gold_cluster_count > 0; }
};

/// Untokenized instance as it appears in the JSONL schema.
struct RawInstance {
    std::string id;
    std::string view1;
    std::vector<std::string> view2;
    std::optional<std::string> label;
};

/// Lowercase, split on whitespace, strip leading/trailing punctuation.
/// Tokens that strip to nothing are dropped.
std::vector<std::string> tokenize(const std::string& text);

/// Assemble a corpus from raw instances: tokenizes, builds the vocabulary in
/// first-appearance order, rejects empty query views, flags empty content
/// views. Throws DataError on duplicate ids.
Corpus build_corpus(const std::vector<RawInstance>& raws);

/// Parse the JSONL corpus schema {"id", "view1", "view2", "label"?}.
/// Malformed lines raise DataError naming the line number.
std::vector<RawInstance> read_corpus_jsonl(const std::string& path);
void write_corpus_jsonl(const std::vector<RawInstance>& raws, const std::string& path);
std::string corpus_jsonl_string(const std::vector<RawInstance>& raws);

Corpus load_corpus(const std::string& path);

/// Disjoint exhaustive split; |dev| = round(fraction * n), deterministic
/// under seed. Throws DataError when n < 2.
std::pair<std::vector<int>, std::vector<int>> make_dev_split(const Corpus& corpus,
                                                             double fraction,
                                                             std::uint64_t seed);

/// View handles for encoders: a view is a span of utterances.
using ViewRef = std::span<const Utterance>;

std::vector<ViewRef> query_views(const Corpus& corpus);
std::vector<ViewRef> content_views(const Corpus& corpus);

}  // namespace avk
