#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "avk/corpus.hpp"

namespace avk {

/// Undirected duplicate-pair graph over question ids. Only questions that
/// appear in at least one pair are vertices.
struct DuplicateGraph {
    std::vector<std::pair<std::string, std::string>> edges;
};

DuplicateGraph read_duplicate_pairs_csv(const std::string& path);

struct QuestionRecord {
    std::string id;
    std::string title;
    std::vector<std::string> answer_utterances;
};

/// JSONL: {"id", "title", "answer_utterances": [str, ...]} per line.
std::vector<QuestionRecord> read_questions_jsonl(const std::string& path);

struct QuestionClusterSummary {
    int n_questions = 0;       // distinct questions appearing in pairs
    int n_pairs = 0;
    int n_components = 0;
    int largest_selected = 0;  // size of the biggest selected cluster (before answer filter)
    int smallest_selected = 0;
    int n_selected_questions = 0;  // after optional answer filtering
};

/// Connected components of the duplicate graph become intent clusters.
/// Components are ranked by size (ties: smallest member id), the top_k
/// largest are kept, and questions lacking answers are dropped after the
/// selection when require_answer is set. Labels are "c0".."c<top_k-1>" in
/// rank order. Questions absent from `questions` keep their id as title only
/// if present; otherwise they are dropped with the answer filter semantics.
std::vector<RawInstance> build_question_clusters(const DuplicateGraph& graph,
                                                 const std::vector<QuestionRecord>& questions,
                                                 int top_k, bool require_answer,
                                                 QuestionClusterSummary* summary = nullptr);

/// Connected components as sorted member lists, rank-ordered (size
/// descending, ties by smallest member id). Exposed for the component
/// statistics checks.
std::vector<std::vector<std::string>> connected_components(const DuplicateGraph& graph);

// ---------------------------------------------------------------------------
// Synthetic planted-cluster corpus

struct SyntheticSpec {
    int n = 1000;
    int k = 10;
    int query_vocab_per_cluster = 30;
    int content_vocab_per_cluster = 12;
    int noise_vocab = 120;
    double query_noise = 0.5;
    double content_noise = 0.1;
    int query_len_min = 5;
    int query_len_max = 12;
    int content_len_min = 6;
    int content_len_max = 14;
    int content_utts_min = 2;
    int content_utts_max = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Planted-cluster two-view corpus: cluster drawn uniformly per instance;
/// query/content tokens come from the cluster's own vocabulary except with
/// the per-view noise probability, where they come from a shared noise
/// vocabulary. Deterministic under spec + seed.
std::vector<RawInstance> generate_synthetic(const SyntheticSpec& spec);

}  // namespace avk
