#include "avk/dataprep.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "avk/error.hpp"
#include "avk/rng.hpp"

namespace avk {

namespace {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

std::string trim(const std::string& s) {
    const std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

DuplicateGraph read_duplicate_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pairs file: " + path);
    DuplicateGraph graph;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw DataError("expected \"qid1,qid2\" at " + path + ":" + std::to_string(line_no));
        std::string a = trim(t.substr(0, comma));
        std::string b = trim(t.substr(comma + 1));
        if (a.empty() || b.empty())
            throw DataError("empty question id at " + path + ":" + std::to_string(line_no));
        if (line_no == 1 && (a == "qid1" || a == "id1")) continue;  // optional header
        graph.edges.emplace_back(std::move(a), std::move(b));
    }
    return graph;
}

std::vector<QuestionRecord> read_questions_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open questions file: " + path);
    std::vector<QuestionRecord> questions;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        const std::string where = path + ":" + std::to_string(line_no);
        if (j.is_discarded() || !j.is_object()) throw DataError("malformed json at " + where);
        if (!j.contains("id") || !j["id"].is_string())
            throw DataError("missing \"id\" at " + where);
        if (!j.contains("title") || !j["title"].is_string())
            throw DataError("missing \"title\" at " + where);
        QuestionRecord q;
        q.id = j["id"].get<std::string>();
        q.title = j["title"].get<std::string>();
        if (j.contains("answer_utterances")) {
            if (!j["answer_utterances"].is_array())
                throw DataError("\"answer_utterances\" must be an array at " + where);
            for (const auto& u : j["answer_utterances"]) {
                if (!u.is_string()) throw DataError("non-string answer utterance at " + where);
                q.answer_utterances.push_back(u.get<std::string>());
            }
        }
        questions.push_back(std::move(q));
    }
    return questions;
}

std::vector<std::vector<std::string>> connected_components(const DuplicateGraph& graph) {
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> ids;
    auto intern = [&](const std::string& id) {
        auto it = index.find(id);
        if (it != index.end()) return it->second;
        index.emplace(id, ids.size());
        ids.push_back(id);
        return ids.size() - 1;
    };

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& [a, b] : graph.edges) {
        const std::size_t ia = intern(a);
        const std::size_t ib = intern(b);
        if (ia == ib) continue;  // self-loops carry no information
        edges.emplace_back(ia, ib);
    }

    DisjointSet dsu(ids.size());
    for (const auto& [a, b] : edges) dsu.unite(a, b);

    std::unordered_map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[dsu.find(i)].push_back(ids[i]);

    std::vector<std::vector<std::string>> components;
    components.reserve(groups.size());
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        components.push_back(std::move(members));
    }
    std::sort(components.begin(), components.end(),
              [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                  if (a.size() != b.size()) return a.size() > b.size();
                  return a.front() < b.front();
              });
    return components;
}

std::vector<RawInstance> build_question_clusters(const DuplicateGraph& graph,
                                                 const std::vector<QuestionRecord>& questions,
                                                 int top_k, bool require_answer,
                                                 QuestionClusterSummary* summary) {
    if (top_k < 1) throw UsageError("top_k must be positive");
    const std::vector<std::vector<std::string>> components = connected_components(graph);
    if (top_k > static_cast<int>(components.size()))
        throw DataError("top_k exceeds the number of connected components (" +
                        std::to_string(components.size()) + ")");

    std::unordered_map<std::string, const QuestionRecord*> by_id;
    for (const QuestionRecord& q : questions) by_id.emplace(q.id, &q);

    std::vector<RawInstance> instances;
    int selected = 0;
    for (int rank = 0; rank < top_k; ++rank) {
        const std::vector<std::string>& members = components[static_cast<std::size_t>(rank)];
        for (const std::string& qid : members) {
            const auto it = by_id.find(qid);
            const QuestionRecord* record = it == by_id.end() ? nullptr : it->second;
            const bool has_answer = record && !record->answer_utterances.empty();
            if (require_answer && !has_answer) continue;
            if (!record) continue;  // no title text available
            RawInstance raw;
            raw.id = qid;
            raw.view1 = record->title;
            raw.view2 = record->answer_utterances;
            raw.label = "c" + std::to_string(rank);
            instances.push_back(std::move(raw));
            ++selected;
        }
    }

    if (summary) {
        std::size_t n_questions = 0;
        for (const auto& c : components) n_questions += c.size();
        summary->n_questions = static_cast<int>(n_questions);
        summary->n_pairs = static_cast<int>(graph.edges.size());
        summary->n_components = static_cast<int>(components.size());
        summary->largest_selected = static_cast<int>(components.front().size());
        summary->smallest_selected =
            static_cast<int>(components[static_cast<std::size_t>(top_k - 1)].size());
        summary->n_selected_questions = selected;
    }
    return instances;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

void SyntheticSpec::validate() const {
    if (n < 1) throw UsageError("synthetic: n must be positive");
    if (k < 1) throw UsageError("synthetic: K must be positive");
    if (n < k) throw UsageError("synthetic: need at least one instance per cluster");
    if (query_noise < 0.0 || query_noise > 1.0 || content_noise < 0.0 || content_noise > 1.0)
        throw UsageError("synthetic: noise rates must be in [0, 1]");
    if (query_vocab_per_cluster < 1 || content_vocab_per_cluster < 1 || noise_vocab < 1)
        throw UsageError("synthetic: vocabulary sizes must be positive");
    if (query_len_min < 1 || query_len_min > query_len_max)
        throw UsageError("synthetic: bad query length range");
    if (content_len_min < 1 || content_len_min > content_len_max)
        throw UsageError("synthetic: bad content length range");
    if (content_utts_min < 1 || content_utts_min > content_utts_max)
        throw UsageError("synthetic: bad content utterance range");
}

std::vector<RawInstance> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    auto cluster_token = [](const char* view, int cluster, int index) {
        std::ostringstream s;
        s << view << cluster << "_" << index;
        return s.str();
    };

    auto draw_int = [&rng](int lo, int hi) {
        return lo + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(hi - lo + 1)));
    };

    std::vector<RawInstance> instances;
    instances.reserve(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        const int cluster = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.k)));
        RawInstance raw;
        {
            std::ostringstream id;
            id << "syn-" << i;
            raw.id = id.str();
        }
        raw.label = "k" + std::to_string(cluster);

        auto draw_token = [&](const char* view, int vocab_size, double noise_rate) {
            if (rng.uniform() < noise_rate)
                return cluster_token("z", 0, draw_int(0, spec.noise_vocab - 1));
            return cluster_token(view, cluster, draw_int(0, vocab_size - 1));
        };

        std::ostringstream query;
        const int query_len = draw_int(spec.query_len_min, spec.query_len_max);
        for (int t = 0; t < query_len; ++t) {
            if (t) query << ' ';
            query << draw_token("q", spec.query_vocab_per_cluster, spec.query_noise);
        }
        raw.view1 = query.str();

        const int n_utts = draw_int(spec.content_utts_min, spec.content_utts_max);
        for (int u = 0; u < n_utts; ++u) {
            std::ostringstream utt;
            const int len = draw_int(spec.content_len_min, spec.content_len_max);
            for (int t = 0; t < len; ++t) {
                if (t) utt << ' ';
                utt << draw_token("c", spec.content_vocab_per_cluster, spec.content_noise);
            }
            raw.view2.push_back(utt.str());
        }
        instances.push_back(std::move(raw));
    }
    return instances;
}

}  // namespace avk
