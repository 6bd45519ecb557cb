#include "avk/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "avk/rng.hpp"

namespace avk {

namespace {

bool is_strippable(unsigned char c) { return std::ispunct(c) != 0; }

std::string normalize_token(std::string_view raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && is_strippable(static_cast<unsigned char>(raw[begin]))) ++begin;
    while (end > begin && is_strippable(static_cast<unsigned char>(raw[end - 1]))) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            std::string tok = normalize_token(std::string_view(text).substr(start, i - start));
            if (!tok.empty()) tokens.push_back(std::move(tok));
        }
    }
    return tokens;
}

Corpus build_corpus(const std::vector<RawInstance>& raws) {
    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    std::unordered_map<std::string, int> label_ids;

    for (const RawInstance& raw : raws) {
        if (!seen_ids.insert(raw.id).second)
            throw DataError("duplicate instance id: " + raw.id);

        TwoViewInstance inst;
        inst.id = raw.id;
        for (const std::string& tok : tokenize(raw.view1))
            inst.query.tokens.push_back(corpus.vocab.add(tok));
        if (inst.query.tokens.empty()) {
            ++corpus.rejected_empty_query;
            continue;
        }
        for (const std::string& utt_text : raw.view2) {
            Utterance utt;
            for (const std::string& tok : tokenize(utt_text))
                utt.tokens.push_back(corpus.vocab.add(tok));
            if (!utt.tokens.empty()) inst.content.push_back(std::move(utt));
        }
        inst.degenerate_content = inst.content.empty();
        if (raw.label) {
            auto [it, inserted] =
                label_ids.emplace(*raw.label, static_cast<int>(corpus.gold_label_names.size()));
            if (inserted) corpus.gold_label_names.push_back(*raw.label);
            inst.gold_label = it->second;
        }
        corpus.instances.push_back(std::move(inst));
    }
    corpus.gold_cluster_count = static_cast<int>(corpus.gold_label_names.size());
    return corpus;
}

std::vector<RawInstance> read_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    std::vector<RawInstance> raws;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        const std::string where = path + ":" + std::to_string(line_no);
        if (j.is_discarded()) throw DataError("malformed json at " + where);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
            throw DataError("missing or invalid \"id\" at " + where);
        if (!j.contains("view1") || !j["view1"].is_string())
            throw DataError("missing or invalid \"view1\" at " + where);
        if (!j.contains("view2") || !j["view2"].is_array())
            throw DataError("missing or invalid \"view2\" at " + where);

        RawInstance raw;
        raw.id = j["id"].get<std::string>();
        raw.view1 = j["view1"].get<std::string>();
        for (const auto& u : j["view2"]) {
            if (!u.is_string()) throw DataError("non-string utterance in \"view2\" at " + where);
            raw.view2.push_back(u.get<std::string>());
        }
        if (j.contains("label") && !j["label"].is_null()) {
            if (!j["label"].is_string()) throw DataError("non-string \"label\" at " + where);
            raw.label = j["label"].get<std::string>();
        }
        raws.push_back(std::move(raw));
    }
    return raws;
}

std::string corpus_jsonl_string(const std::vector<RawInstance>& raws) {
    std::ostringstream out;
    for (const RawInstance& raw : raws) {
        nlohmann::json j;
        j["id"] = raw.id;
        j["view1"] = raw.view1;
        j["view2"] = raw.view2;
        if (raw.label) j["label"] = *raw.label;
        out << j.dump() << "\n";
    }
    return out.str();
}

void write_corpus_jsonl(const std::vector<RawInstance>& raws, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write corpus file: " + path);
    out << corpus_jsonl_string(raws);
}

Corpus load_corpus(const std::string& path) { return build_corpus(read_corpus_jsonl(path)); }

std::pair<std::vector<int>, std::vector<int>> make_dev_split(const Corpus& corpus,
                                                             double fraction,
                                                             std::uint64_t seed) {
    const int n = corpus.size();
    if (n < 2) throw DataError("dev split needs at least 2 instances");
    if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("dev fraction must be in (0, 1)");

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);

    // Round half away from zero; n=3, fraction=0.5 gives a dev set of 2.
    auto dev_size = static_cast<std::size_t>(std::llround(fraction * n));
    std::vector<int> dev(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dev_size));
    std::vector<int> train(order.begin() + static_cast<std::ptrdiff_t>(dev_size), order.end());
    std::sort(dev.begin(), dev.end());
    std::sort(train.begin(), train.end());
    return {train, dev};
}

std::vector<ViewRef> query_views(const Corpus& corpus) {
    std::vector<ViewRef> views;
    views.reserve(corpus.instances.size());
    for (const TwoViewInstance& inst : corpus.instances) views.emplace_back(&inst.query, 1);
    return views;
}

std::vector<ViewRef> content_views(const Corpus& corpus) {
    std::vector<ViewRef> views;
    views.reserve(corpus.instances.size());
    for (const TwoViewInstance& inst : corpus.instances)
        views.emplace_back(inst.content.data(), inst.content.size());
    return views;
}

}  // namespace avk
